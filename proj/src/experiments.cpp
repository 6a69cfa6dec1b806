#include "lamegap/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <ostream>
#include <thread>

namespace lamegap {

namespace {

bool point_in_triangle(const Vec2& p, const Vec2& a, const Vec2& b,
                       const Vec2& c) {
  auto side = [](const Vec2& u, const Vec2& v, const Vec2& q) {
    return (v.x() - u.x()) * (q.y() - u.y()) -
           (v.y() - u.y()) * (q.x() - u.x());
  };
  const double tol = -1e-13;
  return side(a, b, p) >= tol && side(b, c, p) >= tol && side(c, a, p) >= tol;
}

double fiber_sup_gradient(const Mesh& mesh, const VectorField& u,
                          double eps) {
  double best = 0.0;
  for (int t = 0; t < mesh.tri_count(); ++t) {
    const auto& tr = mesh.triangles[t];
    if (tr.region != Region::Matrix) continue;
    double xmin = mesh.nodes[tr.v[0]].x(), xmax = xmin;
    for (int v : tr.v) {
      xmin = std::min(xmin, mesh.nodes[v].x());
      xmax = std::max(xmax, mesh.nodes[v].x());
    }
    if (!(xmin < 0.0 && xmax > 0.0)) continue;
    double lo = std::numeric_limits<double>::max(), hi = -lo;
    for (int k = 0; k < 3; ++k) {
      const Vec2 p = mesh.nodes[tr.v[k]];
      const Vec2 r = mesh.nodes[tr.v[(k + 1) % 3]];
      if ((p.x() < 0.0) == (r.x() < 0.0)) continue;
      const double s = -p.x() / (r.x() - p.x());
      const double y = p.y() + s * (r.y() - p.y());
      lo = std::min(lo, y);
      hi = std::max(hi, y);
    }
    if (lo < hi && hi > -0.75 * eps && lo < 0.75 * eps)
      best = std::max(best, element_gradient(mesh, u, t).norm());
  }
  return best;
}

SweepRow run_row(const SweepConfig& cfg, double eps) {
  SweepRow row;
  row.epsilon = eps;
  GapGeometry geom = cfg.geometry;
  geom.epsilon = eps;

  const Mesh mesh = build_mesh(geom, cfg.h_gap, cfg.h_far);
  row.mesh_q = mesh_quality(mesh);

  const LimitSolution limit =
      solve_limit(mesh, geom, cfg.material, cfg.phi, cfg.solver);
  row.coeffs = limit.coeffs;
  row.c_max = limit.coeffs.max_abs();
  row.energy_inf = limit.energy_inf;
  row.sup_grad_matrix =
      sup_gradient(mesh, limit.field, RegionMask::matrix_only());
  row.sup_grad_fiber = fiber_sup_gradient(mesh, limit.field, eps);

  const DecompositionSet dec =
      solve_decomposition(mesh, geom, cfg.material, cfg.phi, cfg.solver);
  row.sup_grad_v11 =
      sup_gradient(mesh, dec.v[0][0], RegionMask::matrix_only());

  const CoefficientSystem sys =
      assemble_coefficient_system(dec, cfg.material);
  const RigidCoefficients C = solve_coefficients(sys);
  row.c_diff_1 = C.diff(1);
  row.c_diff_2 = C.diff(2);
  const auto [d1, d2] = cramer_differences(sys.a11, sys.p_vector(C));
  row.cramer_d1 = d1;
  row.cramer_d2 = d2;
  row.audit = spectral_audit(sys, geom);

  const VectorField recon = reconstruct(dec, C);
  const double ref =
      h1_norm(mesh, limit.field, RegionMask::matrix_only());
  row.recon_h1_rel =
      h1_distance(mesh, recon, limit.field, RegionMask::matrix_only()) /
      (ref > 0 ? ref : 1.0);

  const AuxEvaluator aux(geom);
  row.residuals = residual_analysis(dec, aux, cfg.material);
  row.profile = profile_extract(mesh, limit, geom, cfg.profile_points);
  return row;
}

}  // namespace

bool gradient_at(const Mesh& mesh, const VectorField& u, const Vec2& x,
                 Mat2& grad) {
  for (int t = 0; t < mesh.tri_count(); ++t) {
    const auto& tr = mesh.triangles[t];
    if (tr.region != Region::Matrix) continue;
    const Vec2 a = mesh.nodes[tr.v[0]], b = mesh.nodes[tr.v[1]],
               c = mesh.nodes[tr.v[2]];
    if (std::min({a.x(), b.x(), c.x()}) > x.x() ||
        std::max({a.x(), b.x(), c.x()}) < x.x())
      continue;
    if (point_in_triangle(x, a, b, c)) {
      grad = element_gradient(mesh, u, t);
      return true;
    }
  }
  return false;
}

ProfileTable profile_extract(const Mesh& mesh, const LimitSolution& solution,
                             const GapGeometry& geom, int points) {
  ProfileTable table;
  const double m = static_cast<double>(geom.flat_order[0]);
  for (int j = 0; j <= points; ++j) {
    const double frac = static_cast<double>(j) / points;
    const double d = geom.r_local * frac * frac;
    const Vec2 x{d, 0.0};
    Mat2 g;
    if (!gradient_at(mesh, solution.field, x, g)) {
      ++table.skipped;
      continue;
    }
    ProfileSample s;
    s.dist = dist_to_segment(x, geom);
    s.grad_norm = g.norm();
    if (geom.shape_kind == ShapeKind::Disk) {
      s.product = s.grad_norm * (std::sqrt(geom.epsilon) + s.dist);
    } else {
      s.product = s.grad_norm * (geom.epsilon + std::pow(s.dist, m)) /
                  (std::pow(geom.epsilon, 1.0 - 1.0 / m) + s.dist);
    }
    table.samples.push_back(s);
  }
  return table;
}

RateTable sweep_epsilon(const SweepConfig& config) {
  for (size_t k = 0; k + 1 < config.epsilons.size(); ++k)
    if (!(config.epsilons[k] > config.epsilons[k + 1]))
      throw ConfigError("sweep_epsilon: epsilons must be strictly decreasing");

  RateTable table;
  table.config = config;
  table.rows.resize(config.epsilons.size());

  const int jobs = std::max(1, config.jobs);
  std::atomic<size_t> next{0};
  auto worker = [&]() {
    while (true) {
      const size_t k = next.fetch_add(1);
      if (k >= config.epsilons.size()) break;
      try {
        table.rows[k] = run_row(config, config.epsilons[k]);
      } catch (const std::exception& e) {
        table.rows[k].epsilon = config.epsilons[k];
        table.rows[k].failed = true;
        table.rows[k].fail_reason = e.what();
      }
    }
  };
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return table;
}

RateFit fit_rate(const std::vector<double>& epsilons,
                 const std::vector<double>& values) {
  std::vector<double> xs, ys;
  for (size_t k = 0; k < epsilons.size() && k < values.size(); ++k) {
    if (!(values[k] > 0.0) || !(epsilons[k] > 0.0)) continue;
    xs.push_back(std::log(epsilons[k]));
    ys.push_back(std::log(values[k]));
  }
  if (xs.size() < 4)
    throw PreconditionError(
        "fit_rate: need at least 4 positive entries in the column");

  auto ols = [](const std::vector<double>& x, const std::vector<double>& y) {
    RateFit f;
    const int n = static_cast<int>(x.size());
    double mx = 0, my = 0;
    for (int i = 0; i < n; ++i) {
      mx += x[i];
      my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0, sxy = 0;
    for (int i = 0; i < n; ++i) {
      sxx += (x[i] - mx) * (x[i] - mx);
      sxy += (x[i] - mx) * (y[i] - my);
    }
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double rss = 0;
    for (int i = 0; i < n; ++i) {
      const double r = y[i] - (f.intercept + f.slope * x[i]);
      rss += r * r;
    }
    f.stderr_slope = (n > 2) ? std::sqrt(rss / (n - 2) / sxx) : 0.0;
    for (int i = 0; i < n; ++i)
      f.leverage.push_back(1.0 / n + (x[i] - mx) * (x[i] - mx) / sxx);
    f.n = n;
    return f;
  };

  RateFit fit = ols(xs, ys);
  // the coarsest epsilon is the largest, i.e. the first entry
  const size_t coarse = 0;
  if (fit.leverage[coarse] > 0.8 && xs.size() > 4) {
    xs.erase(xs.begin());
    ys.erase(ys.begin());
    fit = ols(xs, ys);
    fit.dropped_coarsest = true;
  }
  return fit;
}

std::vector<double> table_column(const RateTable& table,
                                 const std::string& column) {
  std::vector<double> out;
  for (const auto& r : table.rows) {
    if (r.failed) continue;
    double v = 0.0;
    if (column == "sup_grad_matrix") v = r.sup_grad_matrix;
    else if (column == "sup_grad_fiber") v = r.sup_grad_fiber;
    else if (column == "c_diff_1") v = std::abs(r.c_diff_1);
    else if (column == "c_diff_2") v = std::abs(r.c_diff_2);
    else if (column == "c_max") v = r.c_max;
    else if (column == "a11_11") v = r.audit.entries[0];
    else if (column == "a11_22") v = r.audit.entries[1];
    else if (column == "a11_33") v = r.audit.entries[2];
    else if (column == "a11_12") v = std::abs(r.audit.entries[3]);
    else if (column == "det_a11") v = r.audit.det_a11;
    else if (column == "min_eig") v = r.audit.min_eigenvalue;
    else if (column == "energy_inf") v = r.energy_inf;
    else if (column == "sup_grad_v11") v = r.sup_grad_v11;
    else throw PreconditionError("table_column: unknown column " + column);
    out.push_back(v);
  }
  return out;
}

RateFit fit_rate(const RateTable& table, const std::string& column) {
  std::vector<double> eps;
  for (const auto& r : table.rows)
    if (!r.failed) eps.push_back(r.epsilon);
  return fit_rate(eps, table_column(table, column));
}

ConvergenceTable run_convergence_experiment(
    const Mesh& mesh, const GapGeometry& geom, const ElasticConstants& c,
    const std::vector<std::pair<double, double>>& ladder,
    const BoundaryData& phi, const SolveOptions& opts, std::ostream* csv) {
  ConvergenceTable table = convergence_study(mesh, geom, c, ladder, phi, opts);
  for (const auto& row : table.rows)
    if (row.energy_n > row.energy_inf * (1.0 + 1e-12) + 1e-300)
      throw std::runtime_error(
          "convergence experiment: I_n[u_n] = " + std::to_string(row.energy_n) +
          " exceeds I_inf[u] = " + std::to_string(row.energy_inf));
  if (csv) write_convergence_csv(*csv, table);
  return table;
}

namespace {
void csv_prec(std::ostream& os) { os.precision(12); }
}  // namespace

void write_rates_csv(std::ostream& os, const RateTable& table) {
  csv_prec(os);
  os << "epsilon,sup_grad_matrix,sup_grad_fiber,c_diff_1,c_diff_2,c_max,"
        "a11_11,a11_22,a11_33,a11_12,a11_13,a11_23,det_a11,min_eig,"
        "energy_inf,recon_h1_rel,sup_grad_v11,failed\n";
  for (const auto& r : table.rows) {
    os << r.epsilon << "," << r.sup_grad_matrix << "," << r.sup_grad_fiber
       << "," << r.c_diff_1 << "," << r.c_diff_2 << "," << r.c_max;
    for (double e : r.audit.entries) os << "," << e;
    os << "," << r.audit.det_a11 << "," << r.audit.min_eigenvalue << ","
       << r.energy_inf << "," << r.recon_h1_rel << "," << r.sup_grad_v11
       << "," << (r.failed ? 1 : 0) << "\n";
  }
}

void write_coeff_audit_csv(std::ostream& os, const RateTable& table) {
  csv_prec(os);
  os << "epsilon,a11_11,a11_22,a11_33,a11_12,a11_13,a11_23,det_a11,min_eig,"
        "c1_minus_c2_1,c1_minus_c2_2\n";
  for (const auto& r : table.rows) {
    if (r.failed) continue;
    os << r.epsilon;
    for (double e : r.audit.entries) os << "," << e;
    os << "," << r.audit.det_a11 << "," << r.audit.min_eigenvalue << ","
       << r.c_diff_1 << "," << r.c_diff_2 << "\n";
  }
}

void write_residuals_csv(std::ostream& os, const RateTable& table) {
  csv_prec(os);
  os << "epsilon,field,total_energy,sup_grad,window_z1,window_energy\n";
  for (const auto& r : table.rows) {
    if (r.failed) continue;
    for (const auto& e : r.residuals.entries) {
      const std::string name =
          "w_" + std::to_string(e.i) + "_" + std::to_string(e.alpha);
      for (const auto& [z, we] : e.window)
        os << r.epsilon << "," << name << "," << e.total_energy << ","
           << e.sup_grad << "," << z << "," << we << "\n";
    }
  }
}

void write_profile_csv(std::ostream& os, const ProfileTable& profile) {
  csv_prec(os);
  os << "dist,grad_norm,product\n";
  for (const auto& s : profile.samples)
    os << s.dist << "," << s.grad_norm << "," << s.product << "\n";
}

void write_convergence_csv(std::ostream& os, const ConvergenceTable& table) {
  csv_prec(os);
  os << "n,lambda_n,mu_n,h1_dist,I_n,I_inf\n";
  for (const auto& r : table.rows)
    os << r.n << "," << r.lambda_n << "," << r.mu_n << "," << r.h1_dist << ","
       << r.energy_n << "," << r.energy_inf << "\n";
}

}  // namespace lamegap
