#include "lamegap/auxfields.hpp"

#include <algorithm>
#include <cmath>

namespace lamegap {

namespace {

double smoothstep5(double t) {
  t = std::clamp(t, 0.0, 1.0);
  return t * t * t * (10.0 + t * (-15.0 + 6.0 * t));
}

}  // namespace

AuxEvaluator::AuxEvaluator(const GapGeometry& geom) : geom_(geom) {
  if (geom_.shape_kind == ShapeKind::MFlat) {
    const int n = 2048;
    for (int which = 0; which < 2; ++which) {
      auto& poly = poly_[which];
      const double sign = (which == 0) ? 1.0 : -1.0;
      for (int k = -n; k <= n; ++k) {
        const double x1 = geom_.r_local * static_cast<double>(k) / n;
        poly.emplace_back(x1, sign * geom_.epsilon / 2.0 +
                                  graph_value(geom_, which, x1));
      }
      for (int k = 0; k <= n; ++k)
        poly.push_back(
            boundary_path_point(geom_, which, static_cast<double>(k) / n));
      for (int k = n; k >= 0; --k) {
        const Vec2 p =
            boundary_path_point(geom_, which, static_cast<double>(k) / n);
        poly.emplace_back(-p.x(), p.y());
      }
    }
  }
}

double AuxEvaluator::dist_incl(int which, const Vec2& x) const {
  if (geom_.shape_kind == ShapeKind::Disk)
    return std::max(0.0,
                    (x - geom_.center(which)).norm() - geom_.radius[which]);
  const auto& poly = poly_[which];
  double best = std::numeric_limits<double>::max();
  for (size_t i = 0; i + 1 < poly.size(); ++i) {
    const Vec2 a = poly[i], b = poly[i + 1];
    const Vec2 ab = b - a;
    const double l2 = ab.squaredNorm();
    const double t = l2 > 0 ? std::clamp((x - a).dot(ab) / l2, 0.0, 1.0) : 0.0;
    best = std::min(best, (x - (a + t * ab)).norm());
  }
  return best;
}

bool AuxEvaluator::inside_inclusion(int which, const Vec2& x) const {
  const double tol = 1e-12 * geom_.outer_radius;
  if (geom_.shape_kind == ShapeKind::Disk)
    return (x - geom_.center(which)).norm() < geom_.radius[which] - tol;
  const double w = geom_.mflat_half_width();
  if (std::abs(x.x()) >= w) return false;
  const double sign = (which == 0) ? 1.0 : -1.0;
  const double c = geom_.mflat_half_height(which);
  const double axis = sign * (geom_.epsilon / 2.0 + c);
  const double hh = c - sign * graph_value(geom_, which, x.x());
  return std::abs(x.y() - axis) < hh - tol;
}

bool AuxEvaluator::in_window(const Vec2& x) const {
  if (!(std::abs(x.x()) < geom_.r_local)) return false;
  const double h1 = graph_value(geom_, 0, x.x());
  const double h2 = graph_value(geom_, 1, x.x());
  return x.y() > -geom_.epsilon / 2.0 + h2 && x.y() < geom_.epsilon / 2.0 + h1;
}

ScalarJet AuxEvaluator::rational(int which, const Vec2& x) const {
  const double h1 = graph_value(geom_, 0, x.x());
  const double h2 = graph_value(geom_, 1, x.x());
  const double d1 = graph_slope(geom_, 0, x.x());
  const double d2 = graph_slope(geom_, 1, x.x());
  const double c1 = graph_curvature(geom_, 0, x.x());
  const double c2 = graph_curvature(geom_, 1, x.x());
  const double D = geom_.epsilon + h1 - h2;
  const double Dp = d1 - d2;
  const double Dpp = c1 - c2;

  ScalarJet jet;
  if (which == 0) {
    const double N = x.y() - h2 + geom_.epsilon / 2.0;
    jet.v = N / D;
    jet.g[0] = -d2 / D - N * Dp / (D * D);
    jet.g[1] = 1.0 / D;
    jet.h(0, 0) = -c2 / D + 2.0 * d2 * Dp / (D * D) - N * Dpp / (D * D) +
                  2.0 * N * Dp * Dp / (D * D * D);
    jet.h(0, 1) = jet.h(1, 0) = -Dp / (D * D);
    jet.h(1, 1) = 0.0;
  } else {
    const double N = -x.y() + h1 + geom_.epsilon / 2.0;
    jet.v = N / D;
    jet.g[0] = d1 / D - N * Dp / (D * D);
    jet.g[1] = -1.0 / D;
    jet.h(0, 0) = c1 / D - 2.0 * d1 * Dp / (D * D) - N * Dpp / (D * D) +
                  2.0 * N * Dp * Dp / (D * D * D);
    jet.h(0, 1) = jet.h(1, 0) = Dp / (D * D);
    jet.h(1, 1) = 0.0;
  }
  return jet;
}

double AuxEvaluator::far_value(int which, const Vec2& x) const {
  const double da = dist_incl(which, x);
  const double db = dist_incl(1 - which, x);
  const double ratio = (da + db > 0.0) ? db / (da + db) : 0.5;
  double extent = 0.0;
  for (int i = 0; i < 2; ++i)
    extent = std::max(extent, std::abs(geom_.center(i).y()) +
                                  ((geom_.shape_kind == ShapeKind::Disk)
                                       ? geom_.radius[i]
                                       : geom_.mflat_half_height(i)));
  const double t_out = 0.5 * (geom_.outer_radius - extent);
  const double cut = smoothstep5((geom_.outer_radius - x.norm()) / t_out);
  return ratio * cut;
}

double AuxEvaluator::value_only(int which, const Vec2& x) const {
  const double R = geom_.r_local;
  const double ax = std::abs(x.x());
  const bool between = [&] {
    if (ax >= 2.0 * R) return false;
    const double h1 = graph_value(geom_, 0, x.x());
    const double h2 = graph_value(geom_, 1, x.x());
    return x.y() >= -geom_.epsilon / 2.0 + h2 - 1e-14 &&
           x.y() <= geom_.epsilon / 2.0 + h1 + 1e-14;
  }();
  if (between && ax <= R) return rational(which, x).v;
  if (between) {
    const double q = smoothstep5((ax - R) / R);
    return (1.0 - q) * rational(which, x).v + q * far_value(which, x);
  }
  return far_value(which, x);
}

ScalarJet AuxEvaluator::profile(int which, const Vec2& x) const {
  if (which != 0 && which != 1)
    throw PreconditionError("profile: which must be 0 or 1");
  for (int i = 0; i < 2; ++i)
    if (inside_inclusion(i, x))
      throw std::domain_error("profile: point lies inside an inclusion");
  if (x.norm() > geom_.outer_radius * (1.0 + 1e-12))
    throw std::domain_error("profile: point lies outside the outer domain");

  if (in_window(x)) return rational(which, x);

  // extension region: value exact, derivatives by central differences
  ScalarJet jet;
  jet.v = value_only(which, x);
  const double step = 1e-5 * geom_.outer_radius;
  auto val = [&](double dx, double dy) {
    return value_only(which, {x.x() + dx, x.y() + dy});
  };
  jet.g[0] = (val(step, 0) - val(-step, 0)) / (2 * step);
  jet.g[1] = (val(0, step) - val(0, -step)) / (2 * step);
  jet.h(0, 0) = (val(step, 0) - 2 * jet.v + val(-step, 0)) / (step * step);
  jet.h(1, 1) = (val(0, step) - 2 * jet.v + val(0, -step)) / (step * step);
  jet.h(0, 1) = jet.h(1, 0) =
      (val(step, step) - val(step, -step) - val(-step, step) +
       val(-step, -step)) /
      (4 * step * step);
  return jet;
}

Vec2 AuxEvaluator::aux_value(int i, int alpha, const Vec2& x) const {
  const ScalarJet p = profile(i - 1, x);
  switch (alpha) {
    case 1: return {p.v, 0.0};
    case 2: return {0.0, p.v};
    case 3: return {x.y() * p.v, -x.x() * p.v};
  }
  throw PreconditionError("aux_value: alpha must be 1, 2 or 3");
}

Mat2 AuxEvaluator::aux_gradient(int i, int alpha, const Vec2& x) const {
  const ScalarJet p = profile(i - 1, x);
  Mat2 g = Mat2::Zero();
  switch (alpha) {
    case 1:
      g.row(0) = p.g.transpose();
      return g;
    case 2:
      g.row(1) = p.g.transpose();
      return g;
    case 3:
      g(0, 0) = x.y() * p.g[0];
      g(0, 1) = p.v + x.y() * p.g[1];
      g(1, 0) = -p.v - x.x() * p.g[0];
      g(1, 1) = -x.x() * p.g[1];
      return g;
  }
  throw PreconditionError("aux_gradient: alpha must be 1, 2 or 3");
}

Vec2 AuxEvaluator::lame_of_aux(const ElasticConstants& c, int i, int alpha,
                               const Vec2& x) const {
  if (!in_window(x))
    throw std::domain_error(
        "lame_of_aux: defined only in the gap window interior");
  const ScalarJet p = rational(i - 1, x);
  std::array<Mat2, 2> H = {Mat2::Zero(), Mat2::Zero()};
  switch (alpha) {
    case 1:
      H[0] = p.h;
      break;
    case 2:
      H[1] = p.h;
      break;
    case 3:
      // u = (x2 p, -x1 p)
      H[0](0, 0) = x.y() * p.h(0, 0);
      H[0](0, 1) = H[0](1, 0) = p.g[0] + x.y() * p.h(0, 1);
      H[0](1, 1) = 2.0 * p.g[1] + x.y() * p.h(1, 1);
      H[1](0, 0) = -2.0 * p.g[0] - x.x() * p.h(0, 0);
      H[1](0, 1) = H[1](1, 0) = -p.g[1] - x.x() * p.h(0, 1);
      H[1](1, 1) = -x.x() * p.h(1, 1);
      break;
    default:
      throw PreconditionError("lame_of_aux: alpha must be 1, 2 or 3");
  }
  const double div1 = H[0](0, 0) + H[1](0, 1);
  const double div2 = H[0](0, 1) + H[1](1, 1);
  return {c.mu * H[0].trace() + (c.lambda + c.mu) * div1,
          c.mu * H[1].trace() + (c.lambda + c.mu) * div2};
}

ScalarJet ubar_eval(const GapGeometry& geom, const Vec2& x, int which) {
  return AuxEvaluator(geom).profile(which, x);
}

const ResidualEntry& ResidualReport::get(int i, int alpha) const {
  for (const auto& e : entries)
    if (e.i == i && e.alpha == alpha) return e;
  throw PreconditionError("ResidualReport: no such field");
}

ResidualReport residual_analysis(const DecompositionSet& dec,
                                 const AuxEvaluator& aux,
                                 const ElasticConstants& c) {
  (void)c;
  const Mesh& mesh = *dec.mesh;
  const GapGeometry& geom = aux.geometry();

  // nodes that belong to matrix elements (includes Gamma and Outer nodes)
  std::vector<char> in_matrix(mesh.node_count(), 0);
  for (const auto& tr : mesh.triangles)
    if (tr.region == Region::Matrix)
      for (int v : tr.v) in_matrix[v] = 1;

  // z1 grid for the local windows
  std::vector<double> zgrid;
  for (int j = -4; j <= 4; ++j) zgrid.push_back(geom.r_local * 0.5 * j / 4.0);

  ResidualReport rep;
  for (int i = 1; i <= 2; ++i) {
    for (int alpha = 1; alpha <= 3; ++alpha) {
      VectorField w(mesh);
      for (int nid = 0; nid < mesh.node_count(); ++nid) {
        if (!in_matrix[nid]) continue;
        const Vec2 v = dec.v[i - 1][alpha - 1].at(nid);
        w.set(nid, v - aux.aux_value(i, alpha, mesh.nodes[nid]));
      }
      ResidualEntry entry;
      entry.i = i;
      entry.alpha = alpha;
      entry.total_energy =
          h1_seminorm_sq(mesh, w, RegionMask::matrix_only());
      entry.sup_grad = sup_gradient(mesh, w, RegionMask::matrix_only());
      for (double z : zgrid) {
        const double half = delta(geom, z);
        double acc = 0.0;
        for (int t = 0; t < mesh.tri_count(); ++t) {
          if (mesh.triangles[t].region != Region::Matrix) continue;
          const auto& tr = mesh.triangles[t];
          const Vec2 cen = (mesh.nodes[tr.v[0]] + mesh.nodes[tr.v[1]] +
                            mesh.nodes[tr.v[2]]) /
                           3.0;
          if (std::abs(cen.x() - z) >= half) continue;
          if (std::abs(cen.x()) >= 2.0 * geom.r_local) continue;
          const double h1v = graph_value(geom, 0, cen.x());
          const double h2v = graph_value(geom, 1, cen.x());
          if (cen.y() <= -geom.epsilon / 2.0 + h2v ||
              cen.y() >= geom.epsilon / 2.0 + h1v)
            continue;
          acc += mesh.signed_area(t) *
                 element_gradient(mesh, w, t).squaredNorm();
        }
        entry.window.emplace_back(z, acc);
      }
      rep.entries.push_back(std::move(entry));
    }
  }
  return rep;
}

}  // namespace lamegap
