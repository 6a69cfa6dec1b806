#include "lamegap/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>

namespace lamegap {

Vec2 BoundaryData::operator()(const Vec2& x) const {
  switch (kind) {
    case Kind::Zero: return {0.0, 0.0};
    case Kind::Psi1: return amplitude * rigid_basis(1, x);
    case Kind::Psi2: return amplitude * rigid_basis(2, x);
    case Kind::Psi3: return amplitude * rigid_basis(3, x);
    case Kind::Shear: return {amplitude * x.y(), 0.0};
    case Kind::Smooth:
      return {amplitude * (std::sin(x.y()) + 0.4 * std::cos(2.0 * x.x() + 0.7)),
              amplitude * 0.5 * std::cos(x.x() - 0.3)};
    case Kind::Custom: return custom(x);
  }
  return {0.0, 0.0};
}

BoundaryData BoundaryData::parse(const std::string& id, double amplitude) {
  BoundaryData b;
  b.amplitude = amplitude;
  if (id == "zero") b.kind = Kind::Zero;
  else if (id == "psi1") b.kind = Kind::Psi1;
  else if (id == "psi2") b.kind = Kind::Psi2;
  else if (id == "psi3") b.kind = Kind::Psi3;
  else if (id == "shear") b.kind = Kind::Shear;
  else if (id == "smooth") b.kind = Kind::Smooth;
  else throw ConfigError("unknown boundary data id '" + id + "'");
  return b;
}

double RigidCoefficients::max_abs() const {
  double m = 0.0;
  for (const auto& row : c)
    for (double v : row) m = std::max(m, std::abs(v));
  return m;
}

namespace {

void check_phi_finite(const Mesh& mesh, const BoundaryData& phi) {
  for (const auto& be : mesh.boundary_edges) {
    if (be.tag != BoundaryTag::Outer) continue;
    for (int id : {be.a, be.b}) {
      const Vec2 v = phi(mesh.nodes[id]);
      if (!std::isfinite(v.x()) || !std::isfinite(v.y()))
        throw PreconditionError("boundary data is not finite on the outer circle");
    }
  }
}

}  // namespace

double traction_integral(const Mesh& mesh, const VectorField& u,
                         const ElasticConstants& c, int which, int alpha) {
  // matrix triangle adjacent to each Gamma edge
  std::map<std::pair<int, int>, int> matrix_tri;
  for (int t = 0; t < mesh.tri_count(); ++t) {
    const auto& tr = mesh.triangles[t];
    if (tr.region != Region::Matrix) continue;
    for (int k = 0; k < 3; ++k) {
      const int a = tr.v[k], b = tr.v[(k + 1) % 3];
      matrix_tri[{std::min(a, b), std::max(a, b)}] = t;
    }
  }
  const BoundaryTag tag = which == 0 ? BoundaryTag::Gamma1 : BoundaryTag::Gamma2;
  double acc = 0.0;
  for (const auto& be : mesh.boundary_edges) {
    if (be.tag != tag) continue;
    auto it = matrix_tri.find({std::min(be.a, be.b), std::max(be.a, be.b)});
    if (it == matrix_tri.end()) continue;
    const Vec2 pa = mesh.nodes[be.a], pb = mesh.nodes[be.b];
    const Vec2 edge = pb - pa;
    const double len = edge.norm();
    Vec2 nrm{edge.y() / len, -edge.x() / len};
    // unit outer normal of the inclusion: points toward the matrix side
    const auto& tr = mesh.triangles[it->second];
    const Vec2 cen =
        (mesh.nodes[tr.v[0]] + mesh.nodes[tr.v[1]] + mesh.nodes[tr.v[2]]) / 3.0;
    const Vec2 mid = 0.5 * (pa + pb);
    if (nrm.dot(cen - mid) < 0.0) nrm = -nrm;
    const Mat2 sigma =
        apply_tensor(c, strain(element_gradient(mesh, u, it->second)));
    acc += len * (sigma * nrm).dot(rigid_basis(alpha, mid));
  }
  return acc;
}

LimitSolution solve_limit(const Mesh& mesh, const GapGeometry& geom,
                          const ElasticConstants& c, const BoundaryData& phi,
                          const SolveOptions& opts) {
  (void)geom;
  validate_limit_elliptic(c);
  check_phi_finite(mesh, phi);

  ConstraintSpec spec;
  spec.dirichlet[static_cast<int>(BoundaryTag::Outer)] =
      [&phi](const Vec2& x) { return phi(x); };
  spec.rigid[0] = spec.rigid[1] = true;
  SparseSystem sys = assemble(mesh, MaterialMap::matrix_only(c), spec);
  SolveResult sol = solve_spd(sys, opts);

  LimitSolution out;
  out.field = scatter_solution(sys, sol.x.col(0), spec);
  for (int w = 0; w < 2; ++w) {
    const RigidMotion rm = rigid_part(sys, sol.x.col(0), w);
    for (int k = 0; k < 3; ++k) out.coeffs.c[w][k] = rm.c[k];
  }
  out.energy_inf = energy(mesh, out.field, c, RegionMask::matrix_only());
  for (int w = 0; w < 2; ++w)
    for (int a = 1; a <= 3; ++a)
      out.traction[w][a - 1] = traction_integral(mesh, out.field, c, w, a);
  return out;
}

VectorField solve_finite(const Mesh& mesh, const GapGeometry& geom,
                         const ElasticConstants& c, const BoundaryData& phi,
                         const SolveOptions& opts) {
  (void)geom;
  validate_elliptic(c);
  check_phi_finite(mesh, phi);

  ConstraintSpec spec;
  spec.dirichlet[static_cast<int>(BoundaryTag::Outer)] =
      [&phi](const Vec2& x) { return phi(x); };
  SparseSystem sys = assemble(mesh, MaterialMap::two_phase(c), spec);
  SolveResult sol = solve_spd(sys, opts);
  return scatter_solution(sys, sol.x.col(0), spec);
}

DecompositionSet solve_decomposition(const Mesh& mesh, const GapGeometry& geom,
                                     const ElasticConstants& c,
                                     const BoundaryData& phi,
                                     const SolveOptions& opts) {
  (void)geom;
  validate_limit_elliptic(c);
  check_phi_finite(mesh, phi);

  auto zero = [](const Vec2&) { return Vec2{0.0, 0.0}; };
  auto psi = [](int alpha) {
    return [alpha](const Vec2& x) { return rigid_basis(alpha, x); };
  };

  // one operator, seven right-hand sides: (i, alpha) fields then v3
  ConstraintSpec spec;
  spec.dirichlet[static_cast<int>(BoundaryTag::Outer)] = zero;
  spec.dirichlet[static_cast<int>(BoundaryTag::Gamma1)] = psi(1);
  spec.dirichlet[static_cast<int>(BoundaryTag::Gamma2)] = zero;

  std::vector<DirichletValues> extra;
  auto add = [&](BoundaryFn outer, BoundaryFn g1, BoundaryFn g2) {
    DirichletValues dv;
    dv.value[static_cast<int>(BoundaryTag::Outer)] = std::move(outer);
    dv.value[static_cast<int>(BoundaryTag::Gamma1)] = std::move(g1);
    dv.value[static_cast<int>(BoundaryTag::Gamma2)] = std::move(g2);
    extra.push_back(std::move(dv));
  };
  add(zero, psi(2), zero);
  add(zero, psi(3), zero);
  add(zero, zero, psi(1));
  add(zero, zero, psi(2));
  add(zero, zero, psi(3));
  add([&phi](const Vec2& x) { return phi(x); }, zero, zero);

  SparseSystem sys = assemble(mesh, MaterialMap::matrix_only(c), spec, extra);
  SolveResult sol = solve_spd(sys, opts);

  DecompositionSet dec;
  dec.mesh = &mesh;
  dec.v[0][0] = scatter_solution(sys, sol.x.col(0), spec);
  for (size_t k = 0; k < extra.size(); ++k) {
    const VectorField f =
        scatter_solution(sys, sol.x.col(1 + k), spec, &extra[k]);
    if (k == 0) dec.v[0][1] = f;
    else if (k == 1) dec.v[0][2] = f;
    else if (k <= 4) dec.v[1][k - 2] = f;
    else dec.v3 = f;
  }
  return dec;
}

VectorField reconstruct(const DecompositionSet& dec,
                        const RigidCoefficients& C) {
  const Mesh& mesh = *dec.mesh;
  VectorField out(mesh);
  out.values = dec.v3.values;
  for (int w = 0; w < 2; ++w)
    for (int a = 0; a < 3; ++a)
      out.values += C.c[w][a] * dec.v[w][a].values;
  return out;
}

ConvergenceTable convergence_study(
    const Mesh& mesh, const GapGeometry& geom, const ElasticConstants& c,
    const std::vector<std::pair<double, double>>& stiffness_ladder,
    const BoundaryData& phi, const SolveOptions& opts) {
  if (stiffness_ladder.empty())
    throw ConfigError("convergence_study: empty stiffness ladder");
  for (size_t k = 0; k + 1 < stiffness_ladder.size(); ++k) {
    const auto [l0, m0] = stiffness_ladder[k];
    const auto [l1, m1] = stiffness_ladder[k + 1];
    if (!(std::min(m1, l1 + m1) > std::min(m0, l0 + m0)))
      throw ConfigError(
          "convergence_study: ladder must increase in min(mu, lambda+mu)");
  }

  const LimitSolution limit = solve_limit(mesh, geom, c, phi, opts);

  ConvergenceTable table;
  int n = 0;
  for (const auto& [ln, mn] : stiffness_ladder) {
    ++n;
    ElasticConstants cn{c.lambda, c.mu, ln, mn};
    const VectorField un = solve_finite(mesh, geom, cn, phi, opts);
    ConvergenceRow row;
    row.n = n;
    row.lambda_n = ln;
    row.mu_n = mn;
    row.h1_dist = h1_distance(mesh, un, limit.field, RegionMask::all());
    row.energy_n = energy(mesh, un, c, RegionMask::matrix_only()) +
                   energy(mesh, un, ElasticConstants{ln, mn},
                          RegionMask::inclusions());
    row.energy_inf = limit.energy_inf;
    table.rows.push_back(row);
  }
  return table;
}

void write_field(std::ostream& os, const VectorField& u) {
  os.precision(17);
  const int n = static_cast<int>(u.values.size()) / 2;
  for (int i = 0; i < n; ++i)
    os << "u " << i << " " << u.values[2 * i] << " " << u.values[2 * i + 1]
       << "\n";
}

}  // namespace lamegap
