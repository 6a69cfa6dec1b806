#include "lamegap/elasticity.hpp"

#include <cmath>
#include <set>

namespace lamegap {

void validate_elliptic(const ElasticConstants& c) {
  if (!(c.mu > 0.0) || !(2.0 * c.lambda + 2.0 * c.mu > 0.0))
    throw PreconditionError("elastic constants violate ellipticity");
  if (c.inclusion) {
    const auto [l1, m1] = *c.inclusion;
    if (!(m1 > 0.0) || !(2.0 * l1 + 2.0 * m1 > 0.0))
      throw PreconditionError("inclusion constants violate ellipticity");
  }
}

void validate_limit_elliptic(const ElasticConstants& c) {
  if (!(c.mu > 0.0) || !(c.lambda + c.mu > 0.0))
    throw PreconditionError(
        "limit problem requires mu > 0 and lambda + mu > 0");
}

Vec2 rigid_basis(int alpha, const Vec2& x) {
  switch (alpha) {
    case 1: return {1.0, 0.0};
    case 2: return {0.0, 1.0};
    case 3: return {x.y(), -x.x()};
  }
  throw PreconditionError("rigid_basis: alpha must be 1, 2 or 3");
}

Mat2 strain(const Mat2& grad) { return 0.5 * (grad + grad.transpose()); }

Mat2 apply_tensor(const ElasticConstants& c, const Mat2& A) {
  if (std::abs(A(0, 1) - A(1, 0)) >
      1e-12 * (1.0 + A.cwiseAbs().maxCoeff()))
    throw PreconditionError("apply_tensor: input must be symmetric");
  return c.lambda * A.trace() * Mat2::Identity() + 2.0 * c.mu * A;
}

double tensor_energy_product(const ElasticConstants& c, const Mat2& A,
                             const Mat2& B) {
  const double dots = A(0, 0) * B(0, 0) + A(0, 1) * B(0, 1) +
                      A(1, 0) * B(1, 0) + A(1, 1) * B(1, 1);
  // grouped so that swapping A and B is bit-exact
  const double traces = (A(0, 0) + A(1, 1)) * (B(0, 0) + B(1, 1));
  return c.lambda * traces + 2.0 * c.mu * dots;
}

VectorField interpolate(const Mesh& mesh,
                        const std::function<Vec2(const Vec2&)>& f) {
  VectorField u(mesh);
  for (int i = 0; i < mesh.node_count(); ++i) u.set(i, f(mesh.nodes[i]));
  return u;
}

Mat2 element_gradient(const Mesh& mesh, const VectorField& u, int tri) {
  const auto& tr = mesh.triangles[tri];
  const Vec2 p0 = mesh.nodes[tr.v[0]];
  const Vec2 p1 = mesh.nodes[tr.v[1]];
  const Vec2 p2 = mesh.nodes[tr.v[2]];
  const double det =
      (p1.x() - p0.x()) * (p2.y() - p0.y()) -
      (p2.x() - p0.x()) * (p1.y() - p0.y());
  // gradients of the P1 shape functions
  const Vec2 g0{(p1.y() - p2.y()) / det, (p2.x() - p1.x()) / det};
  const Vec2 g1{(p2.y() - p0.y()) / det, (p0.x() - p2.x()) / det};
  const Vec2 g2{(p0.y() - p1.y()) / det, (p1.x() - p0.x()) / det};
  Mat2 grad = Mat2::Zero();
  grad += u.at(tr.v[0]) * g0.transpose();
  grad += u.at(tr.v[1]) * g1.transpose();
  grad += u.at(tr.v[2]) * g2.transpose();
  return grad;
}

double energy(const Mesh& mesh, const VectorField& u,
              const ElasticConstants& c, RegionMask region,
              bool* empty_region) {
  double acc = 0.0;
  int count = 0;
  for (int t = 0; t < mesh.tri_count(); ++t) {
    if (!region.contains(mesh.triangles[t].region)) continue;
    ++count;
    const Mat2 e = strain(element_gradient(mesh, u, t));
    acc += mesh.signed_area(t) * tensor_energy_product(c, e, e);
  }
  if (empty_region) *empty_region = (count == 0);
  return 0.5 * acc;
}

double h1_seminorm_sq(const Mesh& mesh, const VectorField& u,
                      RegionMask region) {
  double acc = 0.0;
  for (int t = 0; t < mesh.tri_count(); ++t) {
    if (!region.contains(mesh.triangles[t].region)) continue;
    acc += mesh.signed_area(t) *
           element_gradient(mesh, u, t).squaredNorm();
  }
  return acc;
}

double l2_norm_sq(const Mesh& mesh, const VectorField& u, RegionMask region) {
  // exact for P1: vertex quadrature is not; use the elementwise mass form
  double acc = 0.0;
  for (int t = 0; t < mesh.tri_count(); ++t) {
    if (!region.contains(mesh.triangles[t].region)) continue;
    const auto& tr = mesh.triangles[t];
    const double a = mesh.signed_area(t);
    for (int comp = 0; comp < 2; ++comp) {
      const double f0 = u.values[2 * tr.v[0] + comp];
      const double f1 = u.values[2 * tr.v[1] + comp];
      const double f2 = u.values[2 * tr.v[2] + comp];
      acc += a / 6.0 *
             (f0 * f0 + f1 * f1 + f2 * f2 + f0 * f1 + f1 * f2 + f2 * f0);
    }
  }
  return acc;
}

double h1_norm(const Mesh& mesh, const VectorField& u, RegionMask region) {
  return std::sqrt(l2_norm_sq(mesh, u, region) +
                   h1_seminorm_sq(mesh, u, region));
}

double h1_distance(const Mesh& mesh, const VectorField& a,
                   const VectorField& b, RegionMask region) {
  VectorField d(mesh);
  d.values = a.values - b.values;
  return h1_norm(mesh, d, region);
}

double sup_gradient(const Mesh& mesh, const VectorField& u,
                    RegionMask region) {
  double best = 0.0;
  for (int t = 0; t < mesh.tri_count(); ++t) {
    if (!region.contains(mesh.triangles[t].region)) continue;
    best = std::max(best, element_gradient(mesh, u, t).norm());
  }
  return best;
}

Vec2 lame_apply(const AnalyticField& f, const Vec2& x,
                const ElasticConstants& c) {
  const auto H = f.hessian(x);
  const double div1 = H[0](0, 0) + H[1](0, 1);  // d_x1 (div u)
  const double div2 = H[0](0, 1) + H[1](1, 1);  // d_x2 (div u)
  return {c.mu * H[0].trace() + (c.lambda + c.mu) * div1,
          c.mu * H[1].trace() + (c.lambda + c.mu) * div2};
}

double first_korn_check(const Mesh& mesh, const VectorField& u) {
  std::set<int> outer;
  for (const auto& be : mesh.boundary_edges)
    if (be.tag == BoundaryTag::Outer) {
      outer.insert(be.a);
      outer.insert(be.b);
    }
  for (int id : outer)
    if (u.at(id).norm() > 1e-14 * (1.0 + u.values.cwiseAbs().maxCoeff()))
      throw PreconditionError(
          "first_korn_check: field must vanish on the outer boundary");

  double grad2 = 0.0, strain2 = 0.0;
  for (int t = 0; t < mesh.tri_count(); ++t) {
    const double a = mesh.signed_area(t);
    const Mat2 g = element_gradient(mesh, u, t);
    grad2 += a * g.squaredNorm();
    strain2 += a * strain(g).squaredNorm();
  }
  if (grad2 == 0.0 && strain2 == 0.0) return 1.0;
  return grad2 / strain2;
}

}  // namespace lamegap
