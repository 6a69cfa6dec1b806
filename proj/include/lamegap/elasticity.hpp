#pragma once

#include "lamegap/mesh.hpp"
#include "lamegap/types.hpp"

#include <array>
#include <functional>
#include <optional>

namespace lamegap {

/// Isotropic Lame parameters. `inclusion` holds (lambda1, mu1) for the
/// finite-coefficient problem.
struct ElasticConstants {
  double lambda = 1.0;
  double mu = 1.0;
  std::optional<std::pair<double, double>> inclusion;

  ElasticConstants() = default;
  ElasticConstants(double l, double m) : lambda(l), mu(m) {}
  ElasticConstants(double l, double m, double l1, double m1)
      : lambda(l), mu(m), inclusion({l1, m1}) {}

  ElasticConstants inclusion_constants() const {
    if (!inclusion) throw PreconditionError("no inclusion material set");
    return {inclusion->first, inclusion->second};
  }
};

// mu > 0 and 2*lambda + 2*mu > 0 (d = 2); same for the inclusion pair if set.
void validate_elliptic(const ElasticConstants& c);
// The limit problem additionally needs lambda + mu > 0.
void validate_limit_elliptic(const ElasticConstants& c);

/// Rigid motion basis: psi^1 = (1,0), psi^2 = (0,1), psi^3 = (x2, -x1).
Vec2 rigid_basis(int alpha, const Vec2& x);

struct RigidMotion {
  double c[3] = {0, 0, 0};
  Vec2 at(const Vec2& x) const {
    return c[0] * rigid_basis(1, x) + c[1] * rigid_basis(2, x) +
           c[2] * rigid_basis(3, x);
  }
};

/// e(u) = (grad + grad^T)/2.
Mat2 strain(const Mat2& grad);

/// C A = lambda tr(A) I + 2 mu A for symmetric A; throws on asymmetric input.
Mat2 apply_tensor(const ElasticConstants& c, const Mat2& A);

/// (C A, B) evaluated so that the result is exactly symmetric in (A, B):
/// lambda tr(A) tr(B) + 2 mu sum A_ij B_ij with a fixed accumulation order.
double tensor_energy_product(const ElasticConstants& c, const Mat2& A,
                             const Mat2& B);

/// Piecewise-linear nodal displacement field. The gradient is constant per
/// triangle; component order in `values` is (u_x(0), u_y(0), u_x(1), ...).
struct VectorField {
  const Mesh* mesh = nullptr;
  Eigen::VectorXd values;

  VectorField() = default;
  explicit VectorField(const Mesh& m)
      : mesh(&m), values(Eigen::VectorXd::Zero(2 * m.node_count())) {}

  Vec2 at(int node) const { return {values[2 * node], values[2 * node + 1]}; }
  void set(int node, const Vec2& v) {
    values[2 * node] = v.x();
    values[2 * node + 1] = v.y();
  }
};

VectorField interpolate(const Mesh& mesh,
                        const std::function<Vec2(const Vec2&)>& f);

/// Per-triangle gradient; entry (i, j) = d u_i / d x_j.
Mat2 element_gradient(const Mesh& mesh, const VectorField& u, int tri);

/// Region filter as a bitmask over Region values.
struct RegionMask {
  bool matrix = true, incl1 = true, incl2 = true;
  bool contains(Region r) const {
    switch (r) {
      case Region::Matrix: return matrix;
      case Region::Incl1: return incl1;
      case Region::Incl2: return incl2;
    }
    return false;
  }
  static RegionMask all() { return {true, true, true}; }
  static RegionMask matrix_only() { return {true, false, false}; }
  static RegionMask inclusions() { return {false, true, true}; }
};

/// Elastic energy (1/2) sum area * (C e, e) over the region, accumulated in
/// element order. `empty_region` reports a region with zero elements.
double energy(const Mesh& mesh, const VectorField& u,
              const ElasticConstants& c, RegionMask region,
              bool* empty_region = nullptr);

double h1_seminorm_sq(const Mesh& mesh, const VectorField& u, RegionMask region);
double l2_norm_sq(const Mesh& mesh, const VectorField& u, RegionMask region);
double h1_norm(const Mesh& mesh, const VectorField& u, RegionMask region);
double h1_distance(const Mesh& mesh, const VectorField& a,
                   const VectorField& b, RegionMask region);
/// max Frobenius norm of the element gradients over the region
double sup_gradient(const Mesh& mesh, const VectorField& u, RegionMask region);

/// Closed-form field with derivatives, for operator evaluation and
/// manufactured solutions.
struct AnalyticField {
  std::function<Vec2(const Vec2&)> value;
  std::function<Mat2(const Vec2&)> gradient;                // (i,j)=du_i/dx_j
  std::function<std::array<Mat2, 2>(const Vec2&)> hessian;  // [i] = Hess u_i
};

/// Pointwise Lame operator (L u)^i = mu Lap u^i + (lambda+mu) d_i (div u).
Vec2 lame_apply(const AnalyticField& f, const Vec2& x,
                const ElasticConstants& c);

/// |grad u|^2_{L2} / |e(u)|^2_{L2} over the whole mesh for a field vanishing
/// on the outer boundary; 0/0 returns 1 by convention. Throws
/// PreconditionError when the field does not vanish on Outer nodes.
double first_korn_check(const Mesh& mesh, const VectorField& u);

}  // namespace lamegap
