#pragma once

#include "lamegap/solvers.hpp"

#include <vector>

namespace lamegap {

struct ScalarJet {
  double v = 0.0;
  Vec2 g = Vec2::Zero();
  Mat2 h = Mat2::Zero();
};

/// Evaluates the scalar gap profiles and the auxiliary displacement fields
/// built from them. Inside the gap window the exact rational formula
///   ubar = (x2 - h2(x1) + eps/2) / (eps + h1(x1) - h2(x1))
/// and its derivatives are used. In the band r_local <= |x1| <= 2 r_local
/// between the graphs the rational formula is blended (quintic smoothstep)
/// into the global profile d2/(d1+d2) * cutoff(outer); elsewhere the global
/// profile applies. Outside the window the gradient/hessian are central
/// finite differences of the value: diagnostics only, no bound is attached
/// to them.
class AuxEvaluator {
 public:
  explicit AuxEvaluator(const GapGeometry& geom);

  const GapGeometry& geometry() const { return geom_; }

  // which: 0 -> ubar (1 on D1), 1 -> the mirrored profile (1 on D2).
  // Throws std::domain_error for points inside an inclusion.
  ScalarJet profile(int which, const Vec2& x) const;

  // ubar_i^alpha and its gradient; i in {1,2}, alpha in {1,2,3}.
  Vec2 aux_value(int i, int alpha, const Vec2& x) const;
  Mat2 aux_gradient(int i, int alpha, const Vec2& x) const;

  // Pointwise Lame operator of ubar_i^alpha; window interior only.
  Vec2 lame_of_aux(const ElasticConstants& c, int i, int alpha,
                   const Vec2& x) const;

  // strictly inside the gap strip |x1| < r_local between the graphs
  bool in_window(const Vec2& x) const;

 private:
  GapGeometry geom_;
  std::vector<Vec2> poly_[2];  // boundary polylines for m-flat distances

  ScalarJet rational(int which, const Vec2& x) const;
  double far_value(int which, const Vec2& x) const;
  double value_only(int which, const Vec2& x) const;
  double dist_incl(int which, const Vec2& x) const;
  bool inside_inclusion(int which, const Vec2& x) const;
};

/// One-off evaluation (see AuxEvaluator::profile).
ScalarJet ubar_eval(const GapGeometry& geom, const Vec2& x, int which);

struct ResidualEntry {
  int i = 1;          // inclusion index 1/2
  int alpha = 1;      // rigid mode
  double total_energy = 0.0;          // int |grad w|^2 over the matrix
  double sup_grad = 0.0;              // sup |grad w| over the matrix
  std::vector<std::pair<double, double>> window;  // (z1, local energy)
};

struct ResidualReport {
  std::vector<ResidualEntry> entries;  // six fields, (i, alpha) ordered
  const ResidualEntry& get(int i, int alpha) const;
};

/// w_i^alpha = v_i^alpha - I_h(ubar_i^alpha) for the six decomposition
/// fields; total/window energies and sup norms over the matrix region.
ResidualReport residual_analysis(const DecompositionSet& dec,
                                 const AuxEvaluator& aux,
                                 const ElasticConstants& c);

}  // namespace lamegap
