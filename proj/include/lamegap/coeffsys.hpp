#pragma once

#include "lamegap/solvers.hpp"

namespace lamegap {

/// Blocks a_ij^{ab} = int_matrix (C e(v_i^a), e(v_j^b)) and loads
/// b_j^b = -int_matrix (C e(v3), e(v_j^b)). Symmetric by construction:
/// a_ij^{ab} and a_ji^{ba} come from the same accumulation.
struct CoefficientSystem {
  Mat3 a11, a12, a21, a22;
  Vec3 b1, b2;

  // right-hand side of a11 (C1 - C2) = p, given C2
  Vec3 p_vector(const RigidCoefficients& C) const {
    Vec3 c2{C.c[1][0], C.c[1][1], C.c[1][2]};
    return b1 - (a11 + a21.transpose()) * c2;
  }
};

CoefficientSystem assemble_coefficient_system(const DecompositionSet& dec,
                                              const ElasticConstants& c);

/// Solves the full 6x6 block system for (C1, C2) by partial-pivoting
/// elimination. Throws SolveError with a condition estimate when singular.
RigidCoefficients solve_coefficients(const CoefficientSystem& sys);

/// Cofactor-expansion values of the first two components of a11^{-1} p.
/// Throws when |det a11| falls below 1e-14 times the row-norm scale.
std::pair<double, double> cramer_differences(const Mat3& a11, const Vec3& p);

struct AuditReport {
  double epsilon = 0.0;
  double entries[6] = {0};  // a11_11, a11_22, a11_33, a11_12, a11_13, a11_23
  double det_a11 = 0.0;
  double min_eigenvalue = 0.0;
  // entries scaled by the powers of epsilon of the predicted growth laws
  double scaled_diag1 = 0.0;  // sqrt(eps) * a11_11
  double scaled_diag2 = 0.0;  // sqrt(eps) * a11_22
  double scaled_det = 0.0;    // eps * det a11
};

AuditReport spectral_audit(const CoefficientSystem& sys,
                           const GapGeometry& geom);

}  // namespace lamegap
