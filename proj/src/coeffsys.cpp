#include "lamegap/coeffsys.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

namespace lamegap {

CoefficientSystem assemble_coefficient_system(const DecompositionSet& dec,
                                              const ElasticConstants& c) {
  const Mesh& mesh = *dec.mesh;
  const VectorField* fields[7] = {&dec.v[0][0], &dec.v[0][1], &dec.v[0][2],
                                  &dec.v[1][0], &dec.v[1][1], &dec.v[1][2],
                                  &dec.v3};
  // Gram matrix of the energy inner product over the matrix region, one pass
  Eigen::Matrix<double, 7, 7> gram = Eigen::Matrix<double, 7, 7>::Zero();
  for (int t = 0; t < mesh.tri_count(); ++t) {
    if (mesh.triangles[t].region != Region::Matrix) continue;
    const double area = mesh.signed_area(t);
    Mat2 e[7];
    for (int f = 0; f < 7; ++f)
      e[f] = strain(element_gradient(mesh, *fields[f], t));
    for (int f = 0; f < 7; ++f)
      for (int g = f; g < 7; ++g) {
        const double v = area * tensor_energy_product(c, e[f], e[g]);
        gram(f, g) += v;
        if (g != f) gram(g, f) += v;
      }
  }

  CoefficientSystem sys;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) {
      sys.a11(a, b) = gram(a, b);
      sys.a12(a, b) = gram(a, 3 + b);
      sys.a21(a, b) = gram(3 + a, b);
      sys.a22(a, b) = gram(3 + a, 3 + b);
    }
  for (int b = 0; b < 3; ++b) {
    sys.b1[b] = -gram(6, b);
    sys.b2[b] = -gram(6, 3 + b);
  }
  return sys;
}

RigidCoefficients solve_coefficients(const CoefficientSystem& sys) {
  Eigen::Matrix<double, 6, 6> M;
  // row block j, column block i: entry (beta, alpha) = a_ij^{alpha beta}
  M.block<3, 3>(0, 0) = sys.a11.transpose();
  M.block<3, 3>(0, 3) = sys.a21.transpose();
  M.block<3, 3>(3, 0) = sys.a12.transpose();
  M.block<3, 3>(3, 3) = sys.a22.transpose();
  Eigen::Matrix<double, 6, 1> rhs;
  rhs << sys.b1, sys.b2;

  Eigen::PartialPivLU<Eigen::Matrix<double, 6, 6>> lu(M);
  const double det = std::abs(lu.determinant());
  double scale = 1.0;
  for (int r = 0; r < 6; ++r) scale *= M.row(r).norm();
  if (!(det > 1e-14 * scale)) {
    const Eigen::JacobiSVD<Eigen::Matrix<double, 6, 6>> svd(M);
    throw SolveError("solve_coefficients: singular block system, cond ~ " +
                         std::to_string(svd.singularValues()(0) /
                                        svd.singularValues()(5)),
                     {}, {});
  }
  const Eigen::Matrix<double, 6, 1> x = lu.solve(rhs);
  RigidCoefficients C;
  for (int a = 0; a < 3; ++a) {
    C.c[0][a] = x[a];
    C.c[1][a] = x[3 + a];
  }
  return C;
}

std::pair<double, double> cramer_differences(const Mat3& a11, const Vec3& p) {
  double scale = 1.0;
  for (int r = 0; r < 3; ++r) scale *= a11.row(r).norm();
  const double det = a11.determinant();
  if (!(std::abs(det) > 1e-14 * scale))
    throw SolveError("cramer_differences: a11 is numerically singular", {}, {});

  const double d1 =
      (p[0] * (a11(1, 1) * a11(2, 2) - a11(1, 2) * a11(2, 1)) -
       p[1] * (a11(0, 1) * a11(2, 2) - a11(0, 2) * a11(2, 1)) +
       p[2] * (a11(0, 1) * a11(1, 2) - a11(0, 2) * a11(1, 1))) /
      det;
  const double d2 =
      (-p[0] * (a11(1, 0) * a11(2, 2) - a11(1, 2) * a11(2, 0)) +
       p[1] * (a11(0, 0) * a11(2, 2) - a11(0, 2) * a11(2, 0)) -
       p[2] * (a11(0, 0) * a11(1, 2) - a11(0, 2) * a11(1, 0))) /
      det;
  return {d1, d2};
}

AuditReport spectral_audit(const CoefficientSystem& sys,
                           const GapGeometry& geom) {
  AuditReport rep;
  rep.epsilon = geom.epsilon;
  rep.entries[0] = sys.a11(0, 0);
  rep.entries[1] = sys.a11(1, 1);
  rep.entries[2] = sys.a11(2, 2);
  rep.entries[3] = sys.a11(0, 1);
  rep.entries[4] = sys.a11(0, 2);
  rep.entries[5] = sys.a11(1, 2);
  rep.det_a11 = sys.a11.determinant();
  Eigen::SelfAdjointEigenSolver<Mat3> es(sys.a11);
  rep.min_eigenvalue = es.eigenvalues().minCoeff();
  const double se = std::sqrt(geom.epsilon);
  rep.scaled_diag1 = se * rep.entries[0];
  rep.scaled_diag2 = se * rep.entries[1];
  rep.scaled_det = geom.epsilon * rep.det_a11;
  return rep;
}

}  // namespace lamegap
