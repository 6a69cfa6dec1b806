#pragma once

#include "lamegap/elasticity.hpp"
#include "lamegap/geometry.hpp"
#include "lamegap/mesh.hpp"
#include "lamegap/sparsela.hpp"

#include <array>
#include <string>
#include <vector>

namespace lamegap {

/// Outer boundary data. Shipped profiles: the rigid traces psi^1..psi^3, the
/// affine shear (x2, 0), and a smooth non-symmetric profile; `custom` wins
/// when set.
struct BoundaryData {
  enum class Kind { Zero, Psi1, Psi2, Psi3, Shear, Smooth, Custom };
  Kind kind = Kind::Shear;
  double amplitude = 1.0;
  BoundaryFn custom;

  Vec2 operator()(const Vec2& x) const;

  static BoundaryData parse(const std::string& id, double amplitude = 1.0);
};

/// Coefficients of the solution against psi^alpha on each inclusion.
struct RigidCoefficients {
  double c[2][3] = {{0, 0, 0}, {0, 0, 0}};

  double max_abs() const;
  double diff(int alpha) const { return c[0][alpha - 1] - c[1][alpha - 1]; }
};

struct LimitSolution {
  VectorField field;  // full mesh; rigid on the inclusions
  RigidCoefficients coeffs;
  double energy_inf = 0.0;
  // net traction against psi^alpha on each Gamma, quadrature diagnostic
  double traction[2][3] = {{0, 0, 0}, {0, 0, 0}};
};

/// The seven Dirichlet fields of the decomposition: v[i][alpha-1] carries the
/// psi^alpha trace on Gamma_{i+1} and zero elsewhere; v3 carries phi on the
/// outer circle and zero on both inclusions.
struct DecompositionSet {
  const Mesh* mesh = nullptr;
  std::array<std::array<VectorField, 3>, 2> v;
  VectorField v3;
};

LimitSolution solve_limit(const Mesh& mesh, const GapGeometry& geom,
                          const ElasticConstants& c, const BoundaryData& phi,
                          const SolveOptions& opts = {});

VectorField solve_finite(const Mesh& mesh, const GapGeometry& geom,
                         const ElasticConstants& c, const BoundaryData& phi,
                         const SolveOptions& opts = {});

DecompositionSet solve_decomposition(const Mesh& mesh, const GapGeometry& geom,
                                     const ElasticConstants& c,
                                     const BoundaryData& phi,
                                     const SolveOptions& opts = {});

/// sum_alpha C1^a v1^a + sum_alpha C2^a v2^a + v3 on the matrix region.
VectorField reconstruct(const DecompositionSet& dec,
                        const RigidCoefficients& C);

struct ConvergenceRow {
  int n = 0;
  double lambda_n = 0.0, mu_n = 0.0;
  double h1_dist = 0.0;
  double energy_n = 0.0;    // I_n[u_n]
  double energy_inf = 0.0;  // I_inf[u]
};

struct ConvergenceTable {
  std::vector<ConvergenceRow> rows;
};

/// Solves the finite problem along the stiffness ladder and compares with the
/// limit solution on the same mesh. The ladder must be strictly increasing in
/// min(mu_n, lambda_n + mu_n).
ConvergenceTable convergence_study(
    const Mesh& mesh, const GapGeometry& geom, const ElasticConstants& c,
    const std::vector<std::pair<double, double>>& stiffness_ladder,
    const BoundaryData& phi, const SolveOptions& opts = {});

/// Net traction of the field's matrix-side stress against psi^alpha over
/// Gamma_{which+1}, by midpoint quadrature on the boundary edges.
double traction_integral(const Mesh& mesh, const VectorField& u,
                         const ElasticConstants& c, int which, int alpha);

// Text snapshot of a field: `u i ux uy` per node.
void write_field(std::ostream& os, const VectorField& u);

}  // namespace lamegap
