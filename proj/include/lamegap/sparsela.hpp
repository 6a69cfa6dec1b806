#pragma once

#include "lamegap/elasticity.hpp"
#include "lamegap/mesh.hpp"
#include "lamegap/types.hpp"

#include <Eigen/Sparse>

#include <functional>
#include <optional>
#include <vector>

namespace lamegap {

using BoundaryFn = std::function<Vec2(const Vec2&)>;

/// Per-region material table; a region without constants is left out of the
/// assembly entirely (the limit problem assembles the matrix region only).
struct MaterialMap {
  std::optional<ElasticConstants> per_region[3];

  static MaterialMap matrix_only(const ElasticConstants& c) {
    MaterialMap m;
    m.per_region[0] = c;
    return m;
  }
  static MaterialMap two_phase(const ElasticConstants& c) {
    MaterialMap m;
    m.per_region[0] = ElasticConstants{c.lambda, c.mu};
    m.per_region[1] = m.per_region[2] = c.inclusion_constants();
    return m;
  }
};

/// Dirichlet tags with positional values, plus the set of inclusions whose
/// nodes are condensed to the three rigid dofs.
struct ConstraintSpec {
  std::optional<BoundaryFn> dirichlet[3];  // indexed by BoundaryTag
  bool rigid[2] = {false, false};
};

/// Extra Dirichlet value sets sharing the structure of a ConstraintSpec,
/// for factoring one operator against several right-hand sides.
struct DirichletValues {
  std::optional<BoundaryFn> value[3];
};

struct NodeDof {
  enum Kind : std::uint8_t { Inactive, Free, Dirichlet, Rigid };
  Kind kind = Inactive;
  int index = -1;  // Free: first of 2 dofs; Rigid: inclusion slot 0/1
};

struct SparseSystem {
  int n = 0;
  Eigen::SparseMatrix<double> A;  // exactly symmetric
  Eigen::MatrixXd b;              // one column per value set
  std::vector<NodeDof> node_dofs;
  int rigid_base[2] = {-1, -1};
  const Mesh* mesh = nullptr;
};

/// Assembles the stiffness operator of the energy over the regions present in
/// `materials`, eliminating Dirichlet dofs and condensing rigid inclusions.
/// `extra_values` appends right-hand-side columns for additional Dirichlet
/// value sets with the same structure.
SparseSystem assemble(const Mesh& mesh, const MaterialMap& materials,
                      const ConstraintSpec& constraints,
                      const std::vector<DirichletValues>& extra_values = {});

struct SolveOptions {
  double tol = 1e-10;        // relative residual; must be <= 1e-6
  int max_iter = 20000;
  enum class Mode { Cg, Direct } mode = Mode::Cg;
  enum class Precond { Jacobi, IncompleteCholesky } precond = Precond::Jacobi;
};

struct SolveStats {
  int iterations = 0;
  double residual = 0.0;
  std::vector<double> residual_history;
};

struct SolveError : std::runtime_error {
  Eigen::VectorXd best_iterate;
  std::vector<double> residual_history;
  SolveError(const std::string& msg, Eigen::VectorXd best,
             std::vector<double> hist)
      : std::runtime_error(msg),
        best_iterate(std::move(best)),
        residual_history(std::move(hist)) {}
};

struct SolveResult {
  Eigen::MatrixXd x;  // one column per rhs column
  SolveStats stats;   // of the last column solved
};

SolveResult solve_spd(const SparseSystem& sys, const SolveOptions& opts = {},
                      const Eigen::VectorXd* initial_guess = nullptr);

/// Expands a solution column into a nodal field: free dofs from x, Dirichlet
/// nodes from `values` (falling back to the spec used at assembly), rigid
/// nodes from the trailing rigid dofs. Inactive nodes of condensed inclusions
/// also receive the rigid motion; other inactive nodes are zero.
VectorField scatter_solution(const SparseSystem& sys,
                             const Eigen::VectorXd& x,
                             const ConstraintSpec& constraints,
                             const DirichletValues* values = nullptr);

/// Rigid coefficients (c1, c2, c3) of inclusion `which` from the tail dofs.
RigidMotion rigid_part(const SparseSystem& sys, const Eigen::VectorXd& x,
                       int which);

}  // namespace lamegap
