#include "lamegap/sparsela.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>

#include <array>
#include <cmath>

namespace lamegap {

namespace {

// 6x6 element stiffness of the constant-strain triangle, exactly symmetric.
Eigen::Matrix<double, 6, 6> element_stiffness(const Mesh& mesh, int t,
                                              const ElasticConstants& c) {
  const auto& tr = mesh.triangles[t];
  const Vec2 p0 = mesh.nodes[tr.v[0]];
  const Vec2 p1 = mesh.nodes[tr.v[1]];
  const Vec2 p2 = mesh.nodes[tr.v[2]];
  const double det = (p1.x() - p0.x()) * (p2.y() - p0.y()) -
                     (p2.x() - p0.x()) * (p1.y() - p0.y());
  const double area = 0.5 * det;
  const Vec2 g[3] = {{(p1.y() - p2.y()) / det, (p2.x() - p1.x()) / det},
                     {(p2.y() - p0.y()) / det, (p0.x() - p2.x()) / det},
                     {(p0.y() - p1.y()) / det, (p1.x() - p0.x()) / det}};

  // strain of the (node a, component i) shape mode
  std::array<Mat2, 6> modes;
  for (int a = 0; a < 3; ++a)
    for (int i = 0; i < 2; ++i) {
      Mat2 grad = Mat2::Zero();
      grad.row(i) = g[a].transpose();
      modes[2 * a + i] = strain(grad);
    }

  Eigen::Matrix<double, 6, 6> K;
  for (int r = 0; r < 6; ++r) {
    for (int s = r; s < 6; ++s) {
      const double v = area * tensor_energy_product(c, modes[r], modes[s]);
      K(r, s) = v;
      K(s, r) = v;
    }
  }
  return K;
}

struct DofExpansion {
  // u component of a node as a weighted combination of global dofs
  int count = 0;
  int dof[2];
  double w[2];
  bool fixed = false;
};

}  // namespace

SparseSystem assemble(const Mesh& mesh, const MaterialMap& materials,
                      const ConstraintSpec& constraints,
                      const std::vector<DirichletValues>& extra_values) {
  SparseSystem sys;
  sys.mesh = &mesh;
  const int nn = mesh.node_count();

  // node -> inclusion membership (-1 matrix/none)
  std::vector<int8_t> node_incl(nn, -1);
  for (const auto& tr : mesh.triangles) {
    if (tr.region == Region::Matrix) continue;
    const int8_t which = (tr.region == Region::Incl1) ? 0 : 1;
    for (int v : tr.v) node_incl[v] = which;
  }
  for (const auto& be : mesh.boundary_edges) {
    if (be.tag == BoundaryTag::Outer) continue;
    const int8_t which = (be.tag == BoundaryTag::Gamma1) ? 0 : 1;
    node_incl[be.a] = which;
    node_incl[be.b] = which;
  }

  // Dirichlet node sets from tagged edges
  std::vector<int8_t> dirichlet_tag(nn, -1);
  for (const auto& be : mesh.boundary_edges) {
    const int tag = static_cast<int>(be.tag);
    if (!constraints.dirichlet[tag]) continue;
    dirichlet_tag[be.a] = static_cast<int8_t>(tag);
    dirichlet_tag[be.b] = static_cast<int8_t>(tag);
  }

  // nodes touched by assembled elements
  std::vector<char> active(nn, 0);
  std::vector<int> assembled_tris;
  for (int t = 0; t < mesh.tri_count(); ++t) {
    const auto& tr = mesh.triangles[t];
    if (!materials.per_region[static_cast<int>(tr.region)]) continue;
    assembled_tris.push_back(t);
    for (int v : tr.v) active[v] = 1;
  }

  sys.node_dofs.assign(nn, {});
  int next = 0;
  for (int i = 0; i < nn; ++i) {
    if (!active[i]) continue;
    const bool rigid = node_incl[i] >= 0 && constraints.rigid[node_incl[i]];
    if (dirichlet_tag[i] >= 0) {
      if (rigid)
        throw PreconditionError(
            "assemble: node is both Dirichlet and rigid-condensed");
      sys.node_dofs[i] = {NodeDof::Dirichlet, dirichlet_tag[i]};
    } else if (rigid) {
      sys.node_dofs[i] = {NodeDof::Rigid, node_incl[i]};
    } else {
      sys.node_dofs[i] = {NodeDof::Free, next};
      next += 2;
    }
  }
  for (int w = 0; w < 2; ++w)
    if (constraints.rigid[w]) {
      sys.rigid_base[w] = next;
      next += 3;
    }
  sys.n = next;

  // per-column Dirichlet nodal values
  const int ncols = 1 + static_cast<int>(extra_values.size());
  Eigen::MatrixXd dvals = Eigen::MatrixXd::Zero(2 * nn, ncols);
  for (int i = 0; i < nn; ++i) {
    if (sys.node_dofs[i].kind != NodeDof::Dirichlet) continue;
    const int tag = sys.node_dofs[i].index;
    const Vec2 v0 = (*constraints.dirichlet[tag])(mesh.nodes[i]);
    dvals(2 * i, 0) = v0.x();
    dvals(2 * i + 1, 0) = v0.y();
    for (size_t k = 0; k < extra_values.size(); ++k) {
      if (!extra_values[k].value[tag])
        throw PreconditionError("assemble: extra value set missing a tag");
      const Vec2 v = (*extra_values[k].value[tag])(mesh.nodes[i]);
      dvals(2 * i, 1 + k) = v.x();
      dvals(2 * i + 1, 1 + k) = v.y();
    }
  }

  auto expansion = [&](int node, int comp) {
    DofExpansion e;
    const NodeDof& nd = sys.node_dofs[node];
    switch (nd.kind) {
      case NodeDof::Free:
        e.count = 1;
        e.dof[0] = nd.index + comp;
        e.w[0] = 1.0;
        break;
      case NodeDof::Rigid: {
        const int base = sys.rigid_base[nd.index];
        const Vec2 p = mesh.nodes[node];
        e.count = 2;
        // u_x = c1 + c3 * x2, u_y = c2 - c3 * x1
        e.dof[0] = base + comp;
        e.w[0] = 1.0;
        e.dof[1] = base + 2;
        e.w[1] = (comp == 0) ? p.y() : -p.x();
        break;
      }
      case NodeDof::Dirichlet:
        e.fixed = true;
        break;
      case NodeDof::Inactive:
        throw PreconditionError("assemble: inactive node referenced");
    }
    return e;
  };

  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(assembled_tris.size() * 36);
  sys.b = Eigen::MatrixXd::Zero(sys.n, ncols);

  for (int t : assembled_tris) {
    const auto& tr = mesh.triangles[t];
    const auto& c = *materials.per_region[static_cast<int>(tr.region)];
    const auto K = element_stiffness(mesh, t, c);
    DofExpansion exp_local[6];
    for (int a = 0; a < 3; ++a)
      for (int i = 0; i < 2; ++i)
        exp_local[2 * a + i] = expansion(tr.v[a], i);

    for (int r = 0; r < 6; ++r) {
      const auto& er = exp_local[r];
      if (er.fixed) continue;
      for (int s = 0; s < 6; ++s) {
        const auto& es = exp_local[s];
        const double v = K(r, s);
        if (es.fixed) {
          const int sn = tr.v[s / 2], sc = s % 2;
          for (int a = 0; a < er.count; ++a)
            for (int k = 0; k < ncols; ++k)
              sys.b(er.dof[a], k) -= er.w[a] * v * dvals(2 * sn + sc, k);
        } else {
          for (int a = 0; a < er.count; ++a)
            for (int bcol = 0; bcol < es.count; ++bcol)
              trips.emplace_back(er.dof[a], es.dof[bcol],
                                 er.w[a] * v * es.w[bcol]);
        }
      }
    }
  }

  sys.A.resize(sys.n, sys.n);
  sys.A.setFromTriplets(trips.begin(), trips.end());
  // exact symmetry regardless of accumulation order
  Eigen::SparseMatrix<double> At = sys.A.transpose();
  sys.A = 0.5 * (sys.A + At);
  return sys;
}

namespace {

SolveStats pcg(const Eigen::SparseMatrix<double>& A, const Eigen::VectorXd& b,
               Eigen::VectorXd& x, const Eigen::VectorXd& inv_diag,
               double tol, int max_iter) {
  SolveStats stats;
  const double bnorm = b.norm();
  if (bnorm == 0.0) {
    x.setZero();
    stats.residual = 0.0;
    return stats;
  }
  Eigen::VectorXd r = b - A * x;
  Eigen::VectorXd z = inv_diag.cwiseProduct(r);
  Eigen::VectorXd p = z;
  double rz = r.dot(z);
  double rnorm = r.norm();
  stats.residual_history.push_back(rnorm / bnorm);
  Eigen::VectorXd Ap(A.rows());
  while (rnorm / bnorm > tol && stats.iterations < max_iter) {
    Ap.noalias() = A * p;
    const double alpha = rz / p.dot(Ap);
    x += alpha * p;
    r -= alpha * Ap;
    z = inv_diag.cwiseProduct(r);
    const double rz_new = r.dot(z);
    p = z + (rz_new / rz) * p;
    rz = rz_new;
    rnorm = r.norm();
    ++stats.iterations;
    stats.residual_history.push_back(rnorm / bnorm);
  }
  stats.residual = rnorm / bnorm;
  return stats;
}

}  // namespace

SolveResult solve_spd(const SparseSystem& sys, const SolveOptions& opts,
                      const Eigen::VectorXd* initial_guess) {
  if (!(opts.tol > 0.0) || opts.tol > 1e-6)
    throw PreconditionError("solve_spd: tol must lie in (0, 1e-6]");
  SolveResult res;
  const int ncols = static_cast<int>(sys.b.cols());
  res.x.resize(sys.n, ncols);
  if (sys.n == 0) return res;

  if (opts.mode == SolveOptions::Mode::Direct) {
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(sys.A);
    if (ldlt.info() != Eigen::Success)
      throw SolveError("solve_spd: LDLT factorization failed", {}, {});
    if (ldlt.vectorD().minCoeff() <= 0.0)
      throw SolveError("solve_spd: system is not positive definite", {}, {});
    for (int k = 0; k < ncols; ++k) {
      res.x.col(k) = ldlt.solve(sys.b.col(k));
      const double bn = sys.b.col(k).norm();
      res.stats.residual =
          bn > 0 ? (sys.A * res.x.col(k) - sys.b.col(k)).norm() / bn : 0.0;
    }
    return res;
  }

  if (opts.precond == SolveOptions::Precond::IncompleteCholesky) {
    Eigen::IncompleteCholesky<double> ic(sys.A);
    for (int k = 0; k < ncols; ++k) {
      // CG with the incomplete factor, hand-rolled for the residual history
      Eigen::VectorXd x = (initial_guess && k == 0)
                              ? *initial_guess
                              : Eigen::VectorXd::Zero(sys.n);
      const Eigen::VectorXd b = sys.b.col(k);
      const double bnorm = b.norm();
      SolveStats stats;
      if (bnorm == 0.0) {
        res.x.col(k).setZero();
        continue;
      }
      Eigen::VectorXd r = b - sys.A * x;
      Eigen::VectorXd z = ic.solve(r);
      Eigen::VectorXd p = z;
      double rz = r.dot(z);
      double rnorm = r.norm();
      stats.residual_history.push_back(rnorm / bnorm);
      while (rnorm / bnorm > opts.tol && stats.iterations < opts.max_iter) {
        const Eigen::VectorXd Ap = sys.A * p;
        const double alpha = rz / p.dot(Ap);
        x += alpha * p;
        r -= alpha * Ap;
        z = ic.solve(r);
        const double rz_new = r.dot(z);
        p = z + (rz_new / rz) * p;
        rz = rz_new;
        rnorm = r.norm();
        ++stats.iterations;
        stats.residual_history.push_back(rnorm / bnorm);
      }
      stats.residual = rnorm / bnorm;
      if (stats.residual > opts.tol)
        throw SolveError(
            "solve_spd: CG did not converge in " +
                std::to_string(opts.max_iter) +
                " iterations; consider mode=direct (the gap conditioning "
                "grows like 1/(eps h^2))",
            x, stats.residual_history);
      res.x.col(k) = x;
      res.stats = stats;
    }
    return res;
  }

  Eigen::VectorXd inv_diag(sys.n);
  for (int i = 0; i < sys.n; ++i) {
    const double d = sys.A.coeff(i, i);
    inv_diag[i] = (d > 0.0) ? 1.0 / d : 1.0;
  }
  for (int k = 0; k < ncols; ++k) {
    Eigen::VectorXd x = (initial_guess && k == 0)
                            ? *initial_guess
                            : Eigen::VectorXd::Zero(sys.n);
    SolveStats stats =
        pcg(sys.A, sys.b.col(k), x, inv_diag, opts.tol, opts.max_iter);
    if (stats.residual > opts.tol)
      throw SolveError(
          "solve_spd: CG did not converge in " + std::to_string(opts.max_iter) +
              " iterations; consider mode=direct (the gap conditioning grows "
              "like 1/(eps h^2))",
          x, stats.residual_history);
    res.x.col(k) = x;
    res.stats = stats;
  }
  return res;
}

VectorField scatter_solution(const SparseSystem& sys, const Eigen::VectorXd& x,
                             const ConstraintSpec& constraints,
                             const DirichletValues* values) {
  const Mesh& mesh = *sys.mesh;
  VectorField u(mesh);

  // inclusion membership for filling condensed interiors
  std::vector<int8_t> node_incl(mesh.node_count(), -1);
  for (const auto& tr : mesh.triangles) {
    if (tr.region == Region::Matrix) continue;
    const int8_t which = (tr.region == Region::Incl1) ? 0 : 1;
    for (int v : tr.v) node_incl[v] = which;
  }

  RigidMotion rm[2];
  for (int w = 0; w < 2; ++w)
    if (sys.rigid_base[w] >= 0)
      for (int k = 0; k < 3; ++k) rm[w].c[k] = x[sys.rigid_base[w] + k];

  for (int i = 0; i < mesh.node_count(); ++i) {
    const NodeDof& nd = sys.node_dofs[i];
    switch (nd.kind) {
      case NodeDof::Free:
        u.set(i, {x[nd.index], x[nd.index + 1]});
        break;
      case NodeDof::Dirichlet: {
        const int tag = nd.index;
        const BoundaryFn& f = (values && values->value[tag])
                                  ? *values->value[tag]
                                  : *constraints.dirichlet[tag];
        u.set(i, f(mesh.nodes[i]));
        break;
      }
      case NodeDof::Rigid:
        u.set(i, rm[nd.index].at(mesh.nodes[i]));
        break;
      case NodeDof::Inactive:
        if (node_incl[i] >= 0 && constraints.rigid[node_incl[i]])
          u.set(i, rm[node_incl[i]].at(mesh.nodes[i]));
        break;
    }
  }
  return u;
}

RigidMotion rigid_part(const SparseSystem& sys, const Eigen::VectorXd& x,
                       int which) {
  RigidMotion rm;
  if (sys.rigid_base[which] < 0)
    throw PreconditionError("rigid_part: inclusion was not condensed");
  for (int k = 0; k < 3; ++k) rm.c[k] = x[sys.rigid_base[which] + k];
  return rm;
}

}  // namespace lamegap
