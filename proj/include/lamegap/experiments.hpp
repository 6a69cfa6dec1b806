#pragma once

#include "lamegap/auxfields.hpp"
#include "lamegap/coeffsys.hpp"
#include "lamegap/mesh.hpp"
#include "lamegap/solvers.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace lamegap {

struct SweepConfig {
  GapGeometry geometry;  // epsilon is overridden per row
  std::vector<double> epsilons;
  int h_gap = 8;
  double h_far = 0.5;
  ElasticConstants material;
  BoundaryData phi;
  SolveOptions solver;
  int jobs = 1;
  int profile_points = 12;
};

struct ProfileSample {
  double dist = 0.0;       // distance to the segment P1P2
  double grad_norm = 0.0;  // |grad u| at the sample
  double product = 0.0;    // grad against the predicted envelope
};

struct ProfileTable {
  std::vector<ProfileSample> samples;
  int skipped = 0;  // samples that fell inside an inclusion
};

struct SweepRow {
  double epsilon = 0.0;
  bool failed = false;
  std::string fail_reason;

  double sup_grad_matrix = 0.0;
  double sup_grad_fiber = 0.0;
  double c_diff_1 = 0.0, c_diff_2 = 0.0;  // from the 6x6 block solve
  double cramer_d1 = 0.0, cramer_d2 = 0.0;
  double c_max = 0.0;
  RigidCoefficients coeffs;
  AuditReport audit;
  double energy_inf = 0.0;
  double recon_h1_rel = 0.0;  // reconstruction vs limit field, relative H1
  double sup_grad_v11 = 0.0;
  ResidualReport residuals;
  ProfileTable profile;
  QualityReport mesh_q;
};

struct RateTable {
  SweepConfig config;
  std::vector<SweepRow> rows;
};

/// Runs the full pipeline per epsilon: mesh, limit solve, decomposition,
/// coefficient system, audit, residuals, profile. A failing row records its
/// reason and the sweep continues. Rows run on `config.jobs` workers; output
/// order follows the epsilon list.
RateTable sweep_epsilon(const SweepConfig& config);

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double stderr_slope = 0.0;
  std::vector<double> leverage;
  int n = 0;
  bool dropped_coarsest = false;
};

/// Least squares on (log eps, log q). Throws PreconditionError when fewer
/// than 4 positive entries are available. The coarsest point is dropped when
/// its leverage exceeds 0.8.
RateFit fit_rate(const std::vector<double>& epsilons,
                 const std::vector<double>& values);

/// Named-column access on a RateTable (names match the rates.csv header).
std::vector<double> table_column(const RateTable& table,
                                 const std::string& column);
RateFit fit_rate(const RateTable& table, const std::string& column);

/// Samples |grad u| along the centerline x2 = 0 at distances
/// r_local * (j/n)^2 and forms the boundedness product of the pointwise
/// estimate: (sqrt(eps)+d)*|grad u| for disks,
/// (eps+d^m)/(eps^(1-1/m)+d)*|grad u| for m-flat pairs.
ProfileTable profile_extract(const Mesh& mesh, const LimitSolution& solution,
                             const GapGeometry& geom, int points = 12);

ConvergenceTable run_convergence_experiment(
    const Mesh& mesh, const GapGeometry& geom, const ElasticConstants& c,
    const std::vector<std::pair<double, double>>& ladder,
    const BoundaryData& phi, const SolveOptions& opts, std::ostream* csv);

// CSV writers (headers documented in the README)
void write_rates_csv(std::ostream& os, const RateTable& table);
void write_coeff_audit_csv(std::ostream& os, const RateTable& table);
void write_residuals_csv(std::ostream& os, const RateTable& table);
void write_profile_csv(std::ostream& os, const ProfileTable& profile);
void write_convergence_csv(std::ostream& os, const ConvergenceTable& table);

/// Element gradient at a point, by containment search over matrix triangles;
/// returns false when the point is not in the matrix region.
bool gradient_at(const Mesh& mesh, const VectorField& u, const Vec2& x,
                 Mat2& grad);

}  // namespace lamegap
