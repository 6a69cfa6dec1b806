#pragma once

#include "lamegap/types.hpp"

#include <utility>

namespace lamegap {

enum class ShapeKind { Disk, MFlat };

/// Two nearly-touching inclusions D1 (upper) and D2 (lower) inside a circular
/// outer domain centered at the origin. Near the gap the inclusion boundaries
/// are the graphs
///     x2 =  epsilon/2 + h1(x1)   (bottom of D1)
///     x2 = -epsilon/2 + h2(x1)   (top of D2, h2 <= 0)
/// for |x1| < 2*r_local. The closest points are P1 = (0, eps/2),
/// P2 = (0, -eps/2).
struct GapGeometry {
  ShapeKind shape_kind = ShapeKind::Disk;
  double epsilon = 0.1;
  double outer_radius = 4.0;
  double r_local = 0.5;  // half-width R of the gap window

  // Disk case: radius per inclusion.
  double radius[2] = {1.0, 1.0};

  // m-flat case: h = (amp/2)|x1|^m per inclusion, plus the closure bump
  // beyond the graph window (see boundary_path_point).
  int flat_order[2] = {4, 4};
  double flat_amp[2] = {1.0, 1.0};

  double kappa0 = 1.0;  // curvature lower bound, disk case

  Vec2 p1() const { return {0.0, epsilon / 2.0}; }
  Vec2 p2() const { return {0.0, -epsilon / 2.0}; }

  // Center of inclusion i (0 = upper D1, 1 = lower D2).
  Vec2 center(int i) const;

  // m-flat closure parameters: graph holds on |x1| <= graph_extent, the body
  // spans |x1| <= half_width and closes with a vertical-tangent bump.
  double mflat_graph_extent() const { return 2.0 * r_local; }
  double mflat_half_width() const { return mflat_half_width_; }
  double mflat_bump() const { return mflat_bump_; }
  // half of the vertical extent of an m-flat inclusion
  double mflat_half_height(int i) const;

  double mflat_half_width_ = 1.0;
  double mflat_bump_ = 0.55;
};

GapGeometry disk_geometry(double epsilon, double radius = 1.0,
                          double outer_radius = 4.0);
GapGeometry mflat_geometry(double epsilon, int m, double amp = 1.0,
                           double outer_radius = 4.0);

// Throws ConfigError when the configuration violates the placement or shape
// invariants (positive gap, inclusions well inside the outer disk, m >= 2).
void validate_geometry(const GapGeometry& g);

// Graph values (h1, h2) at x1; |x1| < 2*r_local required.
std::pair<double, double> gap_height(const GapGeometry& g, double x1);

// Signed graph value/derivatives for side i (0 -> h1 >= 0, 1 -> h2 <= 0).
// No window check: callers of the derivative forms stay inside the window.
double graph_value(const GapGeometry& g, int side, double x1);
double graph_slope(const GapGeometry& g, int side, double x1);
double graph_curvature(const GapGeometry& g, int side, double x1);

// Half gap width delta(z1) = (epsilon + h1 - h2)/2; |z1| <= r_local required.
double delta(const GapGeometry& g, double z1);

// Euclidean distance from x to the closed segment P1P2.
double dist_to_segment(const Vec2& x, const GapGeometry& g);

// Point on the boundary of inclusion `which` (0 or 1) outside the gap window,
// right half only: t = 0 is the window corner at x1 = +r_local, t = 1 is the
// far pole at x1 = 0 on the side away from the gap. The parameterization is
// continuous but not arclength; mesh generation re-marches it.
Vec2 boundary_path_point(const GapGeometry& g, int which, double t);

// Distance from x to inclusion `which` (0 outside-distance; 0 if inside).
double dist_to_inclusion(const GapGeometry& g, int which, const Vec2& x);

// Residual of the analytic boundary description at p; 0 (up to roundoff) iff
// p lies on the boundary of inclusion `which`. Used for mesh fit checks.
double boundary_residual(const GapGeometry& g, int which, const Vec2& p);

}  // namespace lamegap
