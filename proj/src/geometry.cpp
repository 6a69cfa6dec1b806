#include "lamegap/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace lamegap {

namespace {

double mflat_bump_value(const GapGeometry& g, double s) {
  const double xj = g.mflat_graph_extent();
  if (s <= xj) return 0.0;
  const double w = g.mflat_half_width();
  const double t = std::min((s - xj) / (w - xj), 1.0);
  // C^2 at t=0 (vanishes like t^3), vertical tangent at t=1.
  return g.mflat_bump() * (1.0 - std::sqrt(std::max(1.0 - t * t * t, 0.0)));
}

// |h| including the closure bump; valid for |x1| <= half_width.
double mflat_height(const GapGeometry& g, int side, double x1) {
  const double s = std::abs(x1);
  const double m = static_cast<double>(g.flat_order[side]);
  return 0.5 * g.flat_amp[side] * std::pow(s, m) + mflat_bump_value(g, s);
}

}  // namespace

Vec2 GapGeometry::center(int i) const {
  const double sign = (i == 0) ? 1.0 : -1.0;
  if (shape_kind == ShapeKind::Disk)
    return {0.0, sign * (epsilon / 2.0 + radius[i])};
  return {0.0, sign * (epsilon / 2.0 + mflat_half_height(i))};
}

double GapGeometry::mflat_half_height(int i) const {
  return 0.5 * flat_amp[i] * std::pow(mflat_half_width_, flat_order[i]) +
         mflat_bump_;
}

GapGeometry disk_geometry(double epsilon, double radius, double outer_radius) {
  GapGeometry g;
  g.shape_kind = ShapeKind::Disk;
  g.epsilon = epsilon;
  g.outer_radius = outer_radius;
  g.radius[0] = g.radius[1] = radius;
  g.r_local = std::min(radius / 2.0, 0.5);
  g.kappa0 = 1.0 / radius;
  return g;
}

GapGeometry mflat_geometry(double epsilon, int m, double amp,
                           double outer_radius) {
  GapGeometry g;
  g.shape_kind = ShapeKind::MFlat;
  g.epsilon = epsilon;
  g.outer_radius = outer_radius;
  g.flat_order[0] = g.flat_order[1] = m;
  g.flat_amp[0] = g.flat_amp[1] = amp;
  g.r_local = 0.35;
  g.mflat_half_width_ = 1.0;
  g.mflat_bump_ = 0.55;
  return g;
}

void validate_geometry(const GapGeometry& g) {
  if (!(g.epsilon > 0.0)) throw ConfigError("geometry: epsilon must be > 0");
  if (!(g.outer_radius > 0.0))
    throw ConfigError("geometry: outer_radius must be > 0");
  if (!(g.r_local > 0.0)) throw ConfigError("geometry: r_local must be > 0");
  const double clearance = 0.5;
  if (g.shape_kind == ShapeKind::Disk) {
    for (int i = 0; i < 2; ++i) {
      if (!(g.radius[i] > 0.0)) throw ConfigError("geometry: radius must be > 0");
      if (!(g.r_local < g.radius[i]))
        throw ConfigError("geometry: r_local must be < inclusion radius");
      const double extent = g.epsilon / 2.0 + 2.0 * g.radius[i];
      if (extent + clearance > g.outer_radius)
        throw ConfigError("geometry: inclusion too close to the outer boundary");
    }
  } else {
    for (int i = 0; i < 2; ++i) {
      if (g.flat_order[i] < 2)
        throw ConfigError("geometry: m-flat order must be >= 2");
      if (!(g.flat_amp[i] > 0.0))
        throw ConfigError("geometry: m-flat amplitude must be > 0");
      const double extent = g.epsilon / 2.0 + 2.0 * g.mflat_half_height(i);
      if (extent + clearance > g.outer_radius)
        throw ConfigError("geometry: inclusion too close to the outer boundary");
    }
    if (!(g.mflat_graph_extent() < g.mflat_half_width()))
      throw ConfigError("geometry: m-flat graph window exceeds the body width");
  }
}

double graph_value(const GapGeometry& g, int side, double x1) {
  const double sign = (side == 0) ? 1.0 : -1.0;
  if (g.shape_kind == ShapeKind::Disk) {
    const double r = g.radius[side];
    return sign * (r - std::sqrt(std::max(r * r - x1 * x1, 0.0)));
  }
  return sign * mflat_height(g, side, x1);
}

double graph_slope(const GapGeometry& g, int side, double x1) {
  const double sign = (side == 0) ? 1.0 : -1.0;
  if (g.shape_kind == ShapeKind::Disk) {
    const double r = g.radius[side];
    return sign * x1 / std::sqrt(r * r - x1 * x1);
  }
  const double m = static_cast<double>(g.flat_order[side]);
  const double s = std::abs(x1);
  const double sgn_x = (x1 >= 0.0) ? 1.0 : -1.0;
  return sign * sgn_x * 0.5 * g.flat_amp[side] * m * std::pow(s, m - 1.0);
}

double graph_curvature(const GapGeometry& g, int side, double x1) {
  const double sign = (side == 0) ? 1.0 : -1.0;
  if (g.shape_kind == ShapeKind::Disk) {
    const double r = g.radius[side];
    const double q = r * r - x1 * x1;
    return sign * r * r / (q * std::sqrt(q));
  }
  const double m = static_cast<double>(g.flat_order[side]);
  const double s = std::abs(x1);
  return sign * 0.5 * g.flat_amp[side] * m * (m - 1.0) * std::pow(s, m - 2.0);
}

std::pair<double, double> gap_height(const GapGeometry& g, double x1) {
  if (!(std::abs(x1) < 2.0 * g.r_local))
    throw std::domain_error("gap_height: x1 outside the gap window");
  return {graph_value(g, 0, x1), graph_value(g, 1, x1)};
}

double delta(const GapGeometry& g, double z1) {
  if (!(std::abs(z1) <= g.r_local))
    throw std::domain_error("delta: z1 outside the gap window");
  return (g.epsilon + graph_value(g, 0, z1) - graph_value(g, 1, z1)) / 2.0;
}

double dist_to_segment(const Vec2& x, const GapGeometry& g) {
  const Vec2 a = g.p2();
  const Vec2 b = g.p1();
  const Vec2 ab = b - a;
  const double t =
      std::clamp((x - a).dot(ab) / ab.squaredNorm(), 0.0, 1.0);
  return (x - (a + t * ab)).norm();
}

Vec2 boundary_path_point(const GapGeometry& g, int which, double t) {
  const double sign = (which == 0) ? 1.0 : -1.0;
  if (g.shape_kind == ShapeKind::Disk) {
    const double r = g.radius[which];
    const Vec2 c = g.center(which);
    const double phi_c = std::asin(g.r_local / r);
    const double phi = phi_c + t * (M_PI - phi_c);
    return {c.x() + r * std::sin(phi), c.y() - sign * r * std::cos(phi)};
  }
  const double w = g.mflat_half_width();
  const double r = g.r_local;
  const double c = g.mflat_half_height(which);
  if (t <= 0.5) {
    const double x1 = r + 2.0 * t * (w - r);
    return {x1, sign * (g.epsilon / 2.0 + mflat_height(g, which, x1))};
  }
  const double x1 = w * (2.0 - 2.0 * t);
  return {x1, sign * (g.epsilon / 2.0 + 2.0 * c - mflat_height(g, which, x1))};
}

double dist_to_inclusion(const GapGeometry& g, int which, const Vec2& x) {
  if (g.shape_kind == ShapeKind::Disk) {
    return std::max(0.0, (x - g.center(which)).norm() - g.radius[which]);
  }
  // Polyline distance over a fixed sampling of the closed boundary.
  const int n = 512;
  const double sign = (which == 0) ? 1.0 : -1.0;
  std::vector<Vec2> pts;
  pts.reserve(2 * n + 2 * n);
  for (int k = -n; k <= n; ++k) {
    const double x1 = g.r_local * static_cast<double>(k) / n;
    pts.emplace_back(x1,
                     sign * (g.epsilon / 2.0 + mflat_height(g, which, x1)));
  }
  for (int k = 0; k <= n; ++k) {
    Vec2 p = boundary_path_point(g, which, static_cast<double>(k) / n);
    pts.emplace_back(p);
  }
  for (int k = n; k >= 0; --k) {
    Vec2 p = boundary_path_point(g, which, static_cast<double>(k) / n);
    pts.emplace_back(-p.x(), p.y());
  }
  double best = std::numeric_limits<double>::max();
  for (size_t i = 0; i + 1 < pts.size(); ++i) {
    const Vec2 a = pts[i], b = pts[i + 1];
    const Vec2 ab = b - a;
    const double len2 = ab.squaredNorm();
    const double t =
        (len2 > 0.0) ? std::clamp((x - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
    best = std::min(best, (x - (a + t * ab)).norm());
  }
  // Inside test by winding is unnecessary here: interior queries are not
  // made through this entry point.
  return best;
}

double boundary_residual(const GapGeometry& g, int which, const Vec2& p) {
  if (g.shape_kind == ShapeKind::Disk) {
    return std::abs((p - g.center(which)).norm() - g.radius[which]);
  }
  const double w = g.mflat_half_width();
  if (std::abs(p.x()) > w) return std::abs(p.x()) - w;
  const double sign = (which == 0) ? 1.0 : -1.0;
  const double c = g.mflat_half_height(which);
  const double axis = sign * (g.epsilon / 2.0 + c);
  return std::abs(std::abs(p.y() - axis) -
                  (c - mflat_height(g, which, p.x())));
}

}  // namespace lamegap
