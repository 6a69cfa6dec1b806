#include "lamegap/geometry.hpp"

#include <doctest.h>

#include <cmath>

using namespace lamegap;

TEST_CASE("disk gap heights") {
  GapGeometry g = disk_geometry(0.1, 1.0);
  auto [h1, h2] = gap_height(g, 0.0);
  CHECK(h1 == doctest::Approx(0.0));
  CHECK(h2 == doctest::Approx(0.0));

  // 1 - sqrt(1 - 0.04), hand value
  auto [a, b] = gap_height(g, 0.2);
  CHECK(a == doctest::Approx(0.0202041).epsilon(1e-4));
  CHECK(b == doctest::Approx(-0.0202041).epsilon(1e-4));
}

TEST_CASE("mflat gap heights") {
  GapGeometry g = mflat_geometry(0.1, 4, 1.0);
  auto [h1, h2] = gap_height(g, 0.5);
  CHECK(h1 == doctest::Approx(0.03125));
  CHECK(h2 == doctest::Approx(-0.03125));
}

TEST_CASE("gap_height window check") {
  GapGeometry g = disk_geometry(0.1, 1.0);
  CHECK_THROWS_AS(gap_height(g, 1.5), std::domain_error);
  CHECK_THROWS_AS(gap_height(g, -1.0), std::domain_error);
}

TEST_CASE("delta values") {
  GapGeometry g = disk_geometry(0.1, 1.0);
  CHECK(delta(g, 0.0) == doctest::Approx(0.05));
  CHECK(delta(g, 0.2) == doctest::Approx(0.0702041).epsilon(1e-3));
  CHECK_THROWS_AS(delta(g, 0.6), std::domain_error);

  GapGeometry m = mflat_geometry(0.1, 4, 1.0);
  m.epsilon = 0.0;  // raw formula evaluation; factories forbid this but the
                    // evaluation itself is defined
  m.r_local = 0.5;
  CHECK(delta(m, 0.5) == doctest::Approx(0.03125));
}

TEST_CASE("delta is even and minimized at zero") {
  GapGeometry g = disk_geometry(0.05, 1.0);
  const double d0 = delta(g, 0.0);
  CHECK(d0 == doctest::Approx(g.epsilon / 2.0));
  for (double z : {0.1, 0.2, 0.3, 0.45}) {
    CHECK(delta(g, z) == doctest::Approx(delta(g, -z)));
    CHECK(delta(g, z) > d0);
  }
}

TEST_CASE("delta two-sided quadratic bound") {
  GapGeometry g = disk_geometry(0.05, 1.0);
  const double C = std::max(1.0, 1.0 / g.kappa0 + 1.0);
  for (int k = 0; k <= 40; ++k) {
    const double z = -g.r_local + 2.0 * g.r_local * k / 40.0;
    const double d = delta(g, z);
    const double q = g.epsilon + z * z;
    CHECK(d <= C * q);
    CHECK(d >= q / C);
  }
}

TEST_CASE("disk Taylor agreement of the graph") {
  const double r = 1.3;
  GapGeometry g = disk_geometry(0.1, r);
  for (int k = 1; k <= 20; ++k) {
    const double x = 0.5 * r * k / 20.0;
    auto [h1, h2] = gap_height(g, x);
    CHECK(std::abs(h1 - x * x / (2.0 * r)) <= x * x * x * x / (r * r * r));
    CHECK(h2 == doctest::Approx(-h1));
  }
}

TEST_CASE("dist_to_segment") {
  GapGeometry g = disk_geometry(0.1, 1.0);
  CHECK(dist_to_segment(g.p1(), g) == doctest::Approx(0.0));
  CHECK(dist_to_segment({0.0, 0.0}, g) == doctest::Approx(0.0));
  CHECK(dist_to_segment({0.3, 0.0}, g) == doctest::Approx(0.3));
  CHECK(dist_to_segment({0.0, 0.06}, g) == doctest::Approx(0.01));
  CHECK(dist_to_segment({0.3, 0.4 + 0.05}, g) == doctest::Approx(0.5));
}

TEST_CASE("graph derivatives match finite differences") {
  for (const GapGeometry& g :
       {disk_geometry(0.1, 1.0), mflat_geometry(0.1, 4, 1.0)}) {
    for (int side = 0; side < 2; ++side) {
      for (double x : {0.05, 0.15, 0.3}) {
        const double h = 1e-6;
        const double fd_slope =
            (graph_value(g, side, x + h) - graph_value(g, side, x - h)) /
            (2 * h);
        const double fd_curv =
            (graph_value(g, side, x + h) - 2 * graph_value(g, side, x) +
             graph_value(g, side, x - h)) /
            (h * h);
        CHECK(graph_slope(g, side, x) == doctest::Approx(fd_slope).epsilon(1e-6));
        CHECK(graph_curvature(g, side, x) ==
              doctest::Approx(fd_curv).epsilon(1e-3));
      }
    }
  }
}

TEST_CASE("boundary path endpoints") {
  GapGeometry g = disk_geometry(0.1, 1.0);
  const Vec2 corner = boundary_path_point(g, 0, 0.0);
  CHECK(corner.x() == doctest::Approx(g.r_local));
  CHECK(corner.y() ==
        doctest::Approx(g.epsilon / 2.0 + graph_value(g, 0, g.r_local)));
  const Vec2 pole = boundary_path_point(g, 0, 1.0);
  CHECK(pole.x() == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(pole.y() == doctest::Approx(g.epsilon / 2.0 + 2.0 * g.radius[0]));

  const Vec2 pole2 = boundary_path_point(g, 1, 1.0);
  CHECK(pole2.y() == doctest::Approx(-g.epsilon / 2.0 - 2.0 * g.radius[1]));

  GapGeometry m = mflat_geometry(0.1, 4, 1.0);
  const Vec2 mp = boundary_path_point(m, 0, 1.0);
  CHECK(mp.x() == doctest::Approx(0.0));
  CHECK(mp.y() ==
        doctest::Approx(m.epsilon / 2.0 + 2.0 * m.mflat_half_height(0)));
  // points on the curve have zero residual
  for (double t : {0.0, 0.2, 0.45, 0.5, 0.7, 1.0})
    CHECK(boundary_residual(m, 0, boundary_path_point(m, 0, t)) <= 1e-12);
}

TEST_CASE("geometry validation") {
  CHECK_THROWS_AS(validate_geometry(disk_geometry(-0.1, 1.0)), ConfigError);
  CHECK_THROWS_AS(validate_geometry(disk_geometry(0.1, 1.0, 2.0)),
                  ConfigError);  // inclusion too close to the outer circle
  GapGeometry bad = mflat_geometry(0.1, 4, 1.0);
  bad.flat_order[0] = 1;
  CHECK_THROWS_AS(validate_geometry(bad), ConfigError);
  CHECK_NOTHROW(validate_geometry(disk_geometry(0.01, 1.0)));
  CHECK_NOTHROW(validate_geometry(mflat_geometry(0.01, 4, 1.0)));
}
