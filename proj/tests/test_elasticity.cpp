#include "lamegap/elasticity.hpp"
#include "lamegap/geometry.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace lamegap;

TEST_CASE("rigid basis values") {
  CHECK(rigid_basis(3, {1.0, 2.0}) == Vec2{2.0, -1.0});
  CHECK(rigid_basis(1, {5.0, -3.0}) == Vec2{1.0, 0.0});
  CHECK(rigid_basis(2, {5.0, -7.0}) == Vec2{0.0, 1.0});
  CHECK_THROWS_AS(rigid_basis(0, {0, 0}), PreconditionError);
  CHECK_THROWS_AS(rigid_basis(4, {0, 0}), PreconditionError);
}

TEST_CASE("strain") {
  Mat2 rot;
  rot << 0, 1, -1, 0;  // gradient of psi^3
  CHECK(strain(rot).norm() == doctest::Approx(0.0));
  CHECK(strain(Mat2::Identity()) == Mat2::Identity());
  Mat2 g;
  g << 0, 2, 0, 0;
  Mat2 e = strain(g);
  CHECK(e(0, 1) == doctest::Approx(1.0));
  CHECK(e(1, 0) == doctest::Approx(1.0));
  CHECK(e(0, 0) == doctest::Approx(0.0));
}

TEST_CASE("apply_tensor") {
  ElasticConstants c{1.0, 1.0};
  CHECK((apply_tensor(c, Mat2::Identity()) - 4.0 * Mat2::Identity()).norm() ==
        doctest::Approx(0.0));
  CHECK(apply_tensor(c, Mat2::Zero()).norm() == doctest::Approx(0.0));
  Mat2 tracefree;
  tracefree << 1, 0, 0, -1;
  ElasticConstants c2{7.0, 1.5};
  CHECK((apply_tensor(c2, tracefree) - 2.0 * c2.mu * tracefree).norm() ==
        doctest::Approx(0.0));
  Mat2 asym;
  asym << 0, 1, 0, 0;
  CHECK_THROWS_AS(apply_tensor(c, asym), PreconditionError);
}

TEST_CASE("tensor product self-adjoint and elliptic") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  ElasticConstants c{1.7, 0.9};
  for (int k = 0; k < 50; ++k) {
    Mat2 A, B;
    A << d(rng), 0, 0, d(rng);
    A(0, 1) = A(1, 0) = d(rng);
    B << d(rng), 0, 0, d(rng);
    B(0, 1) = B(1, 0) = d(rng);
    const double ab = tensor_energy_product(c, A, B);
    const double ba = tensor_energy_product(c, B, A);
    CHECK(ab == ba);  // exact, not approximate
    // (C A, B) = (A, C B) through the explicit tensor application
    CHECK(ab == doctest::Approx((apply_tensor(c, A).transpose() * B).trace()));
    const double quad = tensor_energy_product(c, A, A);
    const double n2 = A.squaredNorm();
    CHECK(quad >= std::min(2 * c.mu, 2 * c.lambda + 2 * c.mu) * n2 - 1e-12);
    CHECK(quad <= std::max(2 * c.mu, 2 * c.lambda + 2 * c.mu) * n2 + 1e-12);
  }
}

TEST_CASE("lame_apply on closed forms") {
  auto field = [](auto vf, auto gf, auto hf) {
    AnalyticField f;
    f.value = vf;
    f.gradient = gf;
    f.hessian = hf;
    return f;
  };

  // rigid motions are annihilated
  AnalyticField rigid = field(
      [](const Vec2& x) { return rigid_basis(3, x); },
      [](const Vec2&) { Mat2 g; g << 0, 1, -1, 0; return g; },
      [](const Vec2&) { return std::array<Mat2, 2>{Mat2::Zero(), Mat2::Zero()}; });
  CHECK(lame_apply(rigid, {0.3, -0.2}, {1.0, 1.0}).norm() ==
        doctest::Approx(0.0));

  // u = (x1^2, 0): L = (2 mu + 2(lambda+mu), 0) = (6, 0) at lambda=mu=1
  AnalyticField quad = field(
      [](const Vec2& x) { return Vec2{x.x() * x.x(), 0.0}; },
      [](const Vec2& x) { Mat2 g = Mat2::Zero(); g(0, 0) = 2 * x.x(); return g; },
      [](const Vec2&) {
        std::array<Mat2, 2> h{Mat2::Zero(), Mat2::Zero()};
        h[0](0, 0) = 2.0;
        return h;
      });
  const Vec2 L1 = lame_apply(quad, {0.1, 0.4}, {1.0, 1.0});
  CHECK(L1.x() == doctest::Approx(6.0));
  CHECK(L1.y() == doctest::Approx(0.0));

  // u = (0, x1 x2): L = ((lambda+mu), 0) = (3, 0) at lambda=1, mu=2
  AnalyticField mixed = field(
      [](const Vec2& x) { return Vec2{0.0, x.x() * x.y()}; },
      [](const Vec2& x) {
        Mat2 g = Mat2::Zero();
        g(1, 0) = x.y();
        g(1, 1) = x.x();
        return g;
      },
      [](const Vec2&) {
        std::array<Mat2, 2> h{Mat2::Zero(), Mat2::Zero()};
        h[1](0, 1) = h[1](1, 0) = 1.0;
        return h;
      });
  const Vec2 L2 = lame_apply(mixed, {2.0, 3.0}, {1.0, 2.0});
  CHECK(L2.x() == doctest::Approx(3.0));
  CHECK(L2.y() == doctest::Approx(0.0));
}

TEST_CASE("lame_apply matches finite differences of a smooth field") {
  // trig field with nonvanishing fourth derivatives
  AnalyticField f;
  f.value = [](const Vec2& x) {
    return Vec2{std::sin(x.x()) * std::cos(x.y()), std::cos(2 * x.x() + x.y())};
  };
  f.hessian = [](const Vec2& x) {
    std::array<Mat2, 2> h;
    h[0](0, 0) = -std::sin(x.x()) * std::cos(x.y());
    h[0](0, 1) = h[0](1, 0) = -std::cos(x.x()) * std::sin(x.y());
    h[0](1, 1) = -std::sin(x.x()) * std::cos(x.y());
    h[1](0, 0) = -4 * std::cos(2 * x.x() + x.y());
    h[1](0, 1) = h[1](1, 0) = -2 * std::cos(2 * x.x() + x.y());
    h[1](1, 1) = -std::cos(2 * x.x() + x.y());
    return h;
  };
  const ElasticConstants c{1.3, 0.8};
  const Vec2 x{0.37, -0.21};
  const Vec2 exact = lame_apply(f, x, c);

  auto fd_lame = [&](double h) {
    auto u = f.value;
    auto lap = [&](int comp) {
      const double uxx = (u({x.x() + h, x.y()})[comp] - 2 * u(x)[comp] +
                          u({x.x() - h, x.y()})[comp]) / (h * h);
      const double uyy = (u({x.x(), x.y() + h})[comp] - 2 * u(x)[comp] +
                          u({x.x(), x.y() - h})[comp]) / (h * h);
      return uxx + uyy;
    };
    auto dxy = [&](int comp, int i, int j) {
      Vec2 ei = i == 0 ? Vec2{h, 0} : Vec2{0, h};
      Vec2 ej = j == 0 ? Vec2{h, 0} : Vec2{0, h};
      return (u(x + ei + ej)[comp] - u(x + ei - ej)[comp] -
              u(x - ei + ej)[comp] + u(x - ei - ej)[comp]) /
             (4 * h * h);
    };
    const double div1 = dxy(0, 0, 0) + dxy(1, 0, 1);
    const double div2 = dxy(0, 1, 0) + dxy(1, 1, 1);
    return Vec2{c.mu * lap(0) + (c.lambda + c.mu) * div1,
                c.mu * lap(1) + (c.lambda + c.mu) * div2};
  };

  // steps large enough that h^2 truncation dominates the second differences
  const double e2 = (fd_lame(1e-2) - exact).norm();
  const double e3 = (fd_lame(1e-3) - exact).norm();
  CHECK(e2 / e3 == doctest::Approx(100.0).epsilon(0.2));
}

TEST_CASE("lame_apply exact on quadratics via finite differences") {
  AnalyticField f;
  f.value = [](const Vec2& x) {
    return Vec2{x.x() * x.x() - x.y() * x.y() + 0.5 * x.x() * x.y(),
                x.x() * x.y() - 2.0 * x.x() * x.x()};
  };
  f.hessian = [](const Vec2&) {
    std::array<Mat2, 2> h;
    h[0] << 2, 0.5, 0.5, -2;
    h[1] << -4, 1, 1, 0;
    return h;
  };
  const ElasticConstants c{2.0, 0.7};
  const Vec2 x{1.3, -0.4};
  const Vec2 exact = lame_apply(f, x, c);
  // second central differences of a quadratic are exact
  const double h = 1e-3;
  auto u = f.value;
  const double uxx0 = (u({x.x() + h, x.y()})[0] - 2 * u(x)[0] +
                       u({x.x() - h, x.y()})[0]) / (h * h);
  CHECK(uxx0 == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(std::isfinite(exact.x()));
}
