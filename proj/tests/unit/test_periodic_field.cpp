#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "difffactor/errors.hpp"
#include "difffactor/interpolation.hpp"
#include "difffactor/periodic_field.hpp"

using namespace difffactor;

namespace {

constexpr double kPi = std::numbers::pi;

// Random real trigonometric polynomial with |wavenumbers| <= band.
PeriodicField random_field(std::mt19937_64& rng, int dimension, int grid, int band, double amp = 1.0) {
  std::normal_distribution<double> normal;
  std::vector<std::array<double, 4>> terms;
  for (int k = 0; k <= band; ++k)
    for (int l = (dimension == 1 ? 0 : -band); l <= (dimension == 1 ? 0 : band); ++l)
      terms.push_back({double(k), double(l), normal(rng), 2 * kPi * std::uniform_real_distribution<>(0, 1)(rng)});
  if (dimension == 1)
    return PeriodicField::sample(grid, [&](double x) {
      double s = 0;
      for (auto& t : terms) s += amp * t[2] * std::cos(2 * kPi * t[0] * x + t[3]) / (1 + t[0] * t[0]);
      return s;
    });
  return PeriodicField::sample(grid, [&](double x, double y) {
    double s = 0;
    for (auto& t : terms)
      s += amp * t[2] * std::cos(2 * kPi * (t[0] * x + t[1] * y) + t[3]) / (1 + t[0] * t[0] + t[1] * t[1]);
    return s;
  });
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST_CASE("construction rejects bad grids and samples") {
  CHECK_THROWS_AS(PeriodicField(1, 6, std::vector<double>(6)), InvalidArgument);
  CHECK_THROWS_AS(PeriodicField(1, 4, std::vector<double>(4)), InvalidArgument);
  CHECK_THROWS_AS(PeriodicField(3, 8, std::vector<double>(8)), InvalidArgument);
  CHECK_THROWS_AS(PeriodicField(1, 8, std::vector<double>(7)), InvalidArgument);
  std::vector<double> bad(8, 0.0);
  bad[3] = NAN;
  CHECK_THROWS_AS(PeriodicField(1, 8, bad), InvalidArgument);
}

TEST_CASE("spectral round trip") {
  std::mt19937_64 rng(7);
  for (int dim : {1, 2}) {
    for (int grid : {8, 32, 128}) {
      auto f = random_field(rng, dim, grid, dim == 1 ? grid / 2 - 1 : std::min(grid / 2 - 1, 12));
      auto g = PeriodicField::from_spectrum(dim, grid, f.spectrum());
      double scale = 0;
      for (double v : f.values()) scale = std::max(scale, std::abs(v));
      CHECK(max_abs_diff(f.values(), g.values()) <= 1e-12 * scale);
    }
  }
}

TEST_CASE("seminorm closed forms") {
  auto zero = PeriodicField::zeros(2, 16);
  for (int n = 0; n <= 3; ++n) CHECK(seminorm(zero, n) == 0.0);

  auto s = PeriodicField::sample(32, [](double x) { return std::sin(2 * kPi * x); });
  CHECK(seminorm(s, 0) == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(std::abs(seminorm(s, 1) - 2 * kPi) <= 1e-10);

  auto c = PeriodicField::constant(2, 16, -0.37);
  for (int n = 0; n <= 4; ++n) CHECK(seminorm(c, n) == doctest::Approx(0.37).epsilon(1e-14));

  CHECK_THROWS_AS(seminorm(s, 9), InvalidArgument);
  CHECK_NOTHROW(seminorm(s, 9, 10));
}

TEST_CASE("single mode derivative scales the seminorm by (2 pi k)^n") {
  for (int k : {1, 3, 5}) {
    auto f = PeriodicField::sample(64, [k](double x, double y) { return std::cos(2 * kPi * k * x) + 0 * y; });
    for (int n = 0; n <= 4; ++n) {
      double expected = std::pow(2 * kPi * k, n);
      CHECK(std::abs(seminorm(f, n) - std::max(1.0, expected)) <= 1e-8 * std::max(1.0, expected));
    }
  }
}

TEST_CASE("seminorm is subadditive and monotone in the order") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    int dim = 1 + trial % 2;
    auto f = random_field(rng, dim, 32, 6);
    auto g = random_field(rng, dim, 32, 6);
    double prev = 0;
    for (int n = 0; n <= 3; ++n) {
      double sf = seminorm(f, n);
      CHECK(seminorm(f + g, n) <= sf + seminorm(g, n) + 1e-12);
      CHECK(sf >= prev);
      prev = sf;
    }
  }
}

TEST_CASE("smoothing") {
  std::mt19937_64 rng(3);
  auto f = random_field(rng, 2, 32, 15);
  auto same = smooth(f, 16);
  CHECK(same.spectrum() == f.spectrum());

  auto mean_only = smooth(f, 0);
  for (double v : mean_only.values()) CHECK(v == doctest::Approx(f.mean()).epsilon(1e-13));

  auto mode5 = PeriodicField::sample(32, [](double x) { return std::sin(2 * kPi * 5 * x); });
  CHECK(seminorm(smooth(mode5, 4), 0) <= 1e-14);

  // two-mode field: dropping the high mode cannot raise any seminorm
  auto two = PeriodicField::sample(64, [](double x) { return std::cos(2 * kPi * x) + 0.5 * std::cos(2 * kPi * 6 * x); });
  for (int n = 0; n <= 3; ++n) CHECK(seminorm(smooth(two, 3), n) <= seminorm(two, n) + 1e-12);
  CHECK_THROWS_AS(smooth(f, -1.0), InvalidArgument);
}

TEST_CASE("evaluate") {
  auto c = PeriodicField::sample(32, [](double x) { return std::cos(2 * kPi * x); });
  std::vector<double> p{0.125};
  CHECK(std::abs(evaluate(c, p)[0] - std::cos(kPi / 4)) <= 1e-9);

  std::mt19937_64 rng(5);
  auto f = random_field(rng, 2, 16, 7);
  std::vector<Point2> knots;
  for (int i = 0; i < 16; ++i)
    for (int j = 0; j < 16; ++j) knots.push_back({i / 16.0, j / 16.0});
  CHECK(max_abs_diff(evaluate(f, knots), f.values()) <= 1e-13);

  auto k = PeriodicField::constant(1, 64, 2.5);
  std::uniform_real_distribution<double> u(-3, 3);
  std::vector<double> pts(50);
  for (auto& x : pts) x = u(rng);
  for (double v : evaluate(k, pts)) CHECK(v == doctest::Approx(2.5).epsilon(1e-14));

  std::vector<double> nan_pt{NAN};
  CHECK_THROWS_AS(evaluate(k, nan_pt), InvalidArgument);
}

TEST_CASE("band-limited interpolation error below 1e-9") {
  std::mt19937_64 rng(13);
  for (auto [dim, grid] : {std::pair{1, 256}, std::pair{2, 64}}) {
    int band = grid / 4;
    std::normal_distribution<double> normal;
    std::vector<std::array<double, 4>> terms;
    for (int t = 0; t < 12; ++t)
      terms.push_back({double(int(rng() % (band + 1))), double(int(rng() % (2 * band + 1)) - band), normal(rng),
                       normal(rng)});
    auto exact = [&](double x, double y) {
      double s = 0;
      for (auto& t : terms) s += t[2] * std::cos(2 * kPi * (t[0] * x + (dim == 2 ? t[1] * y : 0)) + t[3]);
      return s;
    };
    std::uniform_real_distribution<double> u(0, 1);
    double worst = 0;
    if (dim == 1) {
      auto f = PeriodicField::sample(grid, [&](double x) { return exact(x, 0); });
      std::vector<double> pts(500);
      for (auto& x : pts) x = u(rng);
      auto v = evaluate(f, pts);
      for (std::size_t i = 0; i < pts.size(); ++i) worst = std::max(worst, std::abs(v[i] - exact(pts[i], 0)));
    } else {
      auto f = PeriodicField::sample(grid, exact);
      std::vector<Point2> pts(500);
      for (auto& p : pts) p = {u(rng), u(rng)};
      auto v = evaluate(f, pts);
      for (std::size_t i = 0; i < pts.size(); ++i) worst = std::max(worst, std::abs(v[i] - exact(pts[i][0], pts[i][1])));
    }
    CHECK(worst < 1e-9);
  }
}

TEST_CASE("quintic spline path reproduces knots and smooth data") {
  auto f = PeriodicField::sample(128, [](double x, double y) { return std::exp(0.3 * std::sin(2 * kPi * x)) * std::cos(2 * kPi * y); });
  FieldInterpolator spline(f, 0);
  REQUIRE_FALSE(spline.direct());
  CHECK(std::abs(spline(3.0 / 128, 17.0 / 128) - f.at(3, 17)) <= 1e-13);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0, 1);
  double worst = 0;
  for (int i = 0; i < 200; ++i) {
    double x = u(rng), y = u(rng);
    worst = std::max(worst, std::abs(spline(x, y) - std::exp(0.3 * std::sin(2 * kPi * x)) * std::cos(2 * kPi * y)));
  }
  CHECK(worst < 1e-10);
}
