#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "difffactor/errors.hpp"
#include "difffactor/herman.hpp"

using namespace difffactor;

namespace {

constexpr double kPi = std::numbers::pi;
const double kGolden = (std::sqrt(5.0) - 1) / 2;

PeriodicField random_line(std::mt19937_64& rng, int grid, int band, double c1) {
  std::normal_distribution<> g;
  std::vector<std::array<double, 3>> t;
  double norm = 0;
  for (int k = 1; k <= band; ++k) {
    t.push_back({double(k), g(rng) / (k * k), 2 * kPi * std::uniform_real_distribution<>(0, 1)(rng)});
    norm += std::abs(t.back()[1]) * 2 * kPi * k;
  }
  return PeriodicField::sample(grid, [&](double x) {
    double s = 0;
    for (auto& m : t) s += c1 / norm * m[1] * std::sin(2 * kPi * m[0] * x + m[2]);
    return s;
  });
}

// [S, R_a] o R_b through the public API.
CircleDiffeo build(const CircleDiffeo& s, double a, double b) {
  int n = s.grid();
  auto c = compose(s, compose(CircleDiffeo::rotation(n, a), compose(invert(s), CircleDiffeo::rotation(n, -a))));
  return compose(c, CircleDiffeo::rotation(n, b));
}

double gap(const PeriodicField& a, const PeriodicField& b) { return seminorm(a - b, 0); }

}  // namespace

TEST_CASE("golden rotation certificate") {
  auto g = DiophantineRotation::golden();
  CHECK(g.alpha() == doctest::Approx(kGolden).epsilon(1e-15));
  // partial quotients of the golden mean are all 1, denominators Fibonacci
  std::vector<long> fib{1, 2, 3, 5, 8, 13, 21, 34, 55, 89, 144, 233, 377};
  CHECK(g.denominators() == fib);
  for (long a : g.partial_quotients()) CHECK(a == 1);
  for (int k = 1; k <= 512; ++k) {
    double d = std::abs(std::exp(std::complex<double>(0, 2 * kPi * k * kGolden)) - 1.0);
    CHECK(d >= g.floor(k) * (1 - 1e-12));
    CHECK(d >= g.floor(-k) * (1 - 1e-12));
  }
  // k |k alpha - p| >= 1/(sqrt5 + 1) for the golden mean and |e^{i t} - 1| >= 4 dist(t/2pi, Z)
  CHECK(g.constant() >= 4 / (std::sqrt(5.0) + 1));
}

TEST_CASE("rational rotations are rejected with the offending mode") {
  CHECK_THROWS_AS(DiophantineRotation(0.5), InvalidArgument);
  try {
    DiophantineRotation(0.25);
  } catch (const InvalidArgument& e) {
    CHECK(std::string(e.what()).find("k = 4") != std::string::npos);
  }
  CHECK_THROWS_AS(DiophantineRotation(1.2), InvalidArgument);
  CHECK_THROWS_AS(DiophantineRotation::parse("abc"), InvalidArgument);
  CHECK(DiophantineRotation::parse("0.3819660112501051").alpha() == doctest::Approx(1 - kGolden));
  auto narrow = DiophantineRotation::golden(16);
  CHECK_THROWS_AS(solve_cohomological(PeriodicField::zeros(1, 64), narrow), InvalidArgument);
}

TEST_CASE("cohomological equation closed forms") {
  auto g = DiophantineRotation::golden();
  auto z = solve_cohomological(PeriodicField::zeros(1, 32), g);
  CHECK(seminorm(z.s, 0) == 0.0);
  CHECK(z.mean == 0.0);

  auto c = solve_cohomological(PeriodicField::constant(1, 32, 0.3), g);
  CHECK(seminorm(c.s, 0) <= 1e-16);
  CHECK(c.mean == doctest::Approx(0.3).epsilon(1e-15));

  const double eps = 0.01;
  auto psi = PeriodicField::sample(64, [&](double x) { return eps * std::cos(2 * kPi * x); });
  auto sol = solve_cohomological(psi, g);
  std::complex<double> expected = (eps / 2) / (std::exp(std::complex<double>(0, 2 * kPi * kGolden)) - 1.0);
  const auto& sp = sol.s.spectrum();
  CHECK(std::abs(sp[1] - expected) <= 1e-12);
  CHECK(std::abs(sp[63] - std::conj(expected)) <= 1e-12);
  for (int i = 2; i < 63; ++i) CHECK(std::abs(sp[i]) <= 1e-15);
}

TEST_CASE("cohomological residual on random band-limited data") {
  std::mt19937_64 rng(5);
  auto g = DiophantineRotation::golden();
  for (int trial = 0; trial < 5; ++trial) {
    auto psi = random_line(rng, 128, 40, 1.0) + PeriodicField::constant(1, 128, 0.1 * trial);
    auto sol = solve_cohomological(psi, g);
    std::vector<double> shifted(128);
    for (int i = 0; i < 128; ++i) shifted[i] = i / 128.0 + kGolden;
    auto moved = evaluate(sol.s, std::span<const double>(shifted));
    double worst = 0;
    for (int i = 0; i < 128; ++i) worst = std::max(worst, std::abs(moved[i] - sol.s[i] - (psi[i] - psi.mean())));
    CHECK(worst <= 1e-10);
    CHECK(sol.mean == doctest::Approx(psi.mean()).epsilon(1e-13));
  }
}

TEST_CASE("factor rotations and the identity") {
  auto g = DiophantineRotation::golden();
  auto id = factor_circle_diffeo(CircleDiffeo::identity(32), g);
  CHECK(id.s.is_identity());
  CHECK(id.beta == 0.0);
  auto r = factor_circle_diffeo(CircleDiffeo::rotation(32, 0.003), g);
  CHECK(seminorm(r.s.displacement(), 0) <= 1e-15);
  CHECK(r.beta == doctest::Approx(0.003).epsilon(1e-14));
}

TEST_CASE("construct then factor round trip") {
  std::mt19937_64 rng(9);
  auto g = DiophantineRotation::golden();
  for (int trial = 0; trial < 5; ++trial) {
    CircleDiffeo s_star(random_line(rng, 64, 4, 0.02));
    double b_star = 0.004 * (trial - 2);
    auto f = build(s_star, kGolden, b_star);
    auto fac = factor_circle_diffeo(f, g);
    CHECK(fac.residual <= 1e-10);
    CHECK(gap(build(fac.s, kGolden, fac.beta).displacement(), f.displacement()) <= 1e-7);
  }
}

TEST_CASE("commutators with the rotation carry no rotation") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 3; ++trial) {
    CircleDiffeo s(random_line(rng, 64, 5, 0.2));
    auto c = commutator_with_rotation(s, kGolden);
    CHECK(std::abs(rotation_number(c, 100000)) <= 1e-5);
  }
}

TEST_CASE("linearization of S -> [S, R_alpha] is s - s o R_{-alpha}") {
  std::mt19937_64 rng(23);
  auto s = random_line(rng, 64, 6, 1.0);
  const double t = 1e-4;
  auto plus = commutator_with_rotation(CircleDiffeo(s * t), kGolden).displacement();
  auto minus = commutator_with_rotation(CircleDiffeo(s * -t), kGolden).displacement();
  std::vector<double> back(64);
  for (int i = 0; i < 64; ++i) back[i] = i / 64.0 - kGolden;
  auto s_back = evaluate(s, std::span<const double>(back));
  double worst = 0;
  for (int i = 0; i < 64; ++i) worst = std::max(worst, std::abs((plus[i] - minus[i]) / (2 * t) - (s[i] - s_back[i])));
  CHECK(worst <= 1e-6);
}

TEST_CASE("basin and convergence errors") {
  auto g = DiophantineRotation::golden();
  auto big = PeriodicField::sample(32, [](double x) { return 0.02 * std::sin(2 * kPi * x); });
  CHECK_THROWS_AS(factor_circle_diffeo(CircleDiffeo(big), g), BasinError);
  HermanOptions opts;
  opts.basin_bound = 1.0;
  opts.max_iterations = 2;
  CHECK_THROWS_AS(factor_circle_diffeo(CircleDiffeo(big), g, opts), ConvergenceError);
}

TEST_CASE("loops: constant, identity and pure rotation") {
  auto g = DiophantineRotation::golden();
  const int n = 32;
  auto one = PeriodicField::sample(n, [](double y) { return 0.004 * std::sin(2 * kPi * y) + 0.002 * std::cos(4 * kPi * y); });
  auto single = factor_circle_diffeo(CircleDiffeo(one), g);
  auto constant = FiberDiffeo(1, PeriodicField::sample(n, [&](double, double y) {
    return 0.004 * std::sin(2 * kPi * y) + 0.002 * std::cos(4 * kPi * y);
  }));
  auto loop = factor_loop(constant, g);
  for (int b = 0; b < n; ++b) {
    CHECK(gap(loop.s.fiber(b).displacement(), single.s.displacement()) <= 1e-12);
    CHECK(std::abs(loop.beta[b] - single.beta) <= 1e-12);
  }

  auto id = factor_loop(FiberDiffeo::identity(2, n), g);
  CHECK(id.s.is_identity());
  CHECK(seminorm(id.beta, 0) == 0.0);

  auto rot = factor_loop(FiberDiffeo(2, PeriodicField::sample(n, [](double, double y) { return 0.01 * std::sin(2 * kPi * y); })), g);
  CHECK(seminorm(rot.s.displacement(), 0) <= 1e-15);
  auto expected = PeriodicField::sample(n, [](double y) { return 0.01 * std::sin(2 * kPi * y); });
  CHECK(gap(rot.beta, expected) <= 1e-15);
}

TEST_CASE("loops keep the base smoothness") {
  std::mt19937_64 rng(33);
  auto g = DiophantineRotation::golden();
  for (int axis : {1, 2}) {
    const int n = 64;
    std::uniform_real_distribution<> ph(0, 2 * kPi);
    double p1 = ph(rng), p2 = ph(rng);
    auto d = PeriodicField::sample(n, [&](double x, double y) {
      double base = axis == 1 ? x : y, fib = axis == 1 ? y : x;
      return 0.0015 * std::sin(2 * kPi * (fib + base) + p1) + 0.001 * std::cos(2 * kPi * (2 * fib - base) + p2) +
             0.002 * std::sin(2 * kPi * base);
    });
    FiberDiffeo f(axis, d);
    auto loop = factor_loop(f, g);
    CHECK(loop.residual <= 1e-10);
    double in = seminorm(d, 1);
    CHECK(seminorm(loop.s.displacement(), 1) <= 10 * in);
    CHECK(seminorm(loop.beta, 1) <= 10 * in);
    for (int b = 0; b < n; b += 7) {
      auto back = build(loop.s.fiber(b), kGolden, loop.beta[b]);
      CHECK(gap(back.displacement(), f.fiber(b).displacement()) <= 1e-9);
    }
  }
}
