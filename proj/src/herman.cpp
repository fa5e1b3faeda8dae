#include "difffactor/herman.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace difffactor {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double divisor(int k, double alpha) { return 2.0 * std::abs(std::sin(std::numbers::pi * k * alpha)); }

PeriodicField line(std::span<const double> v) { return PeriodicField(1, int(v.size()), {v.begin(), v.end()}); }

struct FiberResult {
  std::vector<double> s;
  double beta;
  double residual;
  int iterations;
};

// Displacement of [S, R_alpha] o R_beta for S = id + s.
std::vector<double> reconstruct(std::span<const double> s, double alpha, double beta) {
  const int n = int(s.size());
  auto inv = detail::circle_invert(s, {});
  std::vector<double> d(n, beta - alpha);
  d = detail::circle_compose(inv, d);
  for (double& x : d) x += alpha;
  return detail::circle_compose(s, d);
}

double reconstruction_gap(std::span<const double> phi, std::span<const double> s, double alpha, double beta) {
  auto d = reconstruct(s, alpha, beta);
  double m = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) m = std::max(m, std::abs(d[i] - phi[i]));
  return m;
}

// (f o R_{alpha - beta}) o S = S o R_alpha with f = id + phi, S = id + s:
// s o R_alpha - s = phi o (id + s + alpha - beta) - beta.
FiberResult factor_fiber(std::span<const double> phi, const DiophantineRotation& rot, const HermanOptions& opts) {
  const int n = int(phi.size());
  const double alpha = rot.alpha();
  std::vector<double> s(n, 0.0);
  double beta = 0.0;
  std::vector<double> history;
  int stalled = 0;
  for (int it = 1; it <= opts.max_iterations; ++it) {
    std::vector<double> shift(n);
    for (int i = 0; i < n; ++i) shift[i] = s[i] + alpha - beta;
    auto moved = detail::circle_compose(phi, shift);
    for (int i = 0; i < n; ++i) moved[i] -= shift[i];  // psi = phi o (id + shift)
    auto sol = solve_cohomological(line(moved), rot);

    double change = std::abs(sol.mean - beta);
    for (int i = 0; i < n; ++i) change = std::max(change, std::abs(sol.s[i] - s[i]));
    s.assign(sol.s.values().begin(), sol.s.values().end());
    beta = sol.mean;
    history.push_back(change);

    if (change <= 0.1 * opts.tolerance || (history.size() > 1 && change >= history[history.size() - 2])) {
      // converged, or stalled at the roundoff floor
      if (change > 0.1 * opts.tolerance) ++stalled;
      double res = reconstruction_gap(phi, s, alpha, beta);
      if (res <= opts.tolerance) return {std::move(s), beta, res, it};
      if (stalled >= 3 || change == 0.0 || !std::isfinite(change))
      {
        std::ostringstream msg;
        msg << "factor_circle_diffeo: iteration stalled with residual " << res;
        throw ConvergenceError(msg.str(), history);
      }
    }
  }
  throw ConvergenceError("factor_circle_diffeo: no convergence within " + std::to_string(opts.max_iterations) +
                             " iterations",
                         history);
}

void check_basin(std::span<const double> phi, double bound, const std::string& where) {
  auto f = line(phi);
  double m = std::round(f.mean());
  std::vector<double> v(phi.begin(), phi.end());
  for (double& x : v) x -= m;
  double dist = seminorm(line(v), 1);
  if (dist >= bound) {
    std::ostringstream msg;
    msg << where << ": C^1 distance " << dist << " to the identity exceeds the basin bound " << bound;
    throw BasinError(msg.str());
  }
}

}  // namespace

DiophantineRotation::DiophantineRotation(double alpha, int max_mode) : alpha_(alpha), max_mode_(max_mode) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("DiophantineRotation: alpha must lie in (0, 1)");
  if (max_mode < 1) throw InvalidArgument("DiophantineRotation: max_mode must be >= 1");
  constant_ = INFINITY;
  int worst = 0;
  for (int k = 1; k <= max_mode; ++k) {
    double c = k * divisor(k, alpha);
    constant_ = std::min(constant_, c);
    if (worst == 0 && c < kMinDivisorConstant) worst = k;
  }
  if (worst != 0) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "DiophantineRotation: alpha = " << alpha << " is not certified, |exp(2 pi i k alpha) - 1| = "
        << divisor(worst, alpha) << " at mode k = " << worst;
    throw InvalidArgument(msg.str());
  }

  // continued fraction, stopping once denominators pass max_mode
  double x = alpha;
  long q_prev = 1, q = 0;
  for (int i = 0; i < 64; ++i) {
    long a = long(std::floor(x));
    long q_next = a * q + q_prev;
    if (i > 0 && q_next > max_mode) break;
    if (i > 0) {
      quotients_.push_back(a);
      denominators_.push_back(q_next);
    }
    q_prev = q;
    q = q_next;
    double frac = x - double(a);
    if (frac < 1e-15) break;
    x = 1.0 / frac;
  }
}

DiophantineRotation DiophantineRotation::golden(int max_mode) {
  return DiophantineRotation((std::sqrt(5.0) - 1.0) / 2.0, max_mode);
}

DiophantineRotation DiophantineRotation::parse(const std::string& text, int max_mode) {
  if (text == "golden") return golden(max_mode);
  std::size_t used = 0;
  double a = 0.0;
  try {
    a = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size()) throw InvalidArgument("alpha: expected 'golden' or a decimal, got '" + text + "'");
  return DiophantineRotation(a, max_mode);
}

double DiophantineRotation::floor(int k) const {
  if (k == 0) throw InvalidArgument("DiophantineRotation::floor: mode 0 has no divisor");
  return constant_ / std::abs(k);
}

namespace {

// exp(2 pi i k alpha) - 1 = 2i sin(pi t) exp(i pi t) with t = k alpha mod 1
// reduced exactly, so large k keeps the phase to an ulp of t.
Complex rotation_divisor(int k, double alpha) {
  double r = std::round(double(k) * alpha);
  double t = std::fma(double(k), alpha, -r);
  return Complex(0.0, 2.0 * std::sin(std::numbers::pi * t)) * std::polar(1.0, std::numbers::pi * t);
}

}  // namespace

CohomologicalSolution solve_cohomological(const PeriodicField& psi, const DiophantineRotation& alpha) {
  if (psi.dimension() != 1) throw InvalidArgument("solve_cohomological: expected a 1D field");
  const int n = psi.grid();
  if (n / 2 > alpha.max_mode()) {
    std::ostringstream msg;
    msg << "solve_cohomological: divisor at mode k = " << alpha.max_mode() + 1
        << " is not covered by the rotation certificate (max mode " << alpha.max_mode() << ")";
    throw InvalidArgument(msg.str());
  }
  std::vector<Complex> c = psi.spectrum();
  double mean = c[0].real();
  c[0] = 0.0;
  for (int i = 1; i < n; ++i) {
    int k = wavenumber(i, n);
    Complex d = rotation_divisor(k, alpha.alpha());
    if (std::abs(d) < alpha.floor(k) * (1.0 - 1e-9)) {
      std::ostringstream msg;
      msg << "solve_cohomological: divisor " << std::abs(d) << " below the certified floor at mode k = " << k;
      throw InvalidArgument(msg.str());
    }
    c[i] /= d;
  }
  return {PeriodicField::from_spectrum(1, n, c), mean};
}

CircleDiffeo commutator_with_rotation(const CircleDiffeo& s, double alpha) {
  auto d = reconstruct(s.displacement().values(), alpha, 0.0);
  return CircleDiffeo(line(d));
}

void HermanOptions::validate() const {
  if (!(tolerance > 0.0)) throw InvalidArgument("herman: tolerance must be positive");
  if (max_iterations < 1) throw InvalidArgument("herman: max_iterations must be >= 1");
  if (!(basin_bound > 0.0)) throw InvalidArgument("herman: basin bound must be positive");
}

CircleCommutatorFactorization factor_circle_diffeo(const CircleDiffeo& f, const DiophantineRotation& alpha,
                                                   const HermanOptions& opts) {
  opts.validate();
  auto phi = f.displacement().values();
  check_basin(phi, opts.basin_bound, "factor_circle_diffeo");
  auto r = factor_fiber(phi, alpha, opts);
  return {CircleDiffeo(line(r.s)), alpha.alpha(), r.beta, r.residual, r.iterations};
}

LoopFactorization factor_loop(const FiberDiffeo& f, const DiophantineRotation& alpha, const HermanOptions& opts) {
  opts.validate();
  const int n = f.grid();
  const int axis = f.axis();
  std::vector<double> s(std::size_t(n) * n), beta(n);
  std::vector<std::vector<double>> phis(n);
  double worst = 0.0;
  for (int base = 0; base < n; ++base) {
    phis[base] = detail::fiber_values(f.displacement(), axis, base);
    std::ostringstream where;
    where << "factor_loop: fiber at base coordinate " << double(base) / n;
    try {
      check_basin(phis[base], opts.basin_bound, where.str());
      auto r = factor_fiber(phis[base], alpha, opts);
      detail::store_fiber(s, n, axis, base, r.s);
      beta[base] = r.beta;
      worst = std::max(worst, r.residual);
    } catch (const ConvergenceError& e) {
      throw ConvergenceError(where.str() + ": " + e.what(), e.history());
    }
  }

  PeriodicField s_field(2, n, std::move(s));
  PeriodicField beta_field(1, n, std::move(beta));
  if (opts.filter_loops) {
    // zero base wavenumbers above Nyquist/4, keep the fiber direction intact
    std::vector<Complex> c = s_field.spectrum();
    const int cut = n / 8;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        int kb = std::abs(wavenumber(axis == 1 ? i : j, n));
        if (kb > cut) c[std::size_t(i) * n + j] = 0.0;
      }
    auto fs = PeriodicField::from_spectrum(2, n, c);
    auto fb = smooth(beta_field, cut);
    double filtered_worst = 0.0;
    for (int base = 0; base < n && filtered_worst <= opts.tolerance; ++base) {
      auto sv = detail::fiber_values(fs, axis, base);
      if (detail::min_circle_jacobian(line(sv)) <= 0.0) {
        filtered_worst = INFINITY;
        break;
      }
      filtered_worst = std::max(filtered_worst, reconstruction_gap(phis[base], sv, alpha.alpha(), fb[base]));
    }
    if (filtered_worst <= opts.tolerance)
      return {FiberDiffeo(axis, std::move(fs)), std::move(fb), alpha.alpha(), filtered_worst, true};
  }
  return {FiberDiffeo(axis, std::move(s_field)), std::move(beta_field), alpha.alpha(), worst, false};
}

}  // namespace difffactor
