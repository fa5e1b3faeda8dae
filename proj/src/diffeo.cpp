#include "difffactor/diffeo.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "difffactor/errors.hpp"
#include "difffactor/interpolation.hpp"

namespace difffactor {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Sum of |2 pi k_axis c_k|: an upper bound for sup |d f / d x_axis|.
double derivative_l1(const PeriodicField& f, int axis) {
  const int n = f.grid();
  const auto& c = f.spectrum();
  double s = 0.0;
  if (f.dimension() == 1) {
    for (int i = 0; i < n; ++i) s += kTwoPi * std::abs(wavenumber(i, n)) * std::abs(c[i]);
    return s;
  }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      int k = axis == 0 ? wavenumber(i, n) : wavenumber(j, n);
      s += kTwoPi * std::abs(k) * std::abs(c[std::size_t(i) * n + j]);
    }
  return s;
}

double min_of(const std::vector<double>& v) { return *std::min_element(v.begin(), v.end()); }

double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

// Lower bound on 1 + d_axis f.
double min_one_plus_partial(const PeriodicField& f, int axis) {
  double bound = derivative_l1(f, axis);
  if (bound < 1.0) return 1.0 - bound;
  std::vector<double> d = f.dimension() == 1 ? f.upsampled(kSupOversample, 1)
                                             : f.upsampled(kSupOversample, axis == 0 ? 1 : 0, axis == 1 ? 1 : 0);
  return 1.0 + min_of(d);
}

PeriodicField shifted_lift(const PeriodicField& u) {
  double m = std::round(u.mean());
  if (m == 0.0) return u;
  std::vector<double> v(u.values().begin(), u.values().end());
  for (double& x : v) x -= m;
  return PeriodicField(u.dimension(), u.grid(), std::move(v));
}

bool all_zero(const PeriodicField& f) {
  return std::all_of(f.values().begin(), f.values().end(), [](double x) { return x == 0.0; });
}

}  // namespace

namespace detail {

std::vector<double> fiber_values(const PeriodicField& f, int axis, int base) {
  const int n = f.grid();
  std::vector<double> out(n);
  if (axis == 1) {
    for (int j = 0; j < n; ++j) out[j] = f[std::size_t(base) * n + j];
  } else {
    for (int j = 0; j < n; ++j) out[j] = f[std::size_t(j) * n + base];
  }
  return out;
}

void store_fiber(std::vector<double>& out, int grid, int axis, int base, std::span<const double> fiber) {
  if (axis == 1) {
    for (int j = 0; j < grid; ++j) out[std::size_t(base) * grid + j] = fiber[j];
  } else {
    for (int j = 0; j < grid; ++j) out[std::size_t(j) * grid + base] = fiber[j];
  }
}

std::vector<double> circle_compose(std::span<const double> u, std::span<const double> v) {
  const int n = int(u.size());
  FieldInterpolator fu(PeriodicField(1, n, {u.begin(), u.end()}), kLineDirectBand);
  std::vector<double> at(n), out(n);
  for (int i = 0; i < n; ++i) at[i] = double(i) / n + v[i];
  fu(at, out);
  for (int i = 0; i < n; ++i) out[i] += v[i];
  return out;
}

std::vector<double> circle_invert(std::span<const double> u, const InvertOptions& opts) {
  const int n = int(u.size());
  FieldInterpolator fu(PeriodicField(1, n, {u.begin(), u.end()}), kLineDirectBand);
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = -u[i];
  std::vector<double> history, at(n), next(n);
  for (int it = 0; it < opts.max_iterations; ++it) {
    double change = 0.0;
    for (int i = 0; i < n; ++i) at[i] = double(i) / n + v[i];
    fu(at, next);
    for (int i = 0; i < n; ++i) {
      change = std::max(change, std::abs(next[i] + v[i]));
      v[i] = -next[i];
    }
    history.push_back(change);
    if (change <= opts.tolerance * std::max(1.0, max_abs(v))) return v;
    // Roundoff floor: the update stopped shrinking at the level of a few ulps.
    if (it > 4 && change < 1e-13 && change >= history[history.size() - 3]) return v;
  }
  throw ConvergenceError("circle inversion did not converge", std::move(history));
}

std::vector<double> circle_flow(std::span<const double> field, int steps) {
  if (steps < 1) throw InvalidArgument("exp_field: steps must be >= 1");
  const int n = int(field.size());
  FieldInterpolator fx(PeriodicField(1, n, {field.begin(), field.end()}), kLineDirectBand);
  const double h = 1.0 / steps;
  std::vector<double> x(n), at(n), k1(n), k2(n), k3(n), k4(n);
  for (int i = 0; i < n; ++i) x[i] = double(i) / n;
  for (int s = 0; s < steps; ++s) {
    fx(x, k1);
    for (int i = 0; i < n; ++i) at[i] = x[i] + 0.5 * h * k1[i];
    fx(at, k2);
    for (int i = 0; i < n; ++i) at[i] = x[i] + 0.5 * h * k2[i];
    fx(at, k3);
    for (int i = 0; i < n; ++i) at[i] = x[i] + h * k3[i];
    fx(at, k4);
    for (int i = 0; i < n; ++i) x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  }
  for (int i = 0; i < n; ++i) x[i] -= double(i) / n;
  return x;
}

double min_circle_jacobian(const PeriodicField& u) { return min_one_plus_partial(u, 0); }

double min_torus_jacobian(const PeriodicField& u, const PeriodicField& w) {
  double a = derivative_l1(u, 0), b = derivative_l1(u, 1);
  double c = derivative_l1(w, 0), d = derivative_l1(w, 1);
  if (a < 1.0 && d < 1.0) {
    double bound = (1.0 - a) * (1.0 - d) - b * c;
    if (bound > 0.0) return bound;
  }
  auto ux = u.upsampled(kSupOversample, 1, 0);
  auto uy = u.upsampled(kSupOversample, 0, 1);
  auto wx = w.upsampled(kSupOversample, 1, 0);
  auto wy = w.upsampled(kSupOversample, 0, 1);
  double m = INFINITY;
  for (std::size_t i = 0; i < ux.size(); ++i) m = std::min(m, (1.0 + ux[i]) * (1.0 + wy[i]) - uy[i] * wx[i]);
  return m;
}

}  // namespace detail

// ---------------------------------------------------------------- CircleDiffeo

CircleDiffeo::CircleDiffeo(PeriodicField displacement) : u_(std::move(displacement)) {
  if (u_.dimension() != 1) throw InvalidArgument("CircleDiffeo: displacement must be one-dimensional");
  if (detail::min_circle_jacobian(u_) <= 0.0)
    throw BasinError("CircleDiffeo: 1 + u' is not positive; map is not orientation preserving");
}

CircleDiffeo CircleDiffeo::identity(int grid) { return CircleDiffeo(PeriodicField::zeros(1, grid)); }

CircleDiffeo CircleDiffeo::rotation(int grid, double beta) {
  return CircleDiffeo(PeriodicField::constant(1, grid, beta));
}

bool CircleDiffeo::is_identity() const { return all_zero(u_); }

// ----------------------------------------------------------------- TorusDiffeo

TorusDiffeo::TorusDiffeo(PeriodicField u, PeriodicField w) : u_(std::move(u)), w_(std::move(w)) {
  if (u_.dimension() != 2 || !u_.same_shape(w_))
    throw InvalidArgument("TorusDiffeo: displacements must be 2D fields on the same grid");
  if (detail::min_torus_jacobian(u_, w_) <= 0.0)
    throw BasinError("TorusDiffeo: Jacobian determinant is not positive");
}

TorusDiffeo TorusDiffeo::identity(int grid) {
  return TorusDiffeo(PeriodicField::zeros(2, grid), PeriodicField::zeros(2, grid));
}

TorusDiffeo TorusDiffeo::translation(int grid, double a, double b) {
  return TorusDiffeo(PeriodicField::constant(2, grid, a), PeriodicField::constant(2, grid, b));
}

// ----------------------------------------------------------------- FiberDiffeo

FiberDiffeo::FiberDiffeo(int axis, PeriodicField displacement) : axis_(axis), d_(std::move(displacement)) {
  if (axis != 1 && axis != 2) throw InvalidArgument("FiberDiffeo: axis must be 1 or 2");
  if (d_.dimension() != 2) throw InvalidArgument("FiberDiffeo: displacement must be 2D");
  // axis 1 moves y, so its fiber derivative is d/dy (spectral axis index 1).
  if (min_one_plus_partial(d_, axis == 1 ? 1 : 0) <= 0.0)
    throw BasinError("FiberDiffeo: fiber maps are not orientation preserving");
}

FiberDiffeo FiberDiffeo::identity(int axis, int grid) { return FiberDiffeo(axis, PeriodicField::zeros(2, grid)); }

FiberDiffeo FiberDiffeo::from_fibers(int axis, std::span<const CircleDiffeo> fibers) {
  if (fibers.empty()) throw InvalidArgument("from_fibers: empty loop");
  const int n = fibers.front().grid();
  if (int(fibers.size()) != n) throw InvalidArgument("from_fibers: loop length must equal the grid size");
  std::vector<double> out(std::size_t(n) * n);
  for (int b = 0; b < n; ++b) {
    if (fibers[b].grid() != n) throw InvalidArgument("from_fibers: fiber grid mismatch");
    detail::store_fiber(out, n, axis, b, fibers[b].displacement().values());
  }
  return FiberDiffeo(axis, PeriodicField(2, n, std::move(out)));
}

bool FiberDiffeo::is_identity() const { return all_zero(d_); }

CircleDiffeo FiberDiffeo::fiber(int base) const {
  return CircleDiffeo(PeriodicField(1, grid(), detail::fiber_values(d_, axis_, base)));
}

std::vector<CircleDiffeo> FiberDiffeo::fibers() const {
  std::vector<CircleDiffeo> out;
  out.reserve(grid());
  for (int b = 0; b < grid(); ++b) out.push_back(fiber(b));
  return out;
}

TorusDiffeo FiberDiffeo::to_torus() const {
  auto zero = PeriodicField::zeros(2, grid());
  return axis_ == 1 ? TorusDiffeo(zero, d_) : TorusDiffeo(d_, zero);
}

// ------------------------------------------------------------------- compose

CircleDiffeo compose(const CircleDiffeo& f, const CircleDiffeo& g) {
  if (f.grid() != g.grid()) throw InvalidArgument("compose: grid mismatch");
  return CircleDiffeo(PeriodicField(1, f.grid(), detail::circle_compose(f.displacement().values(),
                                                                         g.displacement().values())));
}

TorusDiffeo compose(const TorusDiffeo& f, const TorusDiffeo& g) {
  if (f.grid() != g.grid()) throw InvalidArgument("compose: grid mismatch");
  const int n = f.grid();
  FieldInterpolator fu(f.u(), kFastDirectBand), fw(f.w(), kFastDirectBand);
  std::vector<double> u(std::size_t(n) * n), w(u.size());
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      std::size_t idx = std::size_t(i) * n + j;
      double px = double(i) / n + g.u()[idx];
      double py = double(j) / n + g.w()[idx];
      u[idx] = g.u()[idx] + fu(px, py);
      w[idx] = g.w()[idx] + fw(px, py);
    }
  return TorusDiffeo(PeriodicField(2, n, std::move(u)), PeriodicField(2, n, std::move(w)));
}

FiberDiffeo compose(const FiberDiffeo& f, const FiberDiffeo& g) {
  if (f.axis() != g.axis()) throw InvalidArgument("compose: fiber axes differ");
  if (f.grid() != g.grid()) throw InvalidArgument("compose: grid mismatch");
  if (g.is_identity()) return f;
  if (f.is_identity()) return g;
  const int n = f.grid();
  std::vector<double> out(std::size_t(n) * n);
  for (int b = 0; b < n; ++b) {
    auto fu = detail::fiber_values(f.displacement(), f.axis(), b);
    auto gu = detail::fiber_values(g.displacement(), g.axis(), b);
    detail::store_fiber(out, n, f.axis(), b, detail::circle_compose(fu, gu));
  }
  return FiberDiffeo(f.axis(), PeriodicField(2, n, std::move(out)));
}

TorusDiffeo compose(const TorusDiffeo& f, const FiberDiffeo& g) {
  if (f.grid() != g.grid()) throw InvalidArgument("compose: grid mismatch");
  const int n = f.grid();
  const int axis = g.axis();
  std::vector<double> u(std::size_t(n) * n), w(u.size());
  // g moves points along its fibers only, so f is sampled along the same fibers.
  for (int b = 0; b < n; ++b) {
    auto gd = detail::fiber_values(g.displacement(), axis, b);
    auto fu = detail::fiber_values(f.u(), axis, b);
    auto fw = detail::fiber_values(f.w(), axis, b);
    FieldInterpolator iu(PeriodicField(1, n, fu), kLineDirectBand), iw(PeriodicField(1, n, fw), kLineDirectBand);
    std::vector<double> t(n), cu(n), cw(n);
    for (int j = 0; j < n; ++j) t[j] = double(j) / n + gd[j];
    iu(t, cu);
    iw(t, cw);
    for (int j = 0; j < n; ++j) (axis == 2 ? cu[j] : cw[j]) += gd[j];
    detail::store_fiber(u, n, axis, b, cu);
    detail::store_fiber(w, n, axis, b, cw);
  }
  return TorusDiffeo(PeriodicField(2, n, std::move(u)), PeriodicField(2, n, std::move(w)));
}

TorusDiffeo compose(const FiberDiffeo& f, const TorusDiffeo& g) { return compose(f.to_torus(), g); }

// -------------------------------------------------------------------- invert

CircleDiffeo invert(const CircleDiffeo& f, const InvertOptions& opts) {
  if (f.is_identity()) return f;
  return CircleDiffeo(PeriodicField(1, f.grid(), detail::circle_invert(f.displacement().values(), opts)));
}

TorusDiffeo invert(const TorusDiffeo& f, const InvertOptions& opts) {
  double dsize = derivative_size(f);
  if (dsize >= kInjectivityBound)
    throw BasinError("invert: C^1 size " + std::to_string(dsize) + " exceeds the injectivity bound " +
                     std::to_string(kInjectivityBound));
  const int n = f.grid();
  FieldInterpolator fu(f.u(), kFastDirectBand), fw(f.w(), kFastDirectBand);
  std::vector<double> a(std::size_t(n) * n), b(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    a[i] = -f.u()[i];
    b[i] = -f.w()[i];
  }
  std::vector<double> history;
  for (int it = 0; it < opts.max_iterations; ++it) {
    double change = 0.0, scale = 1.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        std::size_t idx = std::size_t(i) * n + j;
        double px = double(i) / n + a[idx], py = double(j) / n + b[idx];
        double na = -fu(px, py), nb = -fw(px, py);
        change = std::max({change, std::abs(na - a[idx]), std::abs(nb - b[idx])});
        scale = std::max({scale, std::abs(na), std::abs(nb)});
        a[idx] = na;
        b[idx] = nb;
      }
    history.push_back(change);
    bool done = change <= opts.tolerance * scale ||
                (it > 4 && change < 1e-13 && change >= history[history.size() - 3]);
    if (done) return TorusDiffeo(PeriodicField(2, n, std::move(a)), PeriodicField(2, n, std::move(b)));
  }
  throw ConvergenceError("torus inversion did not converge", std::move(history));
}

FiberDiffeo invert(const FiberDiffeo& f, const InvertOptions& opts) {
  if (f.is_identity()) return f;
  const int n = f.grid();
  std::vector<double> out(std::size_t(n) * n);
  for (int b = 0; b < n; ++b)
    detail::store_fiber(out, n, f.axis(), b,
                        detail::circle_invert(detail::fiber_values(f.displacement(), f.axis(), b), opts));
  return FiberDiffeo(f.axis(), PeriodicField(2, n, std::move(out)));
}

// ------------------------------------------------------------------------ exp

CircleDiffeo exp_field(const PeriodicField& field, int steps) {
  if (field.dimension() != 1) throw InvalidArgument("exp_field: circle field must be 1D");
  if (std::all_of(field.values().begin(), field.values().end(), [](double x) { return x == 0.0; }))
    return CircleDiffeo::identity(field.grid());
  return CircleDiffeo(PeriodicField(1, field.grid(), detail::circle_flow(field.values(), steps)));
}

TorusDiffeo exp_field(const VectorField2& field, int steps) {
  if (steps < 1) throw InvalidArgument("exp_field: steps must be >= 1");
  if (field.x.dimension() != 2 || !field.x.same_shape(field.y))
    throw InvalidArgument("exp_field: torus field must be a pair of 2D fields on one grid");
  const int n = field.x.grid();
  FieldInterpolator fx(field.x, kFastDirectBand), fy(field.y, kFastDirectBand);
  const double h = 1.0 / steps;
  std::vector<double> u(std::size_t(n) * n), w(u.size());
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double x0 = double(i) / n, y0 = double(j) / n;
      double x = x0, y = y0;
      for (int s = 0; s < steps; ++s) {
        double k1x = fx(x, y), k1y = fy(x, y);
        double k2x = fx(x + 0.5 * h * k1x, y + 0.5 * h * k1y), k2y = fy(x + 0.5 * h * k1x, y + 0.5 * h * k1y);
        double k3x = fx(x + 0.5 * h * k2x, y + 0.5 * h * k2y), k3y = fy(x + 0.5 * h * k2x, y + 0.5 * h * k2y);
        double k4x = fx(x + h * k3x, y + h * k3y), k4y = fy(x + h * k3x, y + h * k3y);
        x += h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
        y += h / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y);
      }
      std::size_t idx = std::size_t(i) * n + j;
      u[idx] = x - x0;
      w[idx] = y - y0;
    }
  try {
    return TorusDiffeo(PeriodicField(2, n, std::move(u)), PeriodicField(2, n, std::move(w)));
  } catch (const BasinError&) {
    throw BasinError("exp_field: Jacobian positivity lost during integration");
  }
}

FiberDiffeo exp_vertical(int axis, const PeriodicField& field, int steps) {
  if (field.dimension() != 2) throw InvalidArgument("exp_vertical: field must be 2D");
  const int n = field.grid();
  if (all_zero(field)) return FiberDiffeo::identity(axis, n);
  std::vector<double> out(std::size_t(n) * n);
  for (int b = 0; b < n; ++b)
    detail::store_fiber(out, n, axis, b, detail::circle_flow(detail::fiber_values(field, axis, b), steps));
  try {
    return FiberDiffeo(axis, PeriodicField(2, n, std::move(out)));
  } catch (const BasinError&) {
    throw BasinError("exp_vertical: orientation lost during integration");
  }
}

// -------------------------------------------------------------- diagnostics

double rotation_number(const CircleDiffeo& f, long iterations) {
  if (iterations < 1) throw InvalidArgument("rotation_number: iterations must be >= 1");
  const auto& u = f.displacement();
  if (u.bandwidth() == 0) return u.mean();
  FieldInterpolator fu(u);
  double x = 0.0;
  for (long k = 0; k < iterations; ++k) x += fu(x);
  return x / double(iterations);
}

double distance_to_identity(const CircleDiffeo& f, int n) { return seminorm(shifted_lift(f.displacement()), n); }

double distance_to_identity(const TorusDiffeo& f, int n) {
  return std::max(seminorm(shifted_lift(f.u()), n), seminorm(shifted_lift(f.w()), n));
}

double distance_to_identity(const FiberDiffeo& f, int n) { return seminorm(shifted_lift(f.displacement()), n); }

double derivative_size(const TorusDiffeo& f) {
  double m = 0.0;
  for (const auto* field : {&f.u(), &f.w()}) {
    if (derivative_l1(*field, 0) + derivative_l1(*field, 1) < kInjectivityBound / 2) {
      m = std::max(m, derivative_l1(*field, 0) + derivative_l1(*field, 1));
      continue;
    }
    m = std::max(m, max_abs(field->derivative(1, 0).values()));
    m = std::max(m, max_abs(field->derivative(0, 1).values()));
  }
  return m;
}

double derivative_size(const CircleDiffeo& f) { return max_abs(f.displacement().derivative(1).values()); }

}  // namespace difffactor
