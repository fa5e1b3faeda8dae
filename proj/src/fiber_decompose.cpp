#include "difffactor/fiber_decompose.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "difffactor/interpolation.hpp"

namespace difffactor {
namespace {

PeriodicField remove_integer_mean(const PeriodicField& f) {
  double m = std::round(f.mean());
  if (m == 0.0) return f;
  std::vector<double> v(f.values().begin(), f.values().end());
  for (double& x : v) x -= m;
  return PeriodicField(f.dimension(), f.grid(), std::move(v));
}

ResidualSample residual_of(const TorusDiffeo& r) {
  auto pu = seminorm_profile(remove_integer_mean(r.u()), 1);
  auto pw = seminorm_profile(remove_integer_mean(r.w()), 1);
  return {std::max(pu[0], pw[0]), std::max(pu[1], pw[1])};
}

}  // namespace

double SmoothingSchedule::cutoff(int step) const { return theta0 * std::pow(ratio, step); }

SmoothingSchedule SmoothingSchedule::parse(const std::string& text) {
  SmoothingSchedule s;
  if (text == "off") return s;
  const std::string prefix = "geometric";
  if (text.rfind(prefix, 0) != 0) throw InvalidArgument("smoothing: expected off or geometric:theta0,ratio");
  s.enabled = true;
  if (text.size() > prefix.size()) {
    if (text[prefix.size()] != ':') throw InvalidArgument("smoothing: expected geometric:theta0,ratio");
    std::istringstream in(text.substr(prefix.size() + 1));
    char comma = 0;
    if (!(in >> s.theta0 >> comma >> s.ratio) || comma != ',')
      throw InvalidArgument("smoothing: could not parse '" + text + "'");
  }
  if (s.theta0 < 1.0 || s.ratio <= 1.0) throw InvalidArgument("smoothing: need theta0 >= 1 and ratio > 1");
  return s;
}

std::string SmoothingSchedule::to_string() const {
  if (!enabled) return "off";
  std::ostringstream out;
  out.precision(17);
  out << "geometric:" << theta0 << "," << ratio;
  return out.str();
}

void DecomposeOptions::validate() const {
  if (!(tolerance > 0.0)) throw InvalidArgument("decompose: tolerance must be positive");
  if (max_iterations < 1) throw InvalidArgument("decompose: max_iterations must be >= 1");
  if (!(damping > 0.0 && damping <= 1.0) || !(large_residual_damping > 0.0 && large_residual_damping <= 1.0))
    throw InvalidArgument("decompose: damping must lie in (0, 1]");
  if (smoothing.enabled && (smoothing.theta0 < 1.0 || smoothing.ratio <= 1.0))
    throw InvalidArgument("decompose: smoothing needs theta0 >= 1 and ratio > 1");
  if (flow_steps < 1) throw InvalidArgument("decompose: flow_steps must be >= 1");
}

DecomposeError::DecomposeError(const std::string& what, DecompositionReport report)
    : ConvergenceError(what,
                       [&] {
                         std::vector<double> h;
                         for (const auto& r : report.history) h.push_back(r.c0);
                         return h;
                       }()),
      report_(std::move(report)) {}

RightInverse right_inverse_tp(const PeriodicField& v, const VectorField2& X) {
  if (v.dimension() != 2 || !v.same_shape(X.x) || !v.same_shape(X.y))
    throw InvalidArgument("right_inverse_tp: fields must be 2D on a common grid");
  const int n = v.grid();

  // frame (f2^* d/dy, d/dx) degenerates where 1 + v_x <= 0
  auto vx_fine = v.upsampled(kSupOversample, 1, 0);
  auto worst = std::min_element(vx_fine.begin(), vx_fine.end());
  if (1.0 + *worst <= 0.0) {
    const int m = n * kSupOversample;
    std::size_t idx = std::size_t(worst - vx_fine.begin());
    std::ostringstream msg;
    msg << "right_inverse_tp: frame degenerate, 1 + v_x = " << 1.0 + *worst << " near (x, y) = ("
        << double(idx / m) / m << ", " << double(idx % m) / m << ")";
    throw BasinError(msg.str());
  }

  FiberDiffeo f2(2, v);
  auto vx = v.derivative(1, 0);
  auto vy = v.derivative(0, 1);
  std::vector<double> b(std::size_t(n) * n);
  for (std::size_t i = 0; i < b.size(); ++i) b[i] = X.x[i] + vy[i] * X.y[i] / (1.0 + vx[i]);

  // a = X^2 o f2^{-1}, evaluated along the rows where f2 acts
  auto inv = invert(f2);
  std::vector<double> a(std::size_t(n) * n);
  for (int row = 0; row < n; ++row) {
    auto xr = detail::fiber_values(X.y, 2, row);
    auto vr = detail::fiber_values(inv.displacement(), 2, row);
    FieldInterpolator interp(PeriodicField(1, n, xr), kLineDirectBand);
    std::vector<double> at(n), out(n);
    for (int j = 0; j < n; ++j) at[j] = double(j) / n + vr[j];
    interp(at, out);
    detail::store_fiber(a, n, 2, row, out);
  }
  return {PeriodicField(2, n, std::move(a)), PeriodicField(2, n, std::move(b))};
}

RightInverse right_inverse_tp(const FiberDiffeo& f2, const VectorField2& X) {
  if (f2.axis() != 2) throw InvalidArgument("right_inverse_tp: second factor must preserve the fibers of axis 2");
  return right_inverse_tp(f2.displacement(), X);
}

ResidualSample displacement_gap(const TorusDiffeo& f, const TorusDiffeo& g) {
  auto du = remove_integer_mean(f.u() - g.u());
  auto dw = remove_integer_mean(f.w() - g.w());
  auto pu = seminorm_profile(du, 1);
  auto pw = seminorm_profile(dw, 1);
  return {std::max(pu[0], pw[0]), std::max(pu[1], pw[1])};
}

Decomposition decompose(const TorusDiffeo& f, const DecomposeOptions& opts) {
  opts.validate();
  const int n = f.grid();
  double start = distance_to_identity(f, 1);
  if (start >= opts.basin_bound) {
    std::ostringstream msg;
    msg << "decompose: C^1 distance " << start << " to the identity exceeds the basin bound " << opts.basin_bound;
    throw BasinError(msg.str());
  }

  DecompositionReport report;
  report.grid = n;
  report.options = opts;
  FiberDiffeo f1 = FiberDiffeo::identity(1, n);
  FiberDiffeo f2 = FiberDiffeo::identity(2, n);

  for (int step = 0;; ++step) {
    // left residual (f1 o f2)^{-1} o f, read as the tangent vector X
    TorusDiffeo r = f1.is_identity() ? f : compose(invert(f1).to_torus(), f);
    if (!f2.is_identity()) r = compose(invert(f2).to_torus(), r);
    ResidualSample res = residual_of(r);
    report.history.push_back(res);
    if (res.c0 <= opts.tolerance) {
      report.converged = true;
      report.iterations = step;
      return {std::move(f1), std::move(f2), std::move(report)};
    }
    if (step >= opts.max_iterations) break;

    RightInverse xi = right_inverse_tp(f2, VectorField2{r.u(), r.w()});
    PeriodicField a = xi.a, b = xi.b;
    if (opts.smoothing.enabled) {
      a = smooth(a, opts.smoothing.cutoff(step));
      b = smooth(b, opts.smoothing.cutoff(step));
    }
    double damping = res.c1 > opts.large_residual ? std::min(opts.damping, opts.large_residual_damping) : opts.damping;
    if (damping != 1.0) {
      a = a * damping;
      b = b * damping;
    }
    f1 = compose(f1, exp_vertical(1, a, opts.flow_steps));
    f2 = compose(f2, exp_vertical(2, b, opts.flow_steps));
  }
  report.iterations = opts.max_iterations;
  throw DecomposeError("decompose: no convergence within " + std::to_string(opts.max_iterations) + " iterations",
                       std::move(report));
}

}  // namespace difffactor
