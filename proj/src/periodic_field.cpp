#include "difffactor/periodic_field.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "difffactor/detail/fft.hpp"
#include "difffactor/errors.hpp"
#include "difffactor/interpolation.hpp"

namespace difffactor {

bool valid_grid(int grid) { return grid >= 8 && (grid & (grid - 1)) == 0; }

PeriodicField::PeriodicField(int dimension, int grid, std::vector<double> values)
    : dimension_(dimension),
      grid_(grid),
      values_(std::move(values)),
      cache_(std::make_shared<SpectrumCache>()) {
  if (dimension != 1 && dimension != 2)
    throw InvalidArgument("PeriodicField: dimension must be 1 or 2, got " + std::to_string(dimension));
  if (!valid_grid(grid))
    throw InvalidArgument("PeriodicField: grid must be a power of two >= 8, got " + std::to_string(grid));
  std::size_t expected = dimension == 1 ? std::size_t(grid) : std::size_t(grid) * grid;
  if (values_.size() != expected)
    throw InvalidArgument("PeriodicField: expected " + std::to_string(expected) + " samples, got " +
                          std::to_string(values_.size()));
  for (double v : values_)
    if (!std::isfinite(v)) throw InvalidArgument("PeriodicField: non-finite sample");
}

PeriodicField PeriodicField::zeros(int dimension, int grid) { return constant(dimension, grid, 0.0); }

PeriodicField PeriodicField::constant(int dimension, int grid, double c) {
  std::size_t n = dimension == 1 ? std::size_t(grid) : std::size_t(grid) * grid;
  return PeriodicField(dimension, grid, std::vector<double>(n, c));
}

PeriodicField PeriodicField::sample(int grid, const std::function<double(double)>& fn) {
  std::vector<double> v(grid);
  for (int i = 0; i < grid; ++i) v[i] = fn(double(i) / grid);
  return PeriodicField(1, grid, std::move(v));
}

PeriodicField PeriodicField::sample(int grid, const std::function<double(double, double)>& fn) {
  std::vector<double> v(std::size_t(grid) * grid);
  for (int i = 0; i < grid; ++i)
    for (int j = 0; j < grid; ++j) v[std::size_t(i) * grid + j] = fn(double(i) / grid, double(j) / grid);
  return PeriodicField(2, grid, std::move(v));
}

PeriodicField PeriodicField::from_spectrum(int dimension, int grid, std::span<const Complex> coeffs) {
  std::vector<Complex> buf(coeffs.begin(), coeffs.end());
  std::size_t n = dimension == 1 ? std::size_t(grid) : std::size_t(grid) * grid;
  if (buf.size() != n) throw InvalidArgument("from_spectrum: coefficient count does not match grid");
  fft::inverse(buf, dimension, grid);
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = buf[i].real();
  return PeriodicField(dimension, grid, std::move(v));
}

const std::vector<Complex>& PeriodicField::spectrum() const {
  std::call_once(cache_->once, [this] {
    std::vector<Complex> buf(values_.begin(), values_.end());
    fft::forward(buf, dimension_, grid_);
    double scale = 1.0 / double(buf.size());
    for (auto& c : buf) c *= scale;
    cache_->coeffs = std::move(buf);
  });
  return cache_->coeffs;
}

int PeriodicField::bandwidth(double rel_tol) const {
  const auto& c = spectrum();
  double peak = 0.0;
  for (const auto& z : c) peak = std::max(peak, std::abs(z));
  if (peak == 0.0) return 0;
  double cut = rel_tol * peak;
  int band = 0;
  if (dimension_ == 1) {
    for (int i = 0; i < grid_; ++i)
      if (std::abs(c[i]) > cut) band = std::max(band, std::abs(wavenumber(i, grid_)));
  } else {
    for (int i = 0; i < grid_; ++i)
      for (int j = 0; j < grid_; ++j)
        if (std::abs(c[std::size_t(i) * grid_ + j]) > cut)
          band = std::max({band, std::abs(wavenumber(i, grid_)), std::abs(wavenumber(j, grid_))});
  }
  return band;
}

namespace {

// Copies the spectrum of f onto an m-point-per-axis spectrum (m >= n),
// splitting Nyquist coefficients symmetrically and applying the derivative
// symbol (2 pi i k)^dx (2 pi i l)^dy. Returns the inverse transform's real part.
std::vector<double> resample(const PeriodicField& f, int m, int dx, int dy) {
  const int n = f.grid();
  const auto& c = f.spectrum();
  const double two_pi = 2.0 * std::numbers::pi;
  auto symbol = [&](int k, int power) {
    Complex s(1.0, 0.0);
    for (int p = 0; p < power; ++p) s *= Complex(0.0, two_pi * k);
    return s;
  };
  // Each source index contributes at one or two signed wavenumbers.
  auto targets = [n](int index, int* ks, double* ws) {
    int k = wavenumber(index, n);
    if (k == -n / 2) {
      ks[0] = -n / 2;
      ks[1] = n / 2;
      ws[0] = ws[1] = 0.5;
      return 2;
    }
    ks[0] = k;
    ws[0] = 1.0;
    return 1;
  };
  auto slot = [m](int k) { return k < 0 ? k + m : k; };

  if (f.dimension() == 1) {
    std::vector<Complex> buf(m, Complex(0.0));
    for (int i = 0; i < n; ++i) {
      int ks[2];
      double ws[2];
      int cnt = targets(i, ks, ws);
      for (int a = 0; a < cnt; ++a) buf[slot(ks[a])] += ws[a] * c[i] * symbol(ks[a], dx);
    }
    fft::inverse(buf, 1, m);
    std::vector<double> out(m);
    for (int i = 0; i < m; ++i) out[i] = buf[i].real();
    return out;
  }

  std::vector<Complex> buf(std::size_t(m) * m, Complex(0.0));
  for (int i = 0; i < n; ++i) {
    int ks[2];
    double wk[2];
    int ck = targets(i, ks, wk);
    for (int j = 0; j < n; ++j) {
      const Complex coef = c[std::size_t(i) * n + j];
      if (coef == Complex(0.0)) continue;
      int ls[2];
      double wl[2];
      int cl = targets(j, ls, wl);
      for (int a = 0; a < ck; ++a)
        for (int b = 0; b < cl; ++b)
          buf[std::size_t(slot(ks[a])) * m + slot(ls[b])] +=
              wk[a] * wl[b] * coef * symbol(ks[a], dx) * symbol(ls[b], dy);
    }
  }
  fft::inverse(buf, 2, m);
  std::vector<double> out(buf.size());
  for (std::size_t i = 0; i < buf.size(); ++i) out[i] = buf[i].real();
  return out;
}

PeriodicField combine(const PeriodicField& a, const PeriodicField& b, double sb) {
  if (!a.same_shape(b)) throw InvalidArgument("PeriodicField: shape mismatch in arithmetic");
  std::vector<double> v(a.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = a[i] + sb * b[i];
  return PeriodicField(a.dimension(), a.grid(), std::move(v));
}

}  // namespace

PeriodicField PeriodicField::derivative(int dx, int dy) const {
  if (dx < 0 || dy < 0 || (dimension_ == 1 && dy != 0))
    throw InvalidArgument("derivative: invalid multi-index");
  if (dx == 0 && dy == 0) return *this;
  return PeriodicField(dimension_, grid_, resample(*this, grid_, dx, dy));
}

std::vector<double> PeriodicField::upsampled(int factor, int dx, int dy) const {
  if (factor < 1) throw InvalidArgument("upsampled: factor must be >= 1");
  return resample(*this, grid_ * factor, dx, dy);
}

PeriodicField PeriodicField::operator+(const PeriodicField& other) const { return combine(*this, other, 1.0); }
PeriodicField PeriodicField::operator-(const PeriodicField& other) const { return combine(*this, other, -1.0); }

PeriodicField PeriodicField::operator*(double s) const {
  std::vector<double> v(values_);
  for (double& x : v) x *= s;
  return PeriodicField(dimension_, grid_, std::move(v));
}

PeriodicField PeriodicField::times(const PeriodicField& other) const {
  if (!same_shape(other)) throw InvalidArgument("PeriodicField: shape mismatch in product");
  std::vector<double> v(values_);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] *= other[i];
  return PeriodicField(dimension_, grid_, std::move(v));
}

std::vector<double> seminorm_profile(const PeriodicField& f, int n, int max_order) {
  if (n < 0) throw InvalidArgument("seminorm: order must be non-negative");
  if (n > max_order)
    throw InvalidArgument("seminorm: order " + std::to_string(n) + " exceeds configured maximum " +
                          std::to_string(max_order));
  auto sup = [](const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
  };
  std::vector<double> out(n + 1, 0.0);
  double best = 0.0;
  for (int total = 0; total <= n; ++total) {
    if (f.dimension() == 1) {
      best = std::max(best, sup(f.upsampled(kSupOversample, total)));
    } else {
      for (int a = 0; a <= total; ++a) best = std::max(best, sup(f.upsampled(kSupOversample, a, total - a)));
    }
    out[total] = best;
  }
  return out;
}

double seminorm(const PeriodicField& f, int n, int max_order) { return seminorm_profile(f, n, max_order).back(); }

PeriodicField smooth(const PeriodicField& f, double cutoff) {
  if (cutoff < 0.0) throw InvalidArgument("smooth: cutoff must be non-negative");
  const int n = f.grid();
  if (cutoff >= n / 2) return f;
  std::vector<Complex> c = f.spectrum();
  if (f.dimension() == 1) {
    for (int i = 0; i < n; ++i)
      if (std::abs(wavenumber(i, n)) > cutoff) c[i] = 0.0;
  } else {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (std::abs(wavenumber(i, n)) > cutoff || std::abs(wavenumber(j, n)) > cutoff)
          c[std::size_t(i) * n + j] = 0.0;
  }
  return PeriodicField::from_spectrum(f.dimension(), n, c);
}

std::vector<double> evaluate(const PeriodicField& f, std::span<const double> points) {
  if (f.dimension() != 1) throw InvalidArgument("evaluate: 1D points given for a 2D field");
  for (double p : points)
    if (!std::isfinite(p)) throw InvalidArgument("evaluate: non-finite point");
  FieldInterpolator interp(f);
  std::vector<double> out(points.size());
  interp(points, out);
  return out;
}

std::vector<double> evaluate(const PeriodicField& f, std::span<const Point2> points) {
  if (f.dimension() != 2) throw InvalidArgument("evaluate: 2D points given for a 1D field");
  for (const auto& p : points)
    if (!std::isfinite(p[0]) || !std::isfinite(p[1])) throw InvalidArgument("evaluate: non-finite point");
  FieldInterpolator interp(f);
  std::vector<double> out(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) out[i] = interp(points[i][0], points[i][1]);
  return out;
}

}  // namespace difffactor
