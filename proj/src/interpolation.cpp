#include "difffactor/interpolation.hpp"

#include <cmath>
#include <numbers>

#include "difffactor/detail/fft.hpp"
#include "difffactor/errors.hpp"

namespace difffactor {

double wrap_unit(double x) {
  double r = x - std::floor(x);
  return r >= 1.0 ? 0.0 : r;
}

namespace {

double b5(double x) {
  x = std::abs(x);
  auto p5 = [](double t) { return t > 0.0 ? t * t * t * t * t : 0.0; };
  return (p5(3.0 - x) - 6.0 * p5(2.0 - x) + 15.0 * p5(1.0 - x)) / 120.0;
}

// Fourier symbol of the quintic B-spline sampled at the integers.
double b5_symbol(int k, int n) {
  double t = 2.0 * std::numbers::pi * k / n;
  return (66.0 + 52.0 * std::cos(t) + 2.0 * std::cos(2.0 * t)) / 120.0;
}

Complex box_coefficient(const std::vector<Complex>& c, int n, int k) {
  int idx = k < 0 ? k + n : k;
  Complex v = c[idx];
  if (std::abs(k) == n / 2) v *= 0.5;
  return v;
}

}  // namespace

void quintic_weights(double frac, double* w) {
  for (int s = 0; s < 6; ++s) w[s] = b5(frac + 2.0 - s);
}

FieldInterpolator::FieldInterpolator(const PeriodicField& f, int max_direct_band)
    : dimension_(f.dimension()), grid_(f.grid()) {
  const int n = grid_;
  const auto& c = f.spectrum();
  band_ = f.bandwidth();
  direct_ = band_ <= max_direct_band && band_ <= n / 2;
  if (direct_) {
    const int w = 2 * band_ + 1;
    if (dimension_ == 1) {
      box_.resize(w);
      for (int k = -band_; k <= band_; ++k) box_[k + band_] = box_coefficient(c, n, k);
      // c_k z^k + c_{-k} z^{-k} has real part Re((c_k + conj c_{-k}) z^k)
      re_.resize(band_ + 1);
      im_.resize(band_ + 1);
      re_[0] = box_[band_].real();
      im_[0] = 0.0;
      for (int k = 1; k <= band_; ++k) {
        Complex a = box_[band_ + k] + std::conj(box_[band_ - k]);
        re_[k] = a.real();
        im_[k] = a.imag();
      }
    } else {
      box_.resize(std::size_t(w) * w);
      for (int k = -band_; k <= band_; ++k) {
        int ik = k < 0 ? k + n : k;
        double hk = std::abs(k) == n / 2 ? 0.5 : 1.0;
        for (int l = -band_; l <= band_; ++l) {
          int il = l < 0 ? l + n : l;
          double hl = std::abs(l) == n / 2 ? 0.5 : 1.0;
          box_[std::size_t(k + band_) * w + (l + band_)] = hk * hl * c[std::size_t(ik) * n + il];
        }
      }
    }
    return;
  }

  // Prefilter: spline coefficients have spectrum c_k / symbol(k).
  std::vector<Complex> buf(c.begin(), c.end());
  if (dimension_ == 1) {
    for (int i = 0; i < n; ++i) buf[i] /= b5_symbol(wavenumber(i, n), n);
  } else {
    for (int i = 0; i < n; ++i) {
      double si = b5_symbol(wavenumber(i, n), n);
      for (int j = 0; j < n; ++j) buf[std::size_t(i) * n + j] /= si * b5_symbol(wavenumber(j, n), n);
    }
  }
  fft::inverse(buf, dimension_, n);
  spline_.resize(buf.size());
  for (std::size_t i = 0; i < buf.size(); ++i) spline_[i] = buf[i].real();
}

double FieldInterpolator::operator()(double x) const { return direct_ ? direct_1d(x) : spline_1d(x); }

double FieldInterpolator::operator()(double x, double y) const {
  return direct_ ? direct_2d(x, y) : spline_2d(x, y);
}

double FieldInterpolator::direct_1d(double x) const {
  const double t = 2.0 * std::numbers::pi * wrap_unit(x);
  const double zr = std::cos(t), zi = std::sin(t);
  double er = 1.0, ei = 0.0, sum = re_[0];
  for (int k = 1; k <= band_; ++k) {
    double r = er * zr - ei * zi;
    ei = er * zi + ei * zr;
    er = r;
    sum += re_[k] * er - im_[k] * ei;
  }
  return sum;
}

void FieldInterpolator::operator()(std::span<const double> xs, std::span<double> out) const {
  const std::size_t m = xs.size();
  if (dimension_ != 1) throw InvalidArgument("FieldInterpolator: batched evaluation is 1D only");
  if (!direct_) {
    for (std::size_t p = 0; p < m; ++p) out[p] = spline_1d(xs[p]);
    return;
  }
  // Same recurrence as direct_1d, with the points in the inner loop.
  thread_local std::vector<double> zr, zi, er, ei;
  zr.resize(m);
  zi.resize(m);
  er.assign(m, 1.0);
  ei.assign(m, 0.0);
  for (std::size_t p = 0; p < m; ++p) {
    const double t = 2.0 * std::numbers::pi * wrap_unit(xs[p]);
    zr[p] = std::cos(t);
    zi[p] = std::sin(t);
    out[p] = re_[0];
  }
  for (int k = 1; k <= band_; ++k) {
    const double a = re_[k], b = im_[k];
    for (std::size_t p = 0; p < m; ++p) {
      double r = er[p] * zr[p] - ei[p] * zi[p];
      ei[p] = er[p] * zi[p] + ei[p] * zr[p];
      er[p] = r;
      out[p] += a * er[p] - b * ei[p];
    }
  }
}

double FieldInterpolator::direct_2d(double x, double y) const {
  const double two_pi = 2.0 * std::numbers::pi;
  const int w = 2 * band_ + 1;
  x = wrap_unit(x);
  y = wrap_unit(y);
  thread_local std::vector<Complex> ey;
  ey.resize(w);
  Complex sy = std::polar(1.0, two_pi * y);
  ey[0] = std::polar(1.0, -two_pi * band_ * y);
  for (int l = 1; l < w; ++l) ey[l] = ey[l - 1] * sy;
  Complex sx = std::polar(1.0, two_pi * x);
  Complex ex = std::polar(1.0, -two_pi * band_ * x);
  Complex sum(0.0);
  for (int k = 0; k < w; ++k) {
    const Complex* row = &box_[std::size_t(k) * w];
    Complex inner(0.0);
    for (int l = 0; l < w; ++l) inner += row[l] * ey[l];
    sum += inner * ex;
    ex *= sx;
  }
  return sum.real();
}

double FieldInterpolator::spline_1d(double x) const {
  const int n = grid_;
  double t = wrap_unit(x) * n;
  int i0 = int(std::floor(t));
  double w[6];
  quintic_weights(t - i0, w);
  double sum = 0.0;
  for (int s = 0; s < 6; ++s) {
    int j = (i0 - 2 + s) & (n - 1);
    sum += w[s] * spline_[j];
  }
  return sum;
}

double FieldInterpolator::spline_2d(double x, double y) const {
  const int n = grid_;
  double tx = wrap_unit(x) * n;
  double ty = wrap_unit(y) * n;
  int ix = int(std::floor(tx));
  int iy = int(std::floor(ty));
  double wx[6], wy[6];
  quintic_weights(tx - ix, wx);
  quintic_weights(ty - iy, wy);
  int cols[6];
  for (int s = 0; s < 6; ++s) cols[s] = (iy - 2 + s) & (n - 1);
  double sum = 0.0;
  for (int a = 0; a < 6; ++a) {
    const double* row = &spline_[std::size_t((ix - 2 + a) & (n - 1)) * n];
    double inner = 0.0;
    for (int b = 0; b < 6; ++b) inner += wy[b] * row[cols[b]];
    sum += wx[a] * inner;
  }
  return sum;
}

}  // namespace difffactor
