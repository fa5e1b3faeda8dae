#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <functional>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

namespace difffactor {

using Complex = std::complex<double>;
using Point2 = std::array<double, 2>;

/// Highest derivative order accepted by seminorm() unless overridden.
inline constexpr int kDefaultMaxOrder = 8;
/// Sup-norms are taken on a grid this many times finer than the sample grid.
inline constexpr int kSupOversample = 4;

/// Signed wavenumber of FFT index `index` on an n-point axis. The Nyquist
/// index n/2 maps to -n/2.
constexpr int wavenumber(int index, int n) { return index < n / 2 ? index : index - n; }

/// A real periodic function on the unit circle (dimension 1) or the unit
/// torus (dimension 2), sampled on a uniform grid of `grid` points per axis.
///
/// Samples are row-major: value(ix, iy) sits at ix * grid + iy and represents
/// the point (ix / grid, iy / grid). The spectrum is normalized so that
/// f(x) = sum_k c_k exp(2 pi i k x) and is computed on first use; the object
/// is otherwise immutable and safe to share across threads.
class PeriodicField {
 public:
  PeriodicField(int dimension, int grid, std::vector<double> values);

  static PeriodicField zeros(int dimension, int grid);
  static PeriodicField constant(int dimension, int grid, double c);
  static PeriodicField sample(int grid, const std::function<double(double)>& fn);
  static PeriodicField sample(int grid, const std::function<double(double, double)>& fn);
  /// Real part of the inverse transform of a full (FFT-ordered) spectrum.
  static PeriodicField from_spectrum(int dimension, int grid, std::span<const Complex> coeffs);

  int dimension() const { return dimension_; }
  int grid() const { return grid_; }
  std::size_t size() const { return values_.size(); }
  std::span<const double> values() const { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }
  double at(int ix, int iy = 0) const {
    return dimension_ == 1 ? values_[ix] : values_[std::size_t(ix) * grid_ + iy];
  }

  const std::vector<Complex>& spectrum() const;
  double mean() const { return spectrum()[0].real(); }
  /// Largest |wavenumber| (max over axes) whose coefficient exceeds
  /// rel_tol * max|c|. Zero for constant fields.
  int bandwidth(double rel_tol = 1e-13) const;

  /// Spectral partial derivative d^dx/dx^dx d^dy/dy^dy sampled on the grid.
  PeriodicField derivative(int dx, int dy = 0) const;
  /// Samples of a spectral derivative on a grid `factor` times finer.
  std::vector<double> upsampled(int factor, int dx = 0, int dy = 0) const;

  PeriodicField operator+(const PeriodicField& other) const;
  PeriodicField operator-(const PeriodicField& other) const;
  PeriodicField operator*(double s) const;
  PeriodicField operator-() const { return *this * -1.0; }
  /// Pointwise product.
  PeriodicField times(const PeriodicField& other) const;

  bool same_shape(const PeriodicField& other) const {
    return dimension_ == other.dimension_ && grid_ == other.grid_;
  }

 private:
  struct SpectrumCache {
    std::once_flag once;
    std::vector<Complex> coeffs;
  };

  int dimension_;
  int grid_;
  std::vector<double> values_;
  std::shared_ptr<SpectrumCache> cache_;
};

inline PeriodicField operator*(double s, const PeriodicField& f) { return f * s; }

/// Graded sup-norm: max over all partial derivatives of total order <= n of
/// the sup of |d^alpha f|, taken on the oversampled grid.
double seminorm(const PeriodicField& f, int n, int max_order = kDefaultMaxOrder);
/// seminorm(f, 0) ... seminorm(f, n) computed in one pass.
std::vector<double> seminorm_profile(const PeriodicField& f, int n, int max_order = kDefaultMaxOrder);

/// Sharp Fourier cutoff: zero every mode with some |wavenumber| > cutoff.
PeriodicField smooth(const PeriodicField& f, double cutoff);

/// Interpolated values at arbitrary points (wrapped mod 1). Direct
/// trigonometric summation for fields with bandwidth <= 64, periodic quintic
/// spline otherwise.
std::vector<double> evaluate(const PeriodicField& f, std::span<const double> points);
std::vector<double> evaluate(const PeriodicField& f, std::span<const Point2> points);

/// Checks `grid` is a power of two >= 8.
bool valid_grid(int grid);

}  // namespace difffactor
