#pragma once

#include <span>
#include <vector>

#include "difffactor/periodic_field.hpp"

namespace difffactor {

/// Bandwidth up to which evaluate() sums the spectrum directly.
inline constexpr int kDirectBandLimit = 64;
/// Bandwidth up to which bulk composition sums the spectrum directly; wider
/// fields go through the quintic spline.
inline constexpr int kFastDirectBand = 8;
/// Same threshold for one-dimensional fiber operations, where direct
/// summation stays cheap and the spline's error would dominate.
inline constexpr int kLineDirectBand = 64;

/// Off-grid evaluator for a PeriodicField.
///
/// Fields whose significant spectrum fits inside `max_direct_band` are summed
/// exactly as trigonometric polynomials; anything wider is represented by the
/// periodic quintic B-spline interpolant (coefficients from an FFT prefilter,
/// six-point stencil per axis).
class FieldInterpolator {
 public:
  explicit FieldInterpolator(const PeriodicField& f, int max_direct_band = kDirectBandLimit);

  bool direct() const { return direct_; }
  int dimension() const { return dimension_; }

  double operator()(double x) const;
  double operator()(double x, double y) const;
  /// 1D values at many points; `out` must not alias `xs`.
  void operator()(std::span<const double> xs, std::span<double> out) const;

 private:
  double direct_1d(double x) const;
  double direct_2d(double x, double y) const;
  double spline_1d(double x) const;
  double spline_2d(double x, double y) const;

  int dimension_;
  int grid_;
  bool direct_ = false;
  int band_ = 0;
  // direct: (2B+1)^d coefficients, wavenumbers -B..B per axis
  std::vector<Complex> box_;
  // direct 1D: f = sum_{k=0..B} re_k cos(2 pi k x) - im_k sin(2 pi k x)
  std::vector<double> re_, im_;
  // spline: B-spline coefficients on the sample grid
  std::vector<double> spline_;
};

/// Weights of the centered quintic B-spline at offsets (t - j) for the six
/// stencil points j = floor(t) - 2 ... floor(t) + 3.
void quintic_weights(double frac, double* w);

/// Wrap into [0, 1).
double wrap_unit(double x);

}  // namespace difffactor
