#pragma once

#include <span>
#include <vector>

#include "difffactor/periodic_field.hpp"

namespace difffactor {

/// C^1 size of the derivative part of a displacement below which the
/// fixed-point inverse is guaranteed to contract.
inline constexpr double kInjectivityBound = 0.2;

/// Orientation-preserving circle diffeomorphism f(x) = x + u(x) mod 1.
/// The displacement is a lift: it is stored unreduced, so a rotation by 0.7
/// keeps u = 0.7.
class CircleDiffeo {
 public:
  /// Throws BasinError unless 1 + u' > 0 on the oversampled grid.
  explicit CircleDiffeo(PeriodicField displacement);

  static CircleDiffeo identity(int grid);
  static CircleDiffeo rotation(int grid, double beta);

  const PeriodicField& displacement() const { return u_; }
  int grid() const { return u_.grid(); }
  bool is_identity() const;

 private:
  PeriodicField u_;
};

/// Pair of periodic fields on the torus, (X^1, X^2) = X^1 d/dx + X^2 d/dy.
struct VectorField2 {
  PeriodicField x;
  PeriodicField y;
};

/// Diffeomorphism of T^2 isotopic to the identity:
/// f(x, y) = (x + u(x, y), y + w(x, y)) mod 1.
class TorusDiffeo {
 public:
  /// Throws BasinError unless the Jacobian determinant is positive on the
  /// oversampled grid.
  TorusDiffeo(PeriodicField u, PeriodicField w);

  static TorusDiffeo identity(int grid);
  static TorusDiffeo translation(int grid, double a, double b);

  const PeriodicField& u() const { return u_; }
  const PeriodicField& w() const { return w_; }
  int grid() const { return u_.grid(); }

 private:
  PeriodicField u_;
  PeriodicField w_;
};

/// Diffeomorphism preserving the fibers of one coordinate projection of T^2.
///
/// axis 1: f(x, y) = (x, y + d(x, y)), preserving the circles {x = const}.
/// axis 2: f(x, y) = (x + d(x, y), y), preserving the circles {y = const}.
/// The untouched coordinate is never stored, so membership in the subgroup is
/// structural.
class FiberDiffeo {
 public:
  FiberDiffeo(int axis, PeriodicField displacement);

  static FiberDiffeo identity(int axis, int grid);
  /// Reassembles a loop of circle diffeomorphisms indexed by the base grid.
  static FiberDiffeo from_fibers(int axis, std::span<const CircleDiffeo> fibers);

  int axis() const { return axis_; }
  int grid() const { return d_.grid(); }
  const PeriodicField& displacement() const { return d_; }
  bool is_identity() const;

  /// The circle diffeomorphism acting on the fiber over base sample `base`.
  CircleDiffeo fiber(int base) const;
  std::vector<CircleDiffeo> fibers() const;
  TorusDiffeo to_torus() const;

 private:
  int axis_;
  PeriodicField d_;
};

struct InvertOptions {
  int max_iterations = 500;
  double tolerance = 1e-15;
};

CircleDiffeo compose(const CircleDiffeo& f, const CircleDiffeo& g);
TorusDiffeo compose(const TorusDiffeo& f, const TorusDiffeo& g);
/// Both factors must share the axis; the result keeps it.
FiberDiffeo compose(const FiberDiffeo& f, const FiberDiffeo& g);
TorusDiffeo compose(const TorusDiffeo& f, const FiberDiffeo& g);
TorusDiffeo compose(const FiberDiffeo& f, const TorusDiffeo& g);

/// Fixed-point inversion u_inv(p) = -u(p + u_inv(p)). Throws
/// ConvergenceError carrying the update history when it stalls.
CircleDiffeo invert(const CircleDiffeo& f, const InvertOptions& opts = {});
TorusDiffeo invert(const TorusDiffeo& f, const InvertOptions& opts = {});
FiberDiffeo invert(const FiberDiffeo& f, const InvertOptions& opts = {});

/// Time-one flow of an autonomous field by classical RK4 with `steps` substeps.
CircleDiffeo exp_field(const PeriodicField& field, int steps);
TorusDiffeo exp_field(const VectorField2& field, int steps);
/// Flow of a field pointing along the fibers of `axis`.
FiberDiffeo exp_vertical(int axis, const PeriodicField& field, int steps);

/// (F^k(0) - 0) / k for the stored lift F; exact for rotations.
double rotation_number(const CircleDiffeo& f, long iterations);

/// Seminorm of order n of the displacement after removing the integer part
/// of its mean, so rotations measure their wrapped angle.
double distance_to_identity(const CircleDiffeo& f, int n);
double distance_to_identity(const TorusDiffeo& f, int n);
double distance_to_identity(const FiberDiffeo& f, int n);

/// Sup over the grid of the first derivatives of the displacement (the part
/// of the C^1 distance that controls contraction of the inverse).
double derivative_size(const TorusDiffeo& f);
double derivative_size(const CircleDiffeo& f);

namespace detail {

// Samples of the fiber over base index `base`, as a contiguous vector.
std::vector<double> fiber_values(const PeriodicField& f, int axis, int base);
void store_fiber(std::vector<double>& out, int grid, int axis, int base, std::span<const double> fiber);

// Displacement-level circle operations on one fiber of n samples.
std::vector<double> circle_compose(std::span<const double> u, std::span<const double> v);
std::vector<double> circle_invert(std::span<const double> u, const InvertOptions& opts);
std::vector<double> circle_flow(std::span<const double> field, int steps);

// Lower bound of 1 + u' (1D) or of the Jacobian determinant (2D), exact on
// the oversampled grid when the cheap spectral bound is inconclusive.
double min_circle_jacobian(const PeriodicField& u);
double min_torus_jacobian(const PeriodicField& u, const PeriodicField& w);

}  // namespace detail

}  // namespace difffactor
