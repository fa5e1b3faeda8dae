#pragma once

#include <string>
#include <vector>

#include "difffactor/diffeo.hpp"
#include "difffactor/errors.hpp"

namespace difffactor {

/// Nash-Moser style cutoff schedule: at Newton step k the correction is
/// truncated to wavenumbers <= theta0 * ratio^k.
struct SmoothingSchedule {
  bool enabled = false;
  double theta0 = 8.0;
  double ratio = 1.5;

  double cutoff(int step) const;
  /// "off" or "geometric:theta0,ratio" (also bare "geometric" for defaults).
  static SmoothingSchedule parse(const std::string& text);
  std::string to_string() const;
};

struct DecomposeOptions {
  double tolerance = 1e-9;  ///< C^0 residual target
  int max_iterations = 40;
  SmoothingSchedule smoothing;
  double damping = 1.0;
  /// Damping used while the C^1 residual exceeds `large_residual`.
  double large_residual_damping = 0.5;
  double large_residual = 0.05;
  double basin_bound = 0.1;  ///< admissible C^1 distance of the input
  int flow_steps = 4;        ///< RK4 substeps when exponentiating corrections

  void validate() const;
};

struct ResidualSample {
  double c0;
  double c1;
};

struct DecompositionReport {
  int iterations = 0;
  bool converged = false;
  std::vector<ResidualSample> history;  ///< residual before each Newton step
  int grid = 0;
  DecomposeOptions options;
};

/// f = f1 o f2 with f1 preserving the fibers {x = const} and f2 the fibers
/// {y = const}.
struct Decomposition {
  FiberDiffeo f1;
  FiberDiffeo f2;
  DecompositionReport report;
};

class DecomposeError : public ConvergenceError {
 public:
  DecomposeError(const std::string& what, DecompositionReport report);
  const DecompositionReport& report() const { return report_; }

 private:
  DecompositionReport report_;
};

/// Vertical fields solving f2^* xi1 + xi2 = X, where xi1 = a d/dy and
/// xi2 = b d/dx. Uses the frame (f2^* d/dy, d/dx): a = X^2 o f2^{-1} and
/// b = X^1 + v_y X^2 / (1 + v_x) for f2(x, y) = (x + v, y).
struct RightInverse {
  PeriodicField a;  ///< coefficient of d/dy (fibers of axis 1)
  PeriodicField b;  ///< coefficient of d/dx (fibers of axis 2)
};

RightInverse right_inverse_tp(const FiberDiffeo& f2, const VectorField2& X);
/// Same solve from a raw axis-2 displacement v. Throws BasinError naming the
/// region where 1 + v_x <= 0 if the frame degenerates.
RightInverse right_inverse_tp(const PeriodicField& v, const VectorField2& X);

/// Newton iteration on P(f1, f2) = f1 o f2 whose linear step is the right
/// inverse above. Throws BasinError when the input is too far from the
/// identity and DecomposeError when it does not converge.
Decomposition decompose(const TorusDiffeo& f, const DecomposeOptions& opts = {});

/// C^0 and C^1 size of the difference of displacements of f and g.
ResidualSample displacement_gap(const TorusDiffeo& f, const TorusDiffeo& g);

}  // namespace difffactor
