#pragma once

#include <string>
#include <vector>

#include "difffactor/diffeo.hpp"
#include "difffactor/errors.hpp"

namespace difffactor {

/// A rotation number together with a small-divisor certificate over the
/// modes 1 <= |k| <= max_mode: |exp(2 pi i k alpha) - 1| >= constant / |k|.
class DiophantineRotation {
 public:
  /// Throws InvalidArgument naming the worst mode when alpha is not in (0, 1)
  /// or some divisor falls below kMinDivisorConstant / |k|.
  explicit DiophantineRotation(double alpha, int max_mode = 512);
  static DiophantineRotation golden(int max_mode = 512);
  /// "golden" or a decimal in (0, 1).
  static DiophantineRotation parse(const std::string& text, int max_mode = 512);

  double alpha() const { return alpha_; }
  int max_mode() const { return max_mode_; }
  double constant() const { return constant_; }
  double floor(int k) const;
  /// Continued-fraction partial quotients and convergent denominators
  /// q_n <= max_mode; the extreme divisors sit at these denominators.
  const std::vector<long>& partial_quotients() const { return quotients_; }
  const std::vector<long>& denominators() const { return denominators_; }

 private:
  double alpha_;
  int max_mode_;
  double constant_;
  std::vector<long> quotients_;
  std::vector<long> denominators_;
};

inline constexpr double kMinDivisorConstant = 1e-6;

struct CohomologicalSolution {
  PeriodicField s;
  double mean;
};

/// Spectral solve of s o R_alpha - s = psi - mean(psi) with zero-mean s.
CohomologicalSolution solve_cohomological(const PeriodicField& psi, const DiophantineRotation& alpha);

/// S o R_alpha o S^{-1} o R_{-alpha}.
CircleDiffeo commutator_with_rotation(const CircleDiffeo& s, double alpha);

struct HermanOptions {
  double tolerance = 1e-10;  ///< C^0 reconstruction residual
  int max_iterations = 200;
  double basin_bound = 0.05;
  /// Low-pass the loops in the base variable below Nyquist/4 when the
  /// filtered factorization still meets the tolerance.
  bool filter_loops = true;

  void validate() const;
};

/// f = [S, R_alpha] o R_beta.
struct CircleCommutatorFactorization {
  CircleDiffeo s;
  double alpha;
  double beta;
  double residual;
  int iterations;
};

/// Solves S^{-1} o (f o R_{alpha - beta}) o S = R_alpha by fixed-point
/// iteration on the cohomological equation, with beta absorbing the mode-0
/// obstruction at each step.
CircleCommutatorFactorization factor_circle_diffeo(const CircleDiffeo& f, const DiophantineRotation& alpha,
                                                   const HermanOptions& opts = {});

/// Fiberwise factorization of a fiber-preserving torus diffeomorphism:
/// on every fiber, F = [S, R_alpha] o R_beta.
struct LoopFactorization {
  FiberDiffeo s;
  PeriodicField beta;  ///< dim 1, indexed by the base grid
  double alpha;
  double residual;     ///< worst fiber
  bool filtered;
};

LoopFactorization factor_loop(const FiberDiffeo& f, const DiophantineRotation& alpha, const HermanOptions& opts = {});

}  // namespace difffactor
