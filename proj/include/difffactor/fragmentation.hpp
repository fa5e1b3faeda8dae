#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "difffactor/diffeo.hpp"

namespace difffactor {

/// Arc [lo, hi] of the base circle, read mod 1; 0 < hi - lo <= 1.
struct Arc {
  double lo;
  double hi;

  double length() const { return hi - lo; }
  /// Position of x past lo, in [0, 1).
  double offset(double x) const;
  bool contains(double x) const { return offset(x) <= length(); }
  bool whole() const { return length() >= 1.0; }
};

enum class BumpProfile { poly7, smooth };

std::string to_string(BumpProfile p);
BumpProfile parse_profile(const std::string& text);

/// 0 at t <= 0, 1 at t >= 1: the C^3 polynomial smoothstep of degree 7 or
/// the C^infinity exp(-1/t) step.
double smooth_step(BumpProfile p, double t);

/// core ⊂ support ⊂ outer. The fragmentation bump lambda is 1 on the core
/// and vanishes off the support; the localization bump mu is 1 on the
/// support and vanishes off the outer arc.
struct Chart {
  Arc core;
  Arc support;
  Arc outer;
};

class ChartCover {
 public:
  /// Throws InvalidArgument if arcs are not nested or the cores miss part
  /// of the circle.
  ChartCover(std::vector<Chart> charts, BumpProfile profile = BumpProfile::poly7);

  /// One chart covering everything, lambda = mu = 1.
  static ChartCover global();
  /// Two overlapping arcs around 0 and 1/2.
  static ChartCover two_arc(BumpProfile profile = BumpProfile::poly7);

  const std::vector<Chart>& charts() const { return charts_; }
  std::size_t size() const { return charts_.size(); }
  BumpProfile profile() const { return profile_; }
  bool is_global() const { return charts_.size() == 1 && charts_[0].core.whole(); }

  double lambda(std::size_t i, double x) const;
  double mu(std::size_t i, double x) const;

 private:
  std::vector<Chart> charts_;
  BumpProfile profile_;
};

/// Per-fiber C^0 distance to the identity admitted by fragment().
inline constexpr double kFragmentBasin = 0.05;

/// Pieces F_i = phi_i(F_{i-1}^{-1} ... F_1^{-1} s), phi_i scaling the
/// displacement of the fiber over base point x by lambda_i(x). The ordered
/// product F_1 o ... o F_N equals s.
std::vector<FiberDiffeo> fragment(const FiberDiffeo& s, const ChartCover& cover);

/// Base coordinate of base sample b.
inline double base_point(int b, int grid) { return double(b) / grid; }

/// Vector field on RP^1 = R/Z induced by the traceless matrix y, sampled on
/// `grid` points (x = theta / pi).
PeriodicField moebius_generator(const Eigen::Matrix2d& y, int grid);

/// A fiber-level commutator witness: g together with h = exp(generator).
struct CommutatorWitness {
  PeriodicField generator;  ///< dim 1 field on the fiber
  FiberDiffeo g;
};

/// g and h = exp(mu(x) * generator) for one commutator [g, h].
struct LocalizedCommutator {
  FiberDiffeo g;
  FiberDiffeo h;
  PeriodicField generator;  ///< dim 1 fiber field
  PeriodicField profile;    ///< dim 1 base field mu
  int steps;
};

/// Localizes commutator data for a piece supported over chart `chart`:
/// h^j(x) = exp(mu(x) Y_j) with mu = 1 on the chart support, and g^j equal
/// to the witness over the support and the identity elsewhere.
std::vector<LocalizedCommutator> localize_commutator_data(const FiberDiffeo& piece, const ChartCover& cover,
                                                          std::size_t chart,
                                                          const std::vector<CommutatorWitness>& witness,
                                                          int steps);

/// Largest |displacement| over fibers whose base point lies outside `arc`.
double leakage_outside(const FiberDiffeo& f, const Arc& arc);

}  // namespace difffactor
