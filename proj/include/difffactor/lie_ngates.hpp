#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "difffactor/diffeo.hpp"

namespace difffactor {

/// Singular values below this fraction of the largest count as zero.
inline constexpr double kRankThreshold = 1e-9;

/// Real Lie algebra given by structure constants [e_i, e_j] = sum_k c(i,j,k) e_k,
/// with an optional faithful matrix representation.
class FiniteLieAlgebra {
 public:
  /// Structured witness data: a regular element of a Cartan subalgebra and a
  /// sum of simple root vectors (both in algebra coordinates).
  struct CartanData {
    Eigen::VectorXd regular;
    Eigen::VectorXd root_sum;
  };

  /// `constants` holds d*d*d entries at index (i*d + j)*d + k. Checks
  /// antisymmetry, Jacobi (1e-12) and, if given, that the representation
  /// reproduces the constants (1e-10).
  FiniteLieAlgebra(std::string name, int dimension, std::vector<double> constants,
                   std::vector<Eigen::MatrixXd> representation = {}, std::optional<CartanData> cartan = {});

  static FiniteLieAlgebra abelian(int n);
  static FiniteLieAlgebra sl2();
  static FiniteLieAlgebra so3();
  static FiniteLieAlgebra sl3();
  /// "sl2", "so3", "sl3" or "abelian:d".
  static FiniteLieAlgebra builtin(const std::string& name);

  const std::string& name() const { return name_; }
  int dimension() const { return d_; }
  double c(int i, int j, int k) const { return c_[(std::size_t(i) * d_ + j) * d_ + k]; }
  const std::vector<double>& constants() const { return c_; }
  bool has_representation() const { return !rep_.empty(); }
  const std::vector<Eigen::MatrixXd>& representation() const { return rep_; }
  const std::optional<CartanData>& cartan() const { return cartan_; }

  Eigen::VectorXd bracket(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const;
  /// Matrix of X -> [Y, X].
  Eigen::MatrixXd ad(const Eigen::VectorXd& y) const;
  /// Matrix of the representation element sum_i y_i M_i.
  Eigen::MatrixXd to_matrix(const Eigen::VectorXd& y) const;
  /// Matrix of Ad_g on algebra coordinates, for g in the represented group.
  Eigen::MatrixXd Ad(const Eigen::MatrixXd& g) const;

 private:
  std::string name_;
  int d_;
  std::vector<double> c_;
  std::vector<Eigen::MatrixXd> rep_;
  std::optional<CartanData> cartan_;
  Eigen::MatrixXd rep_basis_;  // columns vec(M_i), for coordinate solves
};

/// d x (N d) matrix of K_Y(X_1..X_N) = [X_1, Y_1] + ... + [X_N, Y_N].
Eigen::MatrixXd k_y_operator(const FiniteLieAlgebra& alg, const std::vector<Eigen::VectorXd>& y);

struct RankInfo {
  int rank;
  double smallest_ratio;  ///< sigma_min / sigma_max over the first d singular values
};
RankInfo numerical_rank(const Eigen::MatrixXd& m, double threshold = kRankThreshold);

struct NgTrial {
  int n;
  std::string label;  ///< "structured" or "random"
  int rank;
  double smallest_ratio;
};

struct NgSearchResult {
  std::optional<int> n;  ///< empty: none found up to the cap
  std::vector<Eigen::VectorXd> witness;
  std::vector<NgTrial> trials;
  double threshold = kRankThreshold;
  int cap = 0;
};

NgSearchResult n_lower_search(const FiniteLieAlgebra& alg, int n_cap, int trials, std::uint64_t seed);

/// Operator-norm gap between id - Ad_{exp Y} and -ad_Y o int_0^1 Ad_{exp tY} dt,
/// the integral by composite Simpson on `points` nodes (odd, >= 3).
double ad_integral_residual(const FiniteLieAlgebra& alg, const Eigen::VectorXd& y, int points);

using Mat2 = Eigen::Matrix2d;

/// Elliptic element acting on RP^1 as the rotation x -> x + beta, with
/// [cos t : sin t] identified with x = t / pi.
Mat2 psl2_rotation(double beta);

struct Psl2Commutators {
  Mat2 g1, h1, g2, h2;
  double residual;  ///< matrix residual of [g1,h1][g2,h2] vs R_beta, up to sign
  int iterations;
};

inline constexpr double kRotationBasin = 0.05;

/// [g1, h1][g2, h2] = R_beta with h1 = exp(eps H), h2 = exp(eps E). Newton
/// from the identity in exponential coordinates of the second kind, using
/// the minimum-norm step through the surjective differential.
Psl2Commutators psl2_rotation_commutators(double beta, double eps, double basin = kRotationBasin);

/// Displacement of the Moebius action of a on the circle, sampled on `grid`
/// points and lifted into [-1/2, 1/2].
PeriodicField moebius_displacement(const Mat2& a, int grid);
CircleDiffeo moebius_diffeo(const Mat2& a, int grid);

/// Loops of the two commutator pairs over the base of `axis`, as fiber
/// diffeomorphisms of that axis; the fiber over base sample j uses beta[j].
struct RotationLoopCommutators {
  FiberDiffeo g1, h1, g2, h2;
  std::vector<Psl2Commutators> points;
  double residual;  ///< C^0 reconstruction of the rotation loop
};

RotationLoopCommutators rotation_loop_commutators(const PeriodicField& beta, double eps, int axis,
                                                  double basin = kRotationBasin);

/// Fiberwise [g, h] for fiber diffeomorphisms on the same axis.
FiberDiffeo fiber_commutator(const FiberDiffeo& g, const FiberDiffeo& h);

}  // namespace difffactor
