#include "difffactor/lie_ngates.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <sstream>

#include <unsupported/Eigen/MatrixFunctions>

#include "difffactor/errors.hpp"

namespace difffactor {
namespace {

Eigen::VectorXd vec(const Eigen::MatrixXd& m) { return Eigen::Map<const Eigen::VectorXd>(m.data(), m.size()); }

// Structure constants of the span of `mats`, which must close under brackets.
std::vector<double> constants_from(const std::vector<Eigen::MatrixXd>& mats) {
  const int d = int(mats.size());
  Eigen::MatrixXd basis(mats[0].size(), d);
  for (int i = 0; i < d; ++i) basis.col(i) = vec(mats[i]);
  auto qr = basis.colPivHouseholderQr();
  std::vector<double> c(std::size_t(d) * d * d, 0.0);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      Eigen::MatrixXd b = mats[i] * mats[j] - mats[j] * mats[i];
      Eigen::VectorXd coords = qr.solve(vec(b));
      for (int k = 0; k < d; ++k) c[(std::size_t(i) * d + j) * d + k] = std::abs(coords[k]) < 1e-15 ? 0.0 : coords[k];
    }
  return c;
}

Eigen::MatrixXd unit(int rows, int cols, int r, int c) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(rows, cols);
  m(r, c) = 1.0;
  return m;
}

Eigen::VectorXd coords(std::initializer_list<double> v) {
  Eigen::VectorXd out(v.size());
  int i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

}  // namespace

FiniteLieAlgebra::FiniteLieAlgebra(std::string name, int dimension, std::vector<double> constants,
                                   std::vector<Eigen::MatrixXd> representation, std::optional<CartanData> cartan)
    : name_(std::move(name)), d_(dimension), c_(std::move(constants)), rep_(std::move(representation)),
      cartan_(std::move(cartan)) {
  if (d_ < 1) throw InvalidArgument("FiniteLieAlgebra: dimension must be >= 1");
  if (c_.size() != std::size_t(d_) * d_ * d_)
    throw InvalidArgument("FiniteLieAlgebra: expected d^3 = " + std::to_string(d_ * d_ * d_) + " structure constants");
  for (int i = 0; i < d_; ++i)
    for (int j = 0; j < d_; ++j)
      for (int k = 0; k < d_; ++k)
        if (std::abs(c(i, j, k) + c(j, i, k)) > 1e-12)
          throw InvalidArgument("FiniteLieAlgebra: structure constants are not antisymmetric");
  // Jacobi: [[e_i,e_j],e_k] + [[e_j,e_k],e_i] + [[e_k,e_i],e_j] = 0
  for (int i = 0; i < d_; ++i)
    for (int j = 0; j < d_; ++j)
      for (int k = 0; k < d_; ++k)
        for (int m = 0; m < d_; ++m) {
          double s = 0.0;
          for (int l = 0; l < d_; ++l) s += c(i, j, l) * c(l, k, m) + c(j, k, l) * c(l, i, m) + c(k, i, l) * c(l, j, m);
          if (std::abs(s) > 1e-12) {
            std::ostringstream msg;
            msg << "FiniteLieAlgebra: Jacobi identity fails by " << s << " at (" << i << ", " << j << ", " << k << ")";
            throw InvalidArgument(msg.str());
          }
        }
  if (!rep_.empty()) {
    if (int(rep_.size()) != d_) throw InvalidArgument("FiniteLieAlgebra: representation needs one matrix per basis element");
    const auto rows = rep_[0].rows();
    for (const auto& m : rep_)
      if (m.rows() != rows || m.cols() != rows) throw InvalidArgument("FiniteLieAlgebra: representation matrices must be square and equal-sized");
    for (int i = 0; i < d_; ++i)
      for (int j = 0; j < d_; ++j) {
        Eigen::MatrixXd lhs = rep_[i] * rep_[j] - rep_[j] * rep_[i];
        for (int k = 0; k < d_; ++k) lhs -= c(i, j, k) * rep_[k];
        if (lhs.cwiseAbs().maxCoeff() > 1e-10)
          throw InvalidArgument("FiniteLieAlgebra: representation does not reproduce the structure constants");
      }
    rep_basis_.resize(rows * rows, d_);
    for (int i = 0; i < d_; ++i) rep_basis_.col(i) = vec(rep_[i]);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(rep_basis_);
    if (svd.singularValues()[d_ - 1] < 1e-12 * svd.singularValues()[0])
      throw InvalidArgument("FiniteLieAlgebra: representation is not faithful");
  }
  if (cartan_ && (cartan_->regular.size() != d_ || cartan_->root_sum.size() != d_))
    throw InvalidArgument("FiniteLieAlgebra: Cartan data has the wrong dimension");
}

FiniteLieAlgebra FiniteLieAlgebra::abelian(int n) {
  if (n < 1) throw InvalidArgument("abelian: dimension must be >= 1");
  std::vector<Eigen::MatrixXd> rep;
  for (int i = 0; i < n; ++i) rep.push_back(unit(n, n, i, i));
  return FiniteLieAlgebra("abelian:" + std::to_string(n), n, std::vector<double>(std::size_t(n) * n * n, 0.0), rep);
}

FiniteLieAlgebra FiniteLieAlgebra::sl2() {
  Eigen::MatrixXd h = unit(2, 2, 0, 0) - unit(2, 2, 1, 1);
  std::vector<Eigen::MatrixXd> rep{h, unit(2, 2, 0, 1), unit(2, 2, 1, 0)};
  return FiniteLieAlgebra("sl2", 3, constants_from(rep), rep, CartanData{coords({1, 0, 0}), coords({0, 1, 0})});
}

FiniteLieAlgebra FiniteLieAlgebra::so3() {
  Eigen::MatrixXd lx = unit(3, 3, 2, 1) - unit(3, 3, 1, 2);
  Eigen::MatrixXd ly = unit(3, 3, 0, 2) - unit(3, 3, 2, 0);
  Eigen::MatrixXd lz = unit(3, 3, 1, 0) - unit(3, 3, 0, 1);
  std::vector<Eigen::MatrixXd> rep{lx, ly, lz};
  // compact form: a maximal torus generator and a transverse element
  return FiniteLieAlgebra("so3", 3, constants_from(rep), rep, CartanData{coords({0, 0, 1}), coords({1, 0, 0})});
}

FiniteLieAlgebra FiniteLieAlgebra::sl3() {
  std::vector<Eigen::MatrixXd> rep{
      unit(3, 3, 0, 0) - unit(3, 3, 1, 1), unit(3, 3, 1, 1) - unit(3, 3, 2, 2),
      unit(3, 3, 0, 1), unit(3, 3, 1, 2), unit(3, 3, 0, 2),
      unit(3, 3, 1, 0), unit(3, 3, 2, 1), unit(3, 3, 2, 0)};
  // regular diag(1, 0, -1) = H1 + H2; simple roots E12, E23
  return FiniteLieAlgebra("sl3", 8, constants_from(rep), rep,
                          CartanData{coords({1, 1, 0, 0, 0, 0, 0, 0}), coords({0, 0, 1, 1, 0, 0, 0, 0})});
}

FiniteLieAlgebra FiniteLieAlgebra::builtin(const std::string& name) {
  if (name == "sl2") return sl2();
  if (name == "so3") return so3();
  if (name == "sl3") return sl3();
  if (name.rfind("abelian:", 0) == 0) {
    std::size_t used = 0;
    int d = 0;
    try {
      d = std::stoi(name.substr(8), &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != name.size() - 8) throw InvalidArgument("algebra: bad dimension in '" + name + "'");
    return abelian(d);
  }
  throw InvalidArgument("algebra: unknown built-in '" + name + "' (sl2, so3, sl3, abelian:d)");
}

Eigen::VectorXd FiniteLieAlgebra::bracket(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const {
  return ad(x) * y;
}

Eigen::MatrixXd FiniteLieAlgebra::ad(const Eigen::VectorXd& y) const {
  if (y.size() != d_) throw InvalidArgument("ad: element has the wrong dimension");
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(d_, d_);
  for (int l = 0; l < d_; ++l) {
    if (y[l] == 0.0) continue;
    for (int i = 0; i < d_; ++i)
      for (int k = 0; k < d_; ++k) m(k, i) += y[l] * c(l, i, k);
  }
  return m;
}

Eigen::MatrixXd FiniteLieAlgebra::to_matrix(const Eigen::VectorXd& y) const {
  if (rep_.empty()) throw InvalidArgument(name_ + ": no matrix representation");
  if (y.size() != d_) throw InvalidArgument("to_matrix: element has the wrong dimension");
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(rep_[0].rows(), rep_[0].cols());
  for (int i = 0; i < d_; ++i) m += y[i] * rep_[i];
  return m;
}

Eigen::MatrixXd FiniteLieAlgebra::Ad(const Eigen::MatrixXd& g) const {
  if (rep_.empty()) throw InvalidArgument(name_ + ": no matrix representation");
  Eigen::MatrixXd ginv = g.inverse();
  Eigen::MatrixXd images(rep_basis_.rows(), d_);
  for (int i = 0; i < d_; ++i) images.col(i) = vec(g * rep_[i] * ginv);
  return rep_basis_.colPivHouseholderQr().solve(images);
}

Eigen::MatrixXd k_y_operator(const FiniteLieAlgebra& alg, const std::vector<Eigen::VectorXd>& y) {
  const int d = alg.dimension();
  Eigen::MatrixXd k(d, d * int(y.size()));
  for (std::size_t j = 0; j < y.size(); ++j) {
    if (y[j].size() != d)
      throw InvalidArgument("k_y_operator: element " + std::to_string(j) + " has dimension " +
                            std::to_string(y[j].size()) + ", expected " + std::to_string(d));
    // [X, Y_j] = -ad_{Y_j} X
    k.block(0, d * int(j), d, d) = -alg.ad(y[j]);
  }
  return k;
}

RankInfo numerical_rank(const Eigen::MatrixXd& m, double threshold) {
  if (m.size() == 0) return {0, 0.0};
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const auto& s = svd.singularValues();
  if (s[0] == 0.0) return {0, 0.0};
  int rank = 0;
  for (int i = 0; i < s.size(); ++i)
    if (s[i] > threshold * s[0]) ++rank;
  int last = int(std::min<Eigen::Index>(m.rows(), s.size())) - 1;
  return {rank, s[last] / s[0]};
}

NgSearchResult n_lower_search(const FiniteLieAlgebra& alg, int n_cap, int trials, std::uint64_t seed) {
  if (n_cap < 1) throw InvalidArgument("n_lower_search: N cap must be >= 1");
  if (trials < 0) throw InvalidArgument("n_lower_search: trials must be >= 0");
  const int d = alg.dimension();
  NgSearchResult result;
  result.cap = n_cap;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;

  auto attempt = [&](int n, const std::string& label, std::vector<Eigen::VectorXd> y) {
    auto info = numerical_rank(k_y_operator(alg, y));
    result.trials.push_back({n, label, info.rank, info.smallest_ratio});
    if (info.rank == d) {
      result.n = n;
      result.witness = std::move(y);
      return true;
    }
    return false;
  };

  for (int n = 1; n <= n_cap; ++n) {
    if (alg.cartan()) {
      std::vector<Eigen::VectorXd> y(n, Eigen::VectorXd::Zero(d));
      y[0] = alg.cartan()->regular;
      if (n > 1) y[1] = alg.cartan()->root_sum;
      if (attempt(n, "structured", std::move(y))) return result;
    }
    for (int t = 0; t < trials; ++t) {
      std::vector<Eigen::VectorXd> y(n, Eigen::VectorXd(d));
      for (auto& v : y)
        for (int i = 0; i < d; ++i) v[i] = normal(rng);
      if (attempt(n, "random", std::move(y))) return result;
    }
  }
  return result;
}

double ad_integral_residual(const FiniteLieAlgebra& alg, const Eigen::VectorXd& y, int points) {
  if (!alg.has_representation()) throw InvalidArgument("ad_integral_residual: algebra has no matrix representation");
  if (points < 3 || points % 2 == 0)
    throw InvalidArgument("ad_integral_residual: Simpson needs an odd number of points >= 3, got " + std::to_string(points));
  const int d = alg.dimension();
  if (y.size() == d && y.isZero(0.0)) return 0.0;  // both sides are the zero map
  Eigen::MatrixXd m = alg.to_matrix(y);
  Eigen::MatrixXd lhs = Eigen::MatrixXd::Identity(d, d) - alg.Ad(m.exp());
  Eigen::MatrixXd integral = Eigen::MatrixXd::Zero(d, d);
  const double h = 1.0 / (points - 1);
  for (int i = 0; i < points; ++i) {
    double w = (i == 0 || i == points - 1) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
    Eigen::MatrixXd t = (i * h) * m;
    integral += w * alg.Ad(t.exp());
  }
  integral *= h / 3.0;
  Eigen::MatrixXd rhs = -alg.ad(y) * integral;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(lhs - rhs);
  return svd.singularValues()[0];
}

Mat2 psl2_rotation(double beta) {
  double t = std::numbers::pi * beta;
  Mat2 r;
  r << std::cos(t), -std::sin(t), std::sin(t), std::cos(t);
  return r;
}

namespace {

template <class T>
using M2 = Eigen::Matrix<T, 2, 2>;

// exp(a H) exp(b E) exp(c F)
template <class T>
M2<T> second_kind(T a, T b, T c) {
  M2<T> d, e, f;
  d << std::exp(a), T(0), T(0), std::exp(-a);
  e << T(1), b, T(0), T(1);
  f << T(1), T(0), c, T(1);
  return d * e * f;
}

template <class T>
M2<T> inverse_sl2(const M2<T>& g) {
  M2<T> inv;
  inv << g(1, 1), -g(0, 1), -g(1, 0), g(0, 0);
  return inv;
}

template <class T>
M2<T> group_commutator(const M2<T>& g, const M2<T>& h) {
  return g * h * inverse_sl2(g) * inverse_sl2(h);
}

// sl2 coordinates (H, E, F) of the traceless part of m - 1 after right
// multiplication by target^{-1}.
template <class T>
Eigen::Matrix<T, 3, 1> defect(const Eigen::Matrix<T, 6, 1>& x, const Mat2& h1, const Mat2& h2, const Mat2& target_inv) {
  M2<T> g1 = second_kind(x[0], x[1], x[2]);
  M2<T> g2 = second_kind(x[3], x[4], x[5]);
  M2<T> k = group_commutator<T>(g1, h1.cast<T>()) * group_commutator<T>(g2, h2.cast<T>()) * target_inv.cast<T>();
  Eigen::Matrix<T, 3, 1> r;
  r << (k(0, 0) - k(1, 1)) / T(2), k(0, 1), k(1, 0);
  return r;
}

}  // namespace

Psl2Commutators psl2_rotation_commutators(double beta, double eps, double basin) {
  if (!(eps > 0.0) || !std::isfinite(eps)) throw InvalidArgument("psl2_rotation_commutators: eps must be positive");
  if (!(std::abs(beta) < basin)) {
    std::ostringstream msg;
    msg << "psl2_rotation_commutators: |beta| = " << std::abs(beta) << " exceeds the basin bound " << basin;
    throw BasinError(msg.str());
  }
  Mat2 h1, h2;
  h1 << std::exp(eps), 0.0, 0.0, std::exp(-eps);
  h2 << 1.0, eps, 0.0, 1.0;
  const Mat2 target = psl2_rotation(beta);
  const Mat2 target_inv = target.transpose();

  // differential at the identity: [id - Ad_{h1} | id - Ad_{h2}] must be onto
  auto sl2 = FiniteLieAlgebra::sl2();
  Eigen::MatrixXd d0(3, 6);
  d0 << Eigen::MatrixXd::Identity(3, 3) - sl2.Ad(h1), Eigen::MatrixXd::Identity(3, 3) - sl2.Ad(h2);
  if (numerical_rank(d0).rank < 3) {
    std::ostringstream msg;
    msg << "psl2_rotation_commutators: differential at the identity is rank deficient at eps = " << eps
        << "; use a larger eps";
    throw BasinError(msg.str());
  }

  using C = std::complex<double>;
  Eigen::Matrix<double, 6, 1> x = Eigen::Matrix<double, 6, 1>::Zero();
  auto residual_at = [&](const Eigen::Matrix<double, 6, 1>& p) {
    Mat2 g1 = second_kind(p[0], p[1], p[2]), g2 = second_kind(p[3], p[4], p[5]);
    Mat2 k = group_commutator<double>(g1, h1) * group_commutator<double>(g2, h2);
    return std::min((k - target).cwiseAbs().maxCoeff(), (k + target).cwiseAbs().maxCoeff());
  };

  double res = residual_at(x);
  int it = 0;
  for (; it < 60 && res > 1e-15; ++it) {
    Eigen::Matrix<double, 3, 1> r = defect<double>(x, h1, h2, target_inv);
    // complex-step Jacobian, exact to rounding
    Eigen::Matrix<double, 3, 6> jac;
    const double step = 1e-30;
    for (int j = 0; j < 6; ++j) {
      Eigen::Matrix<C, 6, 1> xc = x.cast<C>();
      xc[j] += C(0.0, step);
      jac.col(j) = defect<C>(xc, h1, h2, target_inv).imag() / step;
    }
    Eigen::Matrix<double, 6, 1> dx = jac.completeOrthogonalDecomposition().solve(-r);
    x += dx;
    double next = residual_at(x);
    if (!std::isfinite(next)) break;
    if (next >= res && res < 1e-13) break;
    res = next;
  }
  if (!(res <= 1e-10)) {
    std::ostringstream msg;
    msg << "psl2_rotation_commutators: Newton stopped at residual " << res << " for beta = " << beta
        << "; use a larger eps";
    throw ConvergenceError(msg.str(), {res});
  }
  return {second_kind(x[0], x[1], x[2]), h1, second_kind(x[3], x[4], x[5]), h2, res, it};
}

PeriodicField moebius_displacement(const Mat2& a, int grid) {
  if (!valid_grid(grid)) throw InvalidArgument("moebius_displacement: grid must be a power of two >= 8");
  if (!(a.determinant() > 0.0)) throw InvalidArgument("moebius_displacement: matrix must have positive determinant");
  std::vector<double> d(grid);
  for (int i = 0; i < grid; ++i) {
    double t = std::numbers::pi * i / grid;
    Eigen::Vector2d v(std::cos(t), std::sin(t));
    Eigen::Vector2d w = a * v;
    double delta = std::atan2(v.x() * w.y() - v.y() * w.x(), v.dot(w)) / std::numbers::pi;
    d[i] = delta - std::round(delta);
  }
  return PeriodicField(1, grid, std::move(d));
}

CircleDiffeo moebius_diffeo(const Mat2& a, int grid) { return CircleDiffeo(moebius_displacement(a, grid)); }

FiberDiffeo fiber_commutator(const FiberDiffeo& g, const FiberDiffeo& h) {
  if (g.axis() != h.axis() || g.grid() != h.grid())
    throw InvalidArgument("fiber_commutator: factors must share axis and grid");
  const int n = g.grid();
  std::vector<double> out(std::size_t(n) * n);
  for (int b = 0; b < n; ++b) {
    auto gv = detail::fiber_values(g.displacement(), g.axis(), b);
    auto hv = detail::fiber_values(h.displacement(), h.axis(), b);
    auto gi = detail::circle_invert(gv, {});
    auto hi = detail::circle_invert(hv, {});
    auto c = detail::circle_compose(gv, detail::circle_compose(hv, detail::circle_compose(gi, hi)));
    detail::store_fiber(out, n, g.axis(), b, c);
  }
  return FiberDiffeo(g.axis(), PeriodicField(2, n, std::move(out)));
}

RotationLoopCommutators rotation_loop_commutators(const PeriodicField& beta, double eps, int axis, double basin) {
  if (beta.dimension() != 1) throw InvalidArgument("rotation_loop_commutators: beta must be a 1D field");
  if (axis != 1 && axis != 2) throw InvalidArgument("rotation_loop_commutators: axis must be 1 or 2");
  const int n = beta.grid();
  std::vector<double> g1(std::size_t(n) * n), h1(g1.size()), g2(g1.size()), h2(g1.size());
  std::vector<Psl2Commutators> points;
  points.reserve(n);
  for (int b = 0; b < n; ++b) {
    try {
      points.push_back(psl2_rotation_commutators(beta[b], eps, basin));
    } catch (const BasinError& e) {
      std::ostringstream msg;
      msg << "rotation_loop_commutators: fiber at base coordinate " << double(b) / n << ": " << e.what();
      throw BasinError(msg.str());
    } catch (const ConvergenceError& e) {
      std::ostringstream msg;
      msg << "rotation_loop_commutators: fiber at base coordinate " << double(b) / n << ": " << e.what();
      throw ConvergenceError(msg.str(), e.history());
    }
    const auto& p = points.back();
    auto put = [&](std::vector<double>& dst, const Mat2& m) {
      auto d = moebius_displacement(m, n);
      detail::store_fiber(dst, n, axis, b, d.values());
    };
    put(g1, p.g1);
    put(h1, p.h1);
    put(g2, p.g2);
    put(h2, p.h2);
  }
  FiberDiffeo G1(axis, PeriodicField(2, n, std::move(g1))), H1(axis, PeriodicField(2, n, std::move(h1)));
  FiberDiffeo G2(axis, PeriodicField(2, n, std::move(g2))), H2(axis, PeriodicField(2, n, std::move(h2)));
  auto product = compose(fiber_commutator(G1, H1), fiber_commutator(G2, H2));
  double res = 0.0;
  for (int b = 0; b < n; ++b) {
    auto d = detail::fiber_values(product.displacement(), axis, b);
    for (double v : d) res = std::max(res, std::abs(v - beta[b]));
  }
  return {std::move(G1), std::move(H1), std::move(G2), std::move(H2), std::move(points), res};
}

}  // namespace difffactor
