#include "difffactor/fragmentation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <sstream>

#include "difffactor/errors.hpp"

namespace difffactor {
namespace {

// inner ⊂ outer, strictly inside unless outer is the whole circle.
bool nested(const Arc& inner, const Arc& outer) {
  if (outer.whole()) return true;
  if (inner.whole()) return false;
  double o = outer.offset(inner.lo);
  return o > 0.0 && o + inner.length() < outer.length();
}

// 1 on `flat`, ramping to 0 at the ends of `span`, 0 outside.
double plateau(BumpProfile p, const Arc& flat, const Arc& span, double x) {
  if (flat.whole() || flat.contains(x)) return 1.0;
  double t = span.offset(x), len = span.length();
  if (t >= len) return 0.0;
  double a = span.offset(flat.lo), b = a + flat.length();
  if (t < a) return smooth_step(p, t / a);
  if (t <= b) return 1.0;
  return smooth_step(p, (len - t) / (len - b));
}

double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace

double Arc::offset(double x) const {
  double t = x - lo;
  return t - std::floor(t);
}

std::string to_string(BumpProfile p) { return p == BumpProfile::poly7 ? "poly7" : "smooth"; }

BumpProfile parse_profile(const std::string& text) {
  if (text == "poly7") return BumpProfile::poly7;
  if (text == "smooth") return BumpProfile::smooth;
  throw InvalidArgument("profile: expected poly7 or smooth, got '" + text + "'");
}

double smooth_step(BumpProfile p, double t) {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  if (p == BumpProfile::poly7) return t * t * t * t * (35.0 + t * (-84.0 + t * (70.0 - 20.0 * t)));
  double a = std::exp(-1.0 / t), b = std::exp(-1.0 / (1.0 - t));
  return a / (a + b);
}

ChartCover::ChartCover(std::vector<Chart> charts, BumpProfile profile)
    : charts_(std::move(charts)), profile_(profile) {
  if (charts_.empty()) throw InvalidArgument("ChartCover: at least one chart is required");
  for (std::size_t i = 0; i < charts_.size(); ++i) {
    const auto& c = charts_[i];
    for (const Arc* a : {&c.core, &c.support, &c.outer})
      if (!(a->length() > 0.0 && a->length() <= 1.0) || !std::isfinite(a->lo))
        throw InvalidArgument("ChartCover: chart " + std::to_string(i) + " has an arc of invalid length");
    if (!nested(c.core, c.support) || !nested(c.support, c.outer))
      throw InvalidArgument("ChartCover: chart " + std::to_string(i) + " needs core ⊂ support ⊂ outer");
  }
  const int fine = 4096;
  for (int j = 0; j < fine; ++j) {
    double x = double(j) / fine;
    bool covered = std::any_of(charts_.begin(), charts_.end(), [x](const Chart& c) { return c.core.contains(x); });
    if (!covered) {
      std::ostringstream msg;
      msg << "ChartCover: cores do not cover the base near x = " << x;
      throw InvalidArgument(msg.str());
    }
  }
}

ChartCover ChartCover::global() {
  Arc all{0.0, 1.0};
  return ChartCover({Chart{all, all, all}});
}

ChartCover ChartCover::two_arc(BumpProfile profile) {
  return ChartCover({Chart{{-0.27, 0.27}, {-0.30, 0.30}, {-0.35, 0.35}},
                     Chart{{0.23, 0.77}, {0.20, 0.80}, {0.15, 0.85}}},
                    profile);
}

double ChartCover::lambda(std::size_t i, double x) const {
  return plateau(profile_, charts_.at(i).core, charts_.at(i).support, x);
}

double ChartCover::mu(std::size_t i, double x) const {
  return plateau(profile_, charts_.at(i).support, charts_.at(i).outer, x);
}

std::vector<FiberDiffeo> fragment(const FiberDiffeo& s, const ChartCover& cover) {
  const int n = s.grid();
  const int axis = s.axis();
  if (cover.is_global()) return {s};
  std::vector<std::vector<double>> pieces(cover.size(), std::vector<double>(std::size_t(n) * n, 0.0));
  for (int b = 0; b < n; ++b) {
    auto r = detail::fiber_values(s.displacement(), axis, b);
    double dist = max_abs(r);
    if (dist > kFragmentBasin) {
      std::ostringstream msg;
      msg << "fragment: fiber at base coordinate " << base_point(b, n) << " has C^0 distance " << dist
          << " to the identity, above " << kFragmentBasin;
      throw BasinError(msg.str());
    }
    for (std::size_t i = 0; i < cover.size(); ++i) {
      double lam = cover.lambda(i, base_point(b, n));
      if (lam == 0.0) continue;
      if (lam == 1.0) {
        detail::store_fiber(pieces[i], n, axis, b, r);
        std::fill(r.begin(), r.end(), 0.0);
        continue;
      }
      std::vector<double> piece(r);
      for (double& v : piece) v *= lam;
      detail::store_fiber(pieces[i], n, axis, b, piece);
      r = detail::circle_compose(detail::circle_invert(piece, {}), r);
    }
  }
  std::vector<FiberDiffeo> out;
  for (auto& p : pieces) out.emplace_back(axis, PeriodicField(2, n, std::move(p)));
  return out;
}

PeriodicField moebius_generator(const Eigen::Matrix2d& y, int grid) {
  const double a = y(0, 0), b = y(0, 1), c = y(1, 0);
  return PeriodicField::sample(grid, [&](double x) {
    double t = std::numbers::pi * x, cs = std::cos(t), sn = std::sin(t);
    return (c * cs * cs - b * sn * sn - 2.0 * a * sn * cs) / std::numbers::pi;
  });
}

double leakage_outside(const FiberDiffeo& f, const Arc& arc) {
  const int n = f.grid();
  double m = 0.0;
  for (int b = 0; b < n; ++b)
    if (!arc.contains(base_point(b, n))) m = std::max(m, max_abs(detail::fiber_values(f.displacement(), f.axis(), b)));
  return m;
}

std::vector<LocalizedCommutator> localize_commutator_data(const FiberDiffeo& piece, const ChartCover& cover,
                                                          std::size_t chart,
                                                          const std::vector<CommutatorWitness>& witness,
                                                          int steps) {
  if (chart >= cover.size()) throw InvalidArgument("localize_commutator_data: chart index out of range");
  const Chart& c = cover.charts()[chart];
  const int n = piece.grid();
  const int axis = piece.axis();
  double leak = leakage_outside(piece, c.support);
  if (leak != 0.0) {
    std::ostringstream msg;
    msg << "localize_commutator_data: piece leaks outside the chart support (|displacement| = " << leak << ")";
    throw InvalidArgument(msg.str());
  }
  std::vector<double> mu(n);
  for (int b = 0; b < n; ++b) mu[b] = cover.mu(chart, base_point(b, n));
  PeriodicField profile(1, n, mu);

  std::vector<LocalizedCommutator> out;
  for (const auto& w : witness) {
    if (w.g.axis() != axis || w.g.grid() != n || w.generator.dimension() != 1 || w.generator.grid() != n)
      throw InvalidArgument("localize_commutator_data: witness does not match the piece");
    if (leakage_outside(w.g, c.support) > 1e-12)
      throw InvalidArgument("localize_commutator_data: witness g is not the identity off the chart support");
    std::vector<double> g(std::size_t(n) * n, 0.0), h(std::size_t(n) * n, 0.0);
    // fibers sharing a value of mu share the flow
    std::map<double, std::vector<double>> flows;
    for (int b = 0; b < n; ++b) {
      if (c.support.contains(base_point(b, n)))
        detail::store_fiber(g, n, axis, b, detail::fiber_values(w.g.displacement(), axis, b));
      if (mu[b] == 0.0) continue;
      auto it = flows.find(mu[b]);
      if (it == flows.end()) {
        std::vector<double> y(w.generator.values().begin(), w.generator.values().end());
        for (double& v : y) v *= mu[b];
        it = flows.emplace(mu[b], detail::circle_flow(y, steps)).first;
      }
      detail::store_fiber(h, n, axis, b, it->second);
    }
    out.push_back({FiberDiffeo(axis, PeriodicField(2, n, std::move(g))), FiberDiffeo(axis, PeriodicField(2, n, std::move(h))),
                   w.generator, profile, steps});
  }
  return out;
}

}  // namespace difffactor
