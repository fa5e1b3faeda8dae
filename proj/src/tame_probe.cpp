#include "difffactor/tame_probe.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "difffactor/errors.hpp"
#include "difffactor/fiber_decompose.hpp"
#include "difffactor/herman.hpp"
#include "difffactor/pipeline.hpp"

namespace difffactor {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kBoundedFactor = 1.5;

// q-profile of the output as a list of fields (max over components)
std::vector<double> profile(const std::vector<PeriodicField>& out, int n) {
  std::vector<double> q(n + 1, 0.0);
  for (const auto& f : out) {
    auto p = seminorm_profile(f, n);
    for (int i = 0; i <= n; ++i) q[i] = std::max(q[i], p[i]);
  }
  return q;
}

}  // namespace

TameProbeReport tame_probe(const std::string& op, int grid, const std::vector<int>& orders, std::uint64_t seed) {
  if (!valid_grid(grid)) throw InvalidArgument("tame_probe: grid must be a power of two >= 8");
  if (orders.empty()) throw InvalidArgument("tame_probe: no orders given");
  for (int n : orders)
    if (n < 0 || n + 2 > kDefaultMaxOrder) throw InvalidArgument("tame_probe: orders must lie in [0, 6]");

  TameProbeReport r;
  r.op = op;
  r.grid = grid;
  r.orders = orders;
  for (int k : {1, 2, 4, 8, 16, 32})
    if (k <= grid / 4) r.modes.push_back(k);

  const bool planar = op == "compose-with-g" || op == "right-inverse-tp";
  std::function<std::vector<PeriodicField>(const PeriodicField&)> apply;
  if (op == "identity") {
    apply = [](const PeriodicField& e) { return std::vector<PeriodicField>{e}; };
  } else if (op == "derivative") {
    apply = [](const PeriodicField& e) { return std::vector<PeriodicField>{e.derivative(1)}; };
  } else if (op == "cohomological") {
    auto alpha = DiophantineRotation::golden(std::max(512, grid / 2));
    apply = [alpha](const PeriodicField& e) { return std::vector<PeriodicField>{solve_cohomological(e, alpha).s}; };
  } else if (op == "compose-with-g") {
    auto g = generate_random_diffeo(seed, 0.02, 2, grid);
    std::vector<Point2> pts(std::size_t(grid) * grid);
    for (int i = 0; i < grid; ++i)
      for (int j = 0; j < grid; ++j) {
        std::size_t idx = std::size_t(i) * grid + j;
        pts[idx] = {double(i) / grid + g.u()[idx], double(j) / grid + g.w()[idx]};
      }
    apply = [pts, grid](const PeriodicField& e) {
      return std::vector<PeriodicField>{PeriodicField(2, grid, evaluate(e, std::span<const Point2>(pts)))};
    };
  } else if (op == "right-inverse-tp") {
    auto v = generate_random_diffeo(seed, 0.02, 2, grid).u();
    apply = [v](const PeriodicField& e) {
      auto ri = right_inverse_tp(v, VectorField2{e, e});
      return std::vector<PeriodicField>{ri.a, ri.b};
    };
  } else {
    throw InvalidArgument("tame_probe: unknown operator '" + op +
                          "' (identity, derivative, compose-with-g, right-inverse-tp, cohomological)");
  }
  r.corpus = std::string(planar ? "e(x, y) = sin(2 pi k (x + y))" : "e(x) = sin(2 pi k x)") +
             ", unit amplitude, k in the listed modes";
  if (planar) r.corpus += ", fixed seeded diffeomorphism of C^1 size 0.02 (seed " + std::to_string(seed) + ")";

  const int top = *std::max_element(orders.begin(), orders.end());
  const int deg_top = r.degrees.back();
  r.raw.assign(r.degrees.size(), std::vector<std::vector<double>>(orders.size(), std::vector<double>(r.modes.size())));
  for (std::size_t i = 0; i < r.modes.size(); ++i) {
    const double k = r.modes[i];
    PeriodicField e = planar ? PeriodicField::sample(grid, [k](double x, double y) { return std::sin(kTwoPi * k * (x + y)); })
                             : PeriodicField::sample(grid, [k](double x) { return std::sin(kTwoPi * k * x); });
    auto p = seminorm_profile(e, top + deg_top);
    auto q = profile(apply(e), top);
    for (std::size_t d = 0; d < r.degrees.size(); ++d)
      for (std::size_t o = 0; o < orders.size(); ++o)
        r.raw[d][o][i] = q[orders[o]] / (1.0 + p[orders[o] + r.degrees[d]]);
  }

  const std::size_t half = r.modes.size() / 2;
  r.bounded.assign(r.degrees.size(), std::vector<bool>(orders.size(), false));
  for (std::size_t d = 0; d < r.degrees.size(); ++d) {
    bool all = r.modes.size() >= 2;
    for (std::size_t o = 0; o < orders.size(); ++o) {
      const auto& row = r.raw[d][o];
      if (row.size() < 2) continue;
      double lo = *std::max_element(row.begin(), row.begin() + half);
      double hi = *std::max_element(row.begin() + half, row.end());
      r.bounded[d][o] = std::isfinite(hi) && hi <= kBoundedFactor * lo;
      all = all && r.bounded[d][o];
    }
    if (all && !r.inferred_r) r.inferred_r = r.degrees[d];
  }
  return r;
}

Json tame_probe_to_json(const TameProbeReport& r) {
  Json j;
  j["operator"] = r.op;
  j["corpus"] = {{"description", r.corpus}, {"grid", r.grid}, {"modes", r.modes}};
  j["orders"] = r.orders;
  j["degrees"] = r.degrees;
  Json table = Json::array();
  for (std::size_t d = 0; d < r.degrees.size(); ++d)
    for (std::size_t o = 0; o < r.orders.size(); ++o) {
      Json row;
      row["r"] = r.degrees[d];
      row["n"] = r.orders[o];
      row["ratios"] = r.raw[d][o];
      row["sup"] = *std::max_element(r.raw[d][o].begin(), r.raw[d][o].end());
      row["bounded"] = bool(r.bounded[d][o]);
      table.push_back(row);
    }
  j["table"] = table;
  j["bounded_rule"] = "max over the upper half of the modes <= 1.5 x max over the lower half";
  j["inferred_r"] = r.inferred_r ? Json(*r.inferred_r) : Json(nullptr);
  return j;
}

}  // namespace difffactor
