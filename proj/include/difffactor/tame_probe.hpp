#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "difffactor/json_io.hpp"

namespace difffactor {

/// Empirical tame-estimate table for a linear operator P:
/// ratio(r, n, e) = q_n(P e) / (1 + p_{n+r}(e)) over single-mode inputs e.
struct TameProbeReport {
  std::string op;
  std::string corpus;
  int grid = 0;
  std::vector<int> modes;
  std::vector<int> orders;
  std::vector<int> degrees{0, 1, 2};
  /// raw[r][n][i]: ratio for degree degrees[r], order orders[n], mode modes[i]
  std::vector<std::vector<std::vector<double>>> raw;
  /// bounded[r][n]: max over the upper half of the modes <= 1.5 x max over the lower half
  std::vector<std::vector<bool>> bounded;
  std::optional<int> inferred_r;
};

/// op: "identity", "derivative", "compose-with-g", "right-inverse-tp" or
/// "cohomological" (golden rotation). Orders must satisfy n + 2 <= 8.
TameProbeReport tame_probe(const std::string& op, int grid, const std::vector<int>& orders = {0, 1, 2, 3},
                           std::uint64_t seed = 0);

Json tame_probe_to_json(const TameProbeReport& r);

}  // namespace difffactor
