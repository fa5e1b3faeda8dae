#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "difffactor/certificate.hpp"
#include "difffactor/fiber_decompose.hpp"
#include "difffactor/fragmentation.hpp"
#include "difffactor/herman.hpp"

namespace difffactor {

struct PipelineConfig {
  std::string alpha = "golden";  ///< "golden" or a decimal in (0, 1)
  std::string cover_name = "global";
  ChartCover cover = ChartCover::global();
  SmoothingSchedule smoothing;
  double tolerance = 1e-6;
  /// Shares of the tolerance granted to decomposition and to the commutator
  /// stages; the rest is verification margin.
  double decomposition_share = 0.4;
  double commutator_share = 0.4;
  double eps = 0.1;         ///< h1 = exp(eps H), h2 = exp(eps E)
  int flow_steps = 32;      ///< RK4 substeps recorded for every h
  double neighborhood = 0.5;
  std::uint64_t seed = 0;

  void validate() const;
  /// Sets cover and cover_name from "global", "two-arc" or a cover file.
  void set_cover(const std::string& name, BumpProfile profile = BumpProfile::poly7);
};

enum class FailureKind { invalid, basin, convergence };

/// Stage failure with the certificate built so far (remaining work recorded
/// as fiber-preserving pieces, so the partial certificate still replays).
class PipelineError : public Error {
 public:
  PipelineError(std::string stage, FailureKind kind, const std::string& what, FactorizationCertificate partial)
      : Error(stage + ": " + what), stage_(std::move(stage)), kind_(kind), partial_(std::move(partial)) {}
  const std::string& stage() const { return stage_; }
  FailureKind kind() const { return kind_; }
  const FactorizationCertificate& partial() const { return partial_; }

 private:
  std::string stage_;
  FailureKind kind_;
  FactorizationCertificate partial_;
};

/// f = f1 o f2, each f_i read as a loop over its base circle, optionally
/// fragmented over the chart cover, then per piece
/// P = [S, R_alpha] o [G1, H1] o [G2, H2]. Commutators with g = id are dropped.
/// `precomputed` skips the decomposition stage.
FactorizationCertificate full_factorization(const TorusDiffeo& f, const PipelineConfig& config,
                                            const Decomposition* precomputed = nullptr);

/// Same for a single fiber-preserving diffeomorphism (one block).
FactorizationCertificate factor_fiber_diffeo(const FiberDiffeo& f, const PipelineConfig& config);

/// N_Diff(M) <= sum_i C_i N_i with the derivation of each term.
BoundTrace commutator_bound(const std::string& named);
BoundTrace commutator_bound(const std::vector<int>& C, const std::vector<int>& N);

/// Seeded random torus diffeomorphism: independent normal coefficients with
/// weight 1 / (1 + k^2 + l^2) on 0 < max(|k|, |l|) <= max_mode, rescaled so
/// distance_to_identity(f, 1) == amplitude.
TorusDiffeo generate_random_diffeo(std::uint64_t seed, double amplitude, int max_mode, int grid);

/// Admissible amplitude for generate_random_diffeo (decomposition basin).
inline constexpr double kGeneratorBasin = 0.1;

}  // namespace difffactor
