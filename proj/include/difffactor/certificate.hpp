#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "difffactor/diffeo.hpp"
#include "difffactor/fragmentation.hpp"

namespace difffactor {

/// Sparse real trigonometric line: v(y) = Re c_0 + 2 sum_{k > 0} Re(c_k e^{2 pi i k y}).
struct SparseLine {
  std::vector<int> k;
  std::vector<Complex> c;

  bool empty() const { return k.empty(); }
};

/// Spectrum of equispaced samples truncated after the last mode whose tail
/// sum of |weights| exceeds tail_budget, so the sparse line stays within
/// tail_budget of the trigonometric interpolant in C^0. The Nyquist
/// coefficient is stored halved so the formula above reproduces the samples.
SparseLine sparse_line(std::span<const double> samples, double tail_budget = 1e-14);

/// Per-fiber spectra of a fiber diffeomorphism; a missing fiber is the identity.
struct FiberSpectra {
  int axis = 1;
  int grid = 0;
  std::vector<std::pair<int, SparseLine>> fibers;
};

FiberSpectra encode_fibers(const FiberDiffeo& f);

/// h = time-one flow of mu(x) * Y(y) along the fibers, Y a 1D field and mu a
/// profile on the base samples (empty: mu = 1).
struct RecordedExponential {
  SparseLine generator;
  std::vector<double> profile;
  int steps = 0;
};

enum class FactorKind { commutator, fiber };

struct CertificateFactor {
  FactorKind kind = FactorKind::commutator;
  int axis = 1;
  std::string stage;  ///< "herman", "rotation-1", "rotation-2" or "piece"
  int chart = 0;
  FiberSpectra g;     ///< the fiber-preserving piece itself for kind == fiber
  RecordedExponential h;
};

struct BoundTrace {
  int value = 0;
  std::string name;
  std::vector<int> C;
  std::vector<int> N;
  std::vector<std::string> trace;
};

struct CertificateConfig {
  std::string alpha_text = "golden";
  double alpha = 0.0;
  std::string cover_name = "global";
  std::vector<Chart> charts;
  std::string profile = "poly7";
  std::string smoothing = "off";
  double tolerance = 1e-6;
  double decomposition_tolerance = 0.0;
  double commutator_tolerance = 0.0;
  double eps = 0.1;
  int flow_steps = 32;
  double neighborhood = 0.5;
  std::uint64_t seed = 0;
};

struct FactorizationCertificate {
  int grid = 0;
  std::string digest;
  std::vector<CertificateFactor> factors;
  std::vector<std::pair<std::string, double>> stage_residuals;
  double residual = 0.0;  ///< C^0 replay residual against the input
  int commutator_count = 0;
  BoundTrace bound;
  std::string status;     ///< "within-bound", "exceeds-bound", "residual-exceeded" or "partial"
  CertificateConfig config;
};

/// FNV-1a over the grid and the raw sample bits of u and w.
std::string input_digest(const TorusDiffeo& f);

std::string certificate_to_json(const FactorizationCertificate& c, int indent = -1);
/// Throws FormatError naming the offending entry.
FactorizationCertificate certificate_from_json(const std::string& text);

/// Replays the ordered product F of the factors pointwise, axis-1 block
/// first, and returns the C^0 gap to f measured as f o F2^{-1} vs F1 on the
/// grid. Throws FormatError if the blocks are out of order or grids differ.
double replay_residual(const FactorizationCertificate& c, const TorusDiffeo& f);

struct VerificationCheck {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct VerificationReport {
  bool pass = false;
  double residual = 0.0;
  double tolerance = 0.0;
  double max_h_distance = 0.0;
  int commutators = 0;
  std::vector<VerificationCheck> checks;
};

VerificationReport verify_certificate(const FactorizationCertificate& c, const TorusDiffeo& f, double tol);

}  // namespace difffactor
