#include "difffactor/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "difffactor/errors.hpp"
#include "difffactor/json_io.hpp"
#include "difffactor/lie_ngates.hpp"

namespace difffactor {

namespace {

struct Piece {
  FiberDiffeo map;
  int chart;
};

std::string label(const std::string& stage, int axis, int chart) {
  return stage + ":axis" + std::to_string(axis) + ":chart" + std::to_string(chart);
}

FailureKind classify(const std::exception& e) {
  if (dynamic_cast<const BasinError*>(&e)) return FailureKind::basin;
  if (dynamic_cast<const ConvergenceError*>(&e)) return FailureKind::convergence;
  return FailureKind::invalid;
}

CertificateFactor fiber_factor(const Piece& p) {
  CertificateFactor f;
  f.kind = FactorKind::fiber;
  f.axis = p.map.axis();
  f.stage = "piece";
  f.chart = p.chart;
  f.g = encode_fibers(p.map);
  return f;
}

BoundTrace cover_bound(const PipelineConfig& config, int blocks) {
  const int c = int(config.cover.size());
  if (blocks == 2 && config.cover.is_global()) return commutator_bound("T2");
  BoundTrace b = commutator_bound(std::vector<int>(blocks, c), std::vector<int>(blocks, 3));
  b.name = blocks == 2 ? "T2:" + config.cover_name : "fiber:" + config.cover_name;
  b.trace.insert(b.trace.begin(), "C_i = " + std::to_string(c) + " charts in cover '" + config.cover_name +
                                      "'; N_Diff(S^1) = 3 (one Herman commutator, two rotation commutators)");
  return b;
}

FactorizationCertificate skeleton(const TorusDiffeo& f, const PipelineConfig& config, const DiophantineRotation& alpha,
                                  int blocks) {
  FactorizationCertificate c;
  c.grid = f.grid();
  c.digest = input_digest(f);
  c.config.alpha_text = config.alpha;
  c.config.alpha = alpha.alpha();
  c.config.cover_name = config.cover_name;
  c.config.charts = config.cover.charts();
  c.config.profile = to_string(config.cover.profile());
  c.config.smoothing = config.smoothing.to_string();
  c.config.tolerance = config.tolerance;
  c.config.decomposition_tolerance = config.decomposition_share * config.tolerance;
  c.config.commutator_tolerance = config.commutator_share * config.tolerance;
  c.config.eps = config.eps;
  c.config.flow_steps = config.flow_steps;
  c.config.neighborhood = config.neighborhood;
  c.config.seed = config.seed;
  c.bound = cover_bound(config, blocks);
  c.status = "partial";
  return c;
}

[[noreturn]] void fail(const std::string& stage, const std::exception& e, FactorizationCertificate partial,
                       const std::vector<Piece>& remaining, std::size_t from) {
  for (std::size_t i = from; i < remaining.size(); ++i)
    if (!remaining[i].map.is_identity()) partial.factors.push_back(fiber_factor(remaining[i]));
  partial.commutator_count = int(std::count_if(partial.factors.begin(), partial.factors.end(),
                                               [](const auto& f) { return f.kind == FactorKind::commutator; }));
  partial.status = "partial";
  throw PipelineError(stage, classify(e), e.what(), std::move(partial));
}

// Commutator stages for every piece, then the replay.
FactorizationCertificate factor_pieces(const TorusDiffeo& f, const std::vector<Piece>& pieces,
                                       const PipelineConfig& config, const DiophantineRotation& alpha,
                                       FactorizationCertificate cert) {
  const int n = f.grid();
  const double budget = config.commutator_share * config.tolerance;
  HermanOptions herman;
  herman.filter_loops = config.cover.is_global();
  // R_alpha is recorded as the flow of the constant alpha - round(alpha), the
  // representative closest to the identity.
  const double shift = alpha.alpha() - std::round(alpha.alpha());
  Eigen::Matrix2d eps_h{{config.eps, 0.0}, {0.0, -config.eps}};
  Eigen::Matrix2d eps_e{{0.0, config.eps}, {0.0, 0.0}};
  const PeriodicField gen_h = moebius_generator(eps_h, n), gen_e = moebius_generator(eps_e, n);
  const char* names[3] = {"herman", "rotation-1", "rotation-2"};

  for (std::size_t i = 0; i < pieces.size(); ++i) {
    const Piece& p = pieces[i];
    if (p.map.is_identity()) continue;
    const int axis = p.map.axis();
    std::string stage = label("herman", axis, p.chart);
    try {
      auto loop = factor_loop(p.map, alpha, herman);
      cert.stage_residuals.emplace_back(stage, loop.residual);
      stage = label("rotation", axis, p.chart);
      auto rot = rotation_loop_commutators(loop.beta, config.eps, axis);
      cert.stage_residuals.emplace_back(stage, rot.residual);
      if (loop.residual + rot.residual > budget) {
        std::ostringstream msg;
        msg << "commutator residual " << loop.residual + rot.residual << " exceeds the budget " << budget;
        throw ConvergenceError(msg.str(), {loop.residual, rot.residual});
      }
      stage = label("localize", axis, p.chart);
      std::vector<CommutatorWitness> witness{{PeriodicField::constant(1, n, shift), loop.s},
                                             {gen_h, rot.g1},
                                             {gen_e, rot.g2}};
      auto loc = localize_commutator_data(p.map, config.cover, std::size_t(p.chart), witness, config.flow_steps);
      for (std::size_t j = 0; j < loc.size(); ++j) {
        if (loc[j].g.is_identity()) continue;
        CertificateFactor fac;
        fac.kind = FactorKind::commutator;
        fac.axis = axis;
        fac.stage = names[j];
        fac.chart = p.chart;
        fac.g = encode_fibers(loc[j].g);
        fac.h.generator = sparse_line(loc[j].generator.values());
        const auto mu = loc[j].profile.values();
        if (std::any_of(mu.begin(), mu.end(), [](double m) { return m != 1.0; })) fac.h.profile.assign(mu.begin(), mu.end());
        fac.h.steps = loc[j].steps;
        cert.factors.push_back(std::move(fac));
      }
    } catch (const Error& e) {
      fail(stage, e, std::move(cert), pieces, i);
    }
  }
  cert.commutator_count = int(cert.factors.size());
  try {
    cert.residual = replay_residual(cert, f);
  } catch (const Error& e) {
    fail("replay", e, std::move(cert), {}, 0);
  }
  if (!(cert.residual <= config.tolerance)) cert.status = "residual-exceeded";
  else if (cert.commutator_count > cert.bound.value) cert.status = "exceeds-bound";
  else cert.status = "within-bound";
  return cert;
}

std::vector<Piece> split(const FiberDiffeo& f, const ChartCover& cover) {
  std::vector<Piece> out;
  auto parts = fragment(f, cover);
  for (std::size_t i = 0; i < parts.size(); ++i) out.push_back({std::move(parts[i]), int(i)});
  return out;
}

DiophantineRotation rotation_for(const PipelineConfig& config, int grid) {
  return DiophantineRotation::parse(config.alpha, std::max(512, grid / 2));
}

}  // namespace

void PipelineConfig::validate() const {
  if (!(tolerance > 0.0) || !std::isfinite(tolerance)) throw InvalidArgument("pipeline: tolerance must be positive");
  if (!(decomposition_share > 0.0) || !(commutator_share > 0.0) || decomposition_share + commutator_share > 1.0)
    throw InvalidArgument("pipeline: tolerance shares must be positive and sum to at most 1");
  if (!(eps > 0.0) || !std::isfinite(eps)) throw InvalidArgument("pipeline: eps must be positive");
  if (flow_steps < 1) throw InvalidArgument("pipeline: flow_steps must be at least 1");
  if (!(neighborhood > 0.0)) throw InvalidArgument("pipeline: neighborhood bound must be positive");
}

void PipelineConfig::set_cover(const std::string& name, BumpProfile profile) {
  cover = cover_from_name(name, profile);
  cover_name = name;
}

FactorizationCertificate full_factorization(const TorusDiffeo& f, const PipelineConfig& config,
                                            const Decomposition* precomputed) {
  config.validate();
  const auto alpha = rotation_for(config, f.grid());
  FactorizationCertificate cert = skeleton(f, config, alpha, 2);

  std::optional<Decomposition> own;
  if (!precomputed) {
    DecomposeOptions opts;
    opts.tolerance = std::min(opts.tolerance, config.decomposition_share * config.tolerance);
    opts.smoothing = config.smoothing;
    try {
      own = decompose(f, opts);
    } catch (const Error& e) {
      fail("decompose", e, std::move(cert), {}, 0);
    }
    precomputed = &*own;
  }
  if (precomputed->f1.grid() != f.grid())
    throw InvalidArgument("full_factorization: precomputed decomposition has the wrong grid");
  const double dec = precomputed->report.history.empty() ? 0.0 : precomputed->report.history.back().c0;
  cert.stage_residuals.emplace_back("decomposition", dec);

  std::vector<Piece> pieces;
  for (const FiberDiffeo* fi : {&precomputed->f1, &precomputed->f2}) {
    try {
      auto part = split(*fi, config.cover);
      pieces.insert(pieces.end(), part.begin(), part.end());
    } catch (const Error& e) {
      std::vector<Piece> rest{{precomputed->f1, 0}, {precomputed->f2, 0}};
      fail(label("fragment", fi->axis(), 0), e, std::move(cert), rest, 0);
    }
  }
  if (dec > config.decomposition_share * config.tolerance) {
    std::ostringstream msg;
    msg << "decomposition residual " << dec << " exceeds the budget " << config.decomposition_share * config.tolerance;
    fail("decompose", ConvergenceError(msg.str(), {dec}), std::move(cert), pieces, 0);
  }
  return factor_pieces(f, pieces, config, alpha, std::move(cert));
}

FactorizationCertificate factor_fiber_diffeo(const FiberDiffeo& f, const PipelineConfig& config) {
  config.validate();
  const auto alpha = rotation_for(config, f.grid());
  TorusDiffeo torus = f.to_torus();
  FactorizationCertificate cert = skeleton(torus, config, alpha, 1);
  std::vector<Piece> pieces;
  try {
    pieces = split(f, config.cover);
  } catch (const Error& e) {
    fail(label("fragment", f.axis(), 0), e, std::move(cert), {{f, 0}}, 0);
  }
  return factor_pieces(torus, pieces, config, alpha, std::move(cert));
}

BoundTrace commutator_bound(const std::vector<int>& C, const std::vector<int>& N) {
  if (C.empty() || C.size() != N.size()) throw InvalidArgument("bounds: C and N lists must be non-empty and of equal length");
  BoundTrace b;
  b.name = "custom";
  b.C = C;
  b.N = N;
  for (std::size_t i = 0; i < C.size(); ++i) {
    if (C[i] < 1 || N[i] < 1) throw InvalidArgument("bounds: C_i and N_i must be positive integers");
    b.value += C[i] * N[i];
    b.trace.push_back("fibration " + std::to_string(i + 1) + ": C = " + std::to_string(C[i]) +
                      ", N = " + std::to_string(N[i]) + ", term " + std::to_string(C[i] * N[i]));
  }
  b.trace.push_back("bound = sum_i C_i N_i = " + std::to_string(b.value));
  return b;
}

BoundTrace commutator_bound(const std::string& named) {
  auto parse_ints = [&](const std::string& text) {
    std::vector<int> out;
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      std::size_t used = 0;
      int v = 0;
      try {
        v = std::stoi(tok, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != tok.size() || v < 1) throw InvalidArgument("bounds: expected positive integers in '" + named + "'");
      out.push_back(v);
    }
    return out;
  };
  BoundTrace b;
  std::vector<std::string> head;
  if (named == "T2") {
    b = commutator_bound({1, 1}, {3, 3});
    head = {"T^2 with the two coordinate projections T^2 -> S^1 (k = 2); their vertical distributions span TT^2",
            "each bundle is globally trivial: C = 1",
            "N_Diff(S^1) <= 3: one commutator with a Diophantine rotation plus two PSL(2,R) commutators for the rotation"};
  } else if (named == "S3-hopf") {
    b = commutator_bound({2, 2, 2}, {3, 3, 3});
    head = {"S^3 with three perturbed Hopf fibrations S^1 -> S^3 -> S^2 (k = 3) spanning TS^3",
            "the base S^2 is covered by 2 sets, each a disjoint union of disks: C = 2 (general estimate C <= dim B + 1 = 3)",
            "N_Diff(S^1) <= 3"};
  } else if (named.rfind("compact-group:", 0) == 0) {
    auto v = parse_ints(named.substr(14));
    if (v.size() != 1) throw InvalidArgument("bounds: expected compact-group:d");
    int d = v[0];
    b = commutator_bound(std::vector<int>(d, d), std::vector<int>(d, 3));
    head = {"compact Lie group of dimension d = " + std::to_string(d) + " with d circle-bundle structures spanning TG",
            "C <= dim B + 1 = (d - 1) + 1 = " + std::to_string(d), "N_Diff(S^1) <= 3", "bound = 3 d^2"};
  } else if (named.rfind("gauge:", 0) == 0) {
    auto v = parse_ints(named.substr(6));
    if (v.size() != 2) throw InvalidArgument("bounds: expected gauge:dimB,dimG");
    b = commutator_bound({v[0] + 1}, {v[1]});
    head = {"gauge group = sections of the associated bundle of groups over B (k = 1)",
            "C_E <= dim B + 1 = " + std::to_string(v[0] + 1) + " (cover of B by dim B + 1 disjoint unions of disks)",
            "N_G <= dim G = " + std::to_string(v[1])};
  } else {
    throw InvalidArgument("bounds: unknown name '" + named + "' (T2, S3-hopf, compact-group:d, gauge:dimB,dimG)");
  }
  b.name = named;
  b.trace.insert(b.trace.begin(), head.begin(), head.end());
  return b;
}

TorusDiffeo generate_random_diffeo(std::uint64_t seed, double amplitude, int max_mode, int grid) {
  if (!valid_grid(grid)) throw InvalidArgument("generate: grid must be a power of two >= 8");
  if (!(amplitude >= 0.0) || !(amplitude < kGeneratorBasin)) {
    std::ostringstream msg;
    msg << "generate: amplitude " << amplitude << " outside the basin [0, " << kGeneratorBasin << ")";
    throw BasinError(msg.str());
  }
  if (max_mode < 1 || max_mode > grid / 8)
    throw InvalidArgument("generate: max_mode must be in [1, grid/8] = [1, " + std::to_string(grid / 8) + "]");
  if (amplitude == 0.0) return TorusDiffeo::identity(grid);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::vector<Complex> cu(std::size_t(grid) * grid), cw(cu.size());
  auto slot = [&](int k, int l) { return std::size_t((k + grid) % grid) * grid + std::size_t((l + grid) % grid); };
  for (int k = 0; k <= max_mode; ++k)
    for (int l = -max_mode; l <= max_mode; ++l) {
      if (k == 0 && l <= 0) continue;
      double weight = 1.0 / (1.0 + k * k + l * l);
      for (auto* c : {&cu, &cw}) {
        double a = normal(rng) * weight, b = normal(rng) * weight;
        (*c)[slot(k, l)] = Complex(a, -b) * 0.5;
        (*c)[slot(-k, -l)] = Complex(a, b) * 0.5;
      }
    }
  PeriodicField u = PeriodicField::from_spectrum(2, grid, cu);
  PeriodicField w = PeriodicField::from_spectrum(2, grid, cw);
  double size = std::max(seminorm(u, 1), seminorm(w, 1));
  double scale = amplitude / size;
  return TorusDiffeo(u * scale, w * scale);
}

}  // namespace difffactor
