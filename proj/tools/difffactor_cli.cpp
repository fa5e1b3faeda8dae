// Command-line front end: generate | decompose | factor | pipeline | verify | nglab | bounds | probe.
#include <chrono>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "difffactor/certificate.hpp"
#include "difffactor/errors.hpp"
#include "difffactor/fiber_decompose.hpp"
#include "difffactor/json_io.hpp"
#include "difffactor/lie_ngates.hpp"
#include "difffactor/pipeline.hpp"
#include "difffactor/tame_probe.hpp"

using namespace difffactor;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitVerify = 2;
constexpr int kExitBasin = 3;

struct Global {
  int grid = 256;
  double tol = 1e-6;
  std::uint64_t seed = 0;
  std::string output;
  std::string report;
};

struct Timer {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(); }
};

void emit(const Global& g, const std::string& text) {
  if (g.output.empty()) std::cout << text;
  else write_text_file(g.output, text);
}

void emit_report(const Global& g, Json report) {
  if (g.report.empty()) return;
  write_text_file(g.report, dump_json(report, 2));
}

TorusDiffeo load_torus(const std::string& path) {
  return any_torus_from_json(parse_json(read_text_file(path), "input '" + path + "'"));
}

Json certificate_summary(const FactorizationCertificate& c) {
  Json s;
  s["status"] = c.status;
  s["commutator_count"] = c.commutator_count;
  s["bound"] = c.bound.value;
  s["residual"] = c.residual;
  Json stages;
  for (const auto& [k, v] : c.stage_residuals) stages[k] = v;
  s["stage_residuals"] = stages;
  return s;
}

Json verification_json(const VerificationReport& r) {
  Json j;
  j["pass"] = r.pass;
  j["residual"] = r.residual;
  j["tolerance"] = r.tolerance;
  j["max_h_distance"] = r.max_h_distance;
  j["commutators"] = r.commutators;
  Json checks = Json::array();
  for (const auto& c : r.checks) checks.push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
  j["checks"] = checks;
  return j;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Commutator factorization of torus diffeomorphisms near the identity"};
  app.require_subcommand(1);
  app.fallthrough();
  Global g;
  app.add_option("--grid", g.grid, "samples per axis (power of two)")->capture_default_str();
  app.add_option("--tol", g.tol, "C^0 tolerance for certificates")->capture_default_str();
  app.add_option("--seed", g.seed, "seed for generated inputs")->capture_default_str();
  app.add_option("--output", g.output, "main output file (default: stdout)");
  app.add_option("--report", g.report, "JSON run report");

  // generate
  double amplitude = 0.02;
  int max_mode = 4;
  auto* gen = app.add_subcommand("generate", "seeded random torus diffeomorphism");
  gen->add_option("--amplitude", amplitude, "C^1 distance to the identity")->capture_default_str();
  gen->add_option("--max-mode", max_mode, "largest wavenumber per axis")->capture_default_str();

  // decompose
  std::string input;
  std::string smoothing = "off";
  auto* dec = app.add_subcommand("decompose", "f = f1 o f2 with f_i fiber preserving");
  dec->add_option("--input", input, "torus diffeomorphism JSON (default: generated from --seed)");
  dec->add_option("--amplitude", amplitude, "amplitude when generating")->capture_default_str();
  dec->add_option("--max-mode", max_mode, "max mode when generating")->capture_default_str();
  dec->add_option("--smoothing", smoothing, "off | geometric:theta0,ratio")->capture_default_str();
  int max_iter = 40;
  dec->add_option("--max-iter", max_iter, "Newton iteration cap")->capture_default_str();

  // factor / pipeline share these
  std::string alpha = "golden", cover = "global", profile = "poly7";
  double eps = 0.1;
  auto add_factor_options = [&](CLI::App* sub) {
    sub->add_option("--alpha", alpha, "golden | decimal rotation number")->capture_default_str();
    sub->add_option("--cover", cover, "global | two-arc | cover JSON")->capture_default_str();
    sub->add_option("--profile", profile, "bump profile: poly7 | smooth")->capture_default_str();
    sub->add_option("--eps", eps, "size of the PSL(2) witnesses h = exp(eps Y)")->capture_default_str();
  };
  auto* fac = app.add_subcommand("factor", "commutator factorization of one fiber-preserving diffeomorphism");
  fac->add_option("--input", input, "fiber diffeomorphism JSON")->required();
  add_factor_options(fac);

  auto* pipe = app.add_subcommand("pipeline", "full factorization with certificate");
  pipe->add_option("--input", input, "torus diffeomorphism JSON (default: generated from --seed)");
  pipe->add_option("--amplitude", amplitude, "amplitude when generating")->capture_default_str();
  pipe->add_option("--max-mode", max_mode, "max mode when generating")->capture_default_str();
  pipe->add_option("--smoothing", smoothing, "off | geometric:theta0,ratio")->capture_default_str();
  add_factor_options(pipe);

  // verify
  std::string cert_path;
  auto* ver = app.add_subcommand("verify", "replay a certificate against its input");
  ver->add_option("--certificate", cert_path, "certificate JSON")->required();
  ver->add_option("--input", input, "torus diffeomorphism JSON")->required();

  // nglab
  std::string algebra = "sl2";
  int cap = 6, trials = 20;
  auto* ng = app.add_subcommand("nglab", "smallest N with K_Y onto, for a finite-dimensional Lie algebra");
  ng->add_option("--algebra", algebra, "sl2 | so3 | sl3 | abelian:d | algebra JSON")->capture_default_str();
  ng->add_option("--ncap,--cap", cap, "largest N tried")->capture_default_str();
  ng->add_option("--trials", trials, "random witnesses per N")->capture_default_str();

  // bounds
  std::string bound_name;
  std::vector<int> bound_c, bound_n;
  auto* bnd = app.add_subcommand("bounds", "commutator bound sum_i C_i N_i");
  bnd->add_option("name", bound_name, "T2 | S3-hopf | compact-group:d | gauge:dimB,dimG");
  bnd->add_option("--C", bound_c, "chart counts C_i")->delimiter(',');
  bnd->add_option("--N", bound_n, "fiber bounds N_i")->delimiter(',');

  // probe
  std::string op = "cohomological";
  std::vector<int> orders{0, 1, 2, 3};
  auto* prb = app.add_subcommand("probe", "empirical tame-estimate table");
  prb->add_option("--operator", op, "identity | derivative | compose-with-g | right-inverse-tp | cohomological")
      ->capture_default_str();
  prb->add_option("--orders", orders, "seminorm orders n")->delimiter(',');

  CLI11_PARSE(app, argc, argv);

  Json report;
  Timer timer;
  auto finish = [&](int code) {
    report["exit_code"] = code;
    report["seconds"] = timer.seconds();
    emit_report(g, report);
    return code;
  };
  auto pipeline_config = [&] {
    PipelineConfig c;
    c.alpha = alpha;
    c.set_cover(cover, parse_profile(profile));
    c.smoothing = SmoothingSchedule::parse(smoothing);
    c.tolerance = g.tol;
    c.eps = eps;
    c.seed = g.seed;
    return c;
  };
  auto input_or_generated = [&] {
    if (!input.empty()) return load_torus(input);
    return generate_random_diffeo(g.seed, amplitude, max_mode, g.grid);
  };

  try {
    if (*gen) {
      report["command"] = "generate";
      auto f = generate_random_diffeo(g.seed, amplitude, max_mode, g.grid);
      report["c1_distance"] = distance_to_identity(f, 1);
      emit(g, dump_json(torus_to_json(f)));
      return finish(kExitOk);
    }
    if (*dec) {
      report["command"] = "decompose";
      auto f = input_or_generated();
      DecomposeOptions opts;
      opts.smoothing = SmoothingSchedule::parse(smoothing);
      opts.max_iterations = max_iter;
      // same share of --tol as the pipeline grants its decomposition stage
      opts.tolerance = std::min(opts.tolerance, PipelineConfig{}.decomposition_share * g.tol);
      opts.validate();
      auto d = decompose(f, opts);
      Json hist = Json::array();
      for (const auto& h : d.report.history) hist.push_back({{"c0", h.c0}, {"c1", h.c1}});
      Json out;
      out["f1"] = fiber_to_json(d.f1);
      out["f2"] = fiber_to_json(d.f2);
      out["report"] = {{"iterations", d.report.iterations}, {"converged", d.report.converged}, {"history", hist}};
      report["iterations"] = d.report.iterations;
      report["history"] = hist;
      emit(g, dump_json(out));
      return finish(kExitOk);
    }
    if (*fac || *pipe) {
      report["command"] = *fac ? "factor" : "pipeline";
      auto config = pipeline_config();
      FactorizationCertificate cert;
      try {
        if (*fac) cert = factor_fiber_diffeo(fiber_from_json(parse_json(read_text_file(input), "input")), config);
        else cert = full_factorization(input_or_generated(), config);
      } catch (const PipelineError& e) {
        report["stage"] = e.stage();
        report["error"] = e.what();
        report["partial"] = certificate_summary(e.partial());
        if (!g.output.empty()) write_text_file(g.output, certificate_to_json(e.partial()));
        std::cerr << "error: " << e.what() << "\n";
        return finish(e.kind() == FailureKind::invalid ? kExitError : kExitBasin);
      }
      report["certificate"] = certificate_summary(cert);
      emit(g, certificate_to_json(cert));
      if (cert.status != "within-bound") {
        std::cerr << "certificate status: " << cert.status << "\n";
        return finish(kExitVerify);
      }
      return finish(kExitOk);
    }
    if (*ver) {
      report["command"] = "verify";
      auto cert = certificate_from_json(read_text_file(cert_path));
      auto f = load_torus(input);
      auto r = verify_certificate(cert, f, g.tol);
      report["verification"] = verification_json(r);
      emit(g, dump_json(verification_json(r), 2));
      return finish(r.pass ? kExitOk : kExitVerify);
    }
    if (*ng) {
      report["command"] = "nglab";
      FiniteLieAlgebra alg = algebra.find(".json") != std::string::npos
                                 ? algebra_from_json(parse_json(read_text_file(algebra), "algebra"))
                                 : FiniteLieAlgebra::builtin(algebra);
      auto res = n_lower_search(alg, cap, trials, g.seed);
      Json out;
      out["algebra"] = alg.name();
      out["dimension"] = alg.dimension();
      out["n"] = res.n ? Json(*res.n) : Json(nullptr);
      out["cap"] = res.cap;
      out["threshold"] = res.threshold;
      Json tr = Json::array();
      for (const auto& t : res.trials)
        tr.push_back({{"n", t.n}, {"label", t.label}, {"rank", t.rank}, {"smallest_ratio", t.smallest_ratio}});
      out["trials"] = tr;
      Json wit = Json::array();
      for (const auto& y : res.witness) wit.push_back(std::vector<double>(y.data(), y.data() + y.size()));
      out["witness"] = wit;
      report["n"] = out["n"];
      emit(g, dump_json(out, 2));
      return finish(kExitOk);
    }
    if (*bnd) {
      report["command"] = "bounds";
      BoundTrace b = bound_name.empty() ? commutator_bound(bound_c, bound_n) : commutator_bound(bound_name);
      Json out{{"name", b.name}, {"bound", b.value}, {"C", b.C}, {"N", b.N}, {"trace", b.trace}};
      report["bound"] = b.value;
      emit(g, dump_json(out, 2));
      return finish(kExitOk);
    }
    if (*prb) {
      report["command"] = "probe";
      auto r = tame_probe(op, g.grid, orders, g.seed);
      report["inferred_r"] = r.inferred_r ? Json(*r.inferred_r) : Json(nullptr);
      emit(g, dump_json(tame_probe_to_json(r), 2));
      return finish(kExitOk);
    }
  } catch (const BasinError& e) {
    report["error"] = e.what();
    std::cerr << "basin error: " << e.what() << "\n";
    return finish(kExitBasin);
  } catch (const ConvergenceError& e) {
    report["error"] = e.what();
    std::cerr << "convergence error: " << e.what() << "\n";
    return finish(kExitBasin);
  } catch (const std::exception& e) {
    report["error"] = e.what();
    std::cerr << "error: " << e.what() << "\n";
    return finish(kExitError);
  }
  return kExitError;
}
