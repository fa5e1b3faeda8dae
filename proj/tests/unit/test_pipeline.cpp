#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "difffactor/certificate.hpp"
#include "difffactor/errors.hpp"
#include "difffactor/json_io.hpp"
#include "difffactor/pipeline.hpp"
#include "difffactor/tame_probe.hpp"

using namespace difffactor;

namespace {

constexpr double kPi = std::numbers::pi;

FiberDiffeo small_axis1(int n, double amp) {
  return FiberDiffeo(1, PeriodicField::sample(n, [amp](double x, double y) {
    return amp * (0.6 * std::sin(2 * kPi * (y + x)) + 0.3 * std::cos(2 * kPi * (2 * y - x)) + 0.4 * std::sin(2 * kPi * x));
  }));
}

double max_gap(const PeriodicField& a, const PeriodicField& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST_CASE("JSON numbers carry 17 significant digits and round-trip") {
  CHECK(dump_json(Json(0.1)) == "0.10000000000000001");
  CHECK(dump_json(Json(3.0)) == "3.0");
  CHECK(dump_json(Json(7)) == "7");
  CHECK(dump_json(Json(std::nan(""))) == "null");
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<> u(-1e3, 1e3);
  for (int i = 0; i < 1000; ++i) {
    double v = u(rng) * std::pow(10.0, int(i % 40) - 20);
    CHECK(parse_json(dump_json(Json(v)), "t").get<double>() == v);
  }
  CHECK_THROWS_AS(parse_json("{\"a\": ", "t"), FormatError);
}

TEST_CASE("field and diffeo JSON formats") {
  auto f = generate_random_diffeo(2, 0.02, 2, 16);
  auto back = torus_from_json(parse_json(dump_json(torus_to_json(f)), "t"));
  CHECK(max_gap(back.u(), f.u()) == 0.0);
  CHECK(max_gap(back.w(), f.w()) == 0.0);
  auto fib = small_axis1(16, 0.01);
  auto fb = fiber_from_json(parse_json(dump_json(fiber_to_json(fib)), "t"));
  CHECK(fb.axis() == 1);
  CHECK(max_gap(fb.displacement(), fib.displacement()) == 0.0);
  auto line = PeriodicField::sample(8, [](double x) { return x * (1 - x); });
  CHECK(max_gap(field_from_json(field_to_json(line)), line) == 0.0);

  Json text = parse_json(dump_json(torus_to_json(f)), "t");
  CHECK(text["kind"] == "torus");
  CHECK(text["displacements"]["u"]["convention"] == "period-1");
  CHECK(text["displacements"]["u"]["values"].size() == 16);
  CHECK(text["displacements"]["u"]["values"][3][5].get<double>() == f.u().at(3, 5));
  CHECK(fiber_to_json(fib)["kind"] == "fiber1");
  auto circ = CircleDiffeo(line * 0.1);
  CHECK(max_gap(circle_from_json(circle_to_json(circ)).displacement(), circ.displacement()) == 0.0);
  CHECK(max_gap(any_torus_from_json(fiber_to_json(fib)).w(), fib.displacement()) == 0.0);

  Json bad = torus_to_json(f);
  bad["displacements"].erase("w");
  CHECK_THROWS_AS(torus_from_json(bad), FormatError);
  bad = torus_to_json(f);
  bad["displacements"]["u"]["values"][2].erase(0);
  CHECK_THROWS_AS(torus_from_json(bad), FormatError);
  bad = torus_to_json(f);
  bad["displacements"]["u"]["convention"] = "period-2pi";
  CHECK_THROWS_AS(torus_from_json(bad), FormatError);
  bad = torus_to_json(f);
  bad["grid"] = 12;
  CHECK_THROWS_AS(torus_from_json(bad), FormatError);
  bad = torus_to_json(f);
  bad["kind"] = "circle";
  CHECK_THROWS_AS(torus_from_json(bad), FormatError);
  CHECK_THROWS_AS(fiber_from_json(torus_to_json(f)), FormatError);
}

TEST_CASE("cover and algebra JSON") {
  auto c = cover_from_json(parse_json(R"({"charts": [{"V": [-0.3, 0.3], "U": [-0.35, 0.35]},
                                                     {"core": [0.25, 0.75], "V": [0.2, 0.8], "U": [0.15, 0.85]}]})", "t"));
  REQUIRE(c.size() == 2);
  CHECK(c.charts()[0].core.lo == doctest::Approx(-0.27));
  CHECK(c.charts()[0].core.hi == doctest::Approx(0.27));
  CHECK(c.charts()[0].outer.hi == doctest::Approx(0.35));
  CHECK(c.charts()[1].core.lo == 0.25);
  CHECK(c.profile() == BumpProfile::poly7);
  auto again = cover_from_json(cover_to_json(c));
  CHECK(again.charts()[1].outer.hi == 0.85);
  CHECK(again.charts()[1].core.hi == 0.75);
  // cores [0.03, 0.47] miss most of the circle
  CHECK_THROWS_AS(cover_from_json(parse_json(R"({"charts": [{"V": [0, 0.5], "U": [-0.1, 0.6]}]})", "t")), InvalidArgument);
  // U must contain V
  CHECK_THROWS_AS(cover_from_json(parse_json(R"({"charts": [{"V": [-0.3, 0.3], "U": [-0.2, 0.2]}]})", "t")), InvalidArgument);
  CHECK_THROWS_AS(cover_from_json(parse_json(R"({"charts": [{"V": [0, 0.4]}]})", "t")), FormatError);

  auto sl2 = FiniteLieAlgebra::sl2();
  Json j;
  j["name"] = "sl2-file";
  j["dimension"] = 3;
  Json cs = Json::array();
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      for (int k = 0; k < 3; ++k)
        if (sl2.c(a, b, k) != 0.0) cs.push_back({a, b, k, sl2.c(a, b, k)});
  j["constants"] = cs;
  auto alg = algebra_from_json(j);
  CHECK(alg.constants() == sl2.constants());
  CHECK(algebra_from_json(Json("so3")).dimension() == 3);
  j["constants"].push_back({0, 0, 1, 1.0});  // [e0, e0] != 0 breaks antisymmetry
  CHECK_THROWS_AS(algebra_from_json(j), InvalidArgument);
}

TEST_CASE("sparse lines reproduce their samples") {
  std::vector<double> nyq(16);
  for (int j = 0; j < 16; ++j) nyq[j] = (j % 2 ? -0.25 : 0.25) + 0.1 * std::sin(2 * kPi * 3 * j / 16.0);
  auto s = sparse_line(nyq);
  REQUIRE(s.k.back() == 8);
  for (int j = 0; j < 16; ++j) {
    double y = j / 16.0, v = 0;
    for (std::size_t i = 0; i < s.k.size(); ++i)
      v += (s.k[i] == 0 ? 1.0 : 2.0) * (s.c[i] * std::exp(std::complex<double>(0, 2 * kPi * s.k[i] * y))).real();
    CHECK(std::abs(v - nyq[j]) <= 1e-15);
  }
  std::vector<double> smooth(64);
  for (int j = 0; j < 64; ++j) smooth[j] = 0.01 * std::exp(std::cos(2 * kPi * j / 64.0));
  auto t = sparse_line(smooth);
  CHECK(t.k.size() < 20);
  CHECK(sparse_line(std::vector<double>(32, 0.0)).empty());
}

TEST_CASE("random diffeomorphism generator") {
  auto id = generate_random_diffeo(5, 0.0, 2, 32);
  CHECK(seminorm(id.u(), 0) == 0.0);
  auto a = generate_random_diffeo(5, 0.02, 4, 64);
  auto b = generate_random_diffeo(5, 0.02, 4, 64);
  CHECK(std::equal(a.u().values().begin(), a.u().values().end(), b.u().values().begin()));
  CHECK(std::equal(a.w().values().begin(), a.w().values().end(), b.w().values().begin()));
  CHECK(distance_to_identity(a, 1) == doctest::Approx(0.02).epsilon(1e-12));
  auto a2 = generate_random_diffeo(5, 0.04, 4, 64);
  CHECK(std::abs(distance_to_identity(a2, 1) / distance_to_identity(a, 1) - 2.0) <= 1e-12);
  CHECK(a.u().bandwidth() <= 4);
  CHECK_THROWS_AS(generate_random_diffeo(5, 0.2, 4, 64), BasinError);
  CHECK_THROWS_AS(generate_random_diffeo(5, 0.02, 9, 64), InvalidArgument);
}

TEST_CASE("commutator bounds") {
  CHECK(commutator_bound("T2").value == 6);
  CHECK(commutator_bound("S3-hopf").value == 18);
  for (int d = 1; d <= 8; ++d) CHECK(commutator_bound("compact-group:" + std::to_string(d)).value == 3 * d * d);
  for (int b = 1; b <= 4; ++b)
    for (int g = 1; g <= 10; ++g)
      CHECK(commutator_bound("gauge:" + std::to_string(b) + "," + std::to_string(g)).value == (b + 1) * g);
  CHECK(commutator_bound({1, 2, 3}, {3, 3, 1}).value == 12);
  CHECK(!commutator_bound("S3-hopf").trace.empty());
  CHECK_THROWS_AS(commutator_bound("S5"), InvalidArgument);
  CHECK_THROWS_AS(commutator_bound("gauge:2"), InvalidArgument);
  CHECK_THROWS_AS(commutator_bound("compact-group:0"), InvalidArgument);
  CHECK_THROWS_AS(commutator_bound({1}, {3, 3}), InvalidArgument);
}

TEST_CASE("pipeline on the identity") {
  PipelineConfig cfg;
  auto id = TorusDiffeo::identity(32);
  auto cert = full_factorization(id, cfg);
  CHECK(cert.factors.empty());
  CHECK(cert.commutator_count == 0);
  CHECK(cert.residual == 0.0);
  CHECK(cert.status == "within-bound");
  auto rep = verify_certificate(certificate_from_json(certificate_to_json(cert)), id, 1e-6);
  CHECK(rep.pass);
  CHECK(rep.residual == 0.0);
}

TEST_CASE("single fiber-preserving factor needs at most three commutators") {
  PipelineConfig cfg;
  auto f = small_axis1(64, 0.002);
  auto cert = factor_fiber_diffeo(f, cfg);
  CHECK(cert.commutator_count <= 3);
  CHECK(cert.bound.value == 3);
  CHECK(cert.residual <= 1e-9);
  CHECK(verify_certificate(cert, f.to_torus(), 1e-6).pass);
  auto whole = full_factorization(f.to_torus(), cfg);
  CHECK(whole.residual <= 1e-9);
  CHECK(whole.commutator_count <= 6);
}

TEST_CASE("end to end on a grid-256 corpus diffeomorphism") {
  auto f = generate_random_diffeo(11, 0.02, 4, 256);
  PipelineConfig cfg;
  auto cert = full_factorization(f, cfg);
  CHECK(cert.commutator_count <= 6);
  CHECK(cert.residual <= 1e-5);
  CHECK(cert.status == "within-bound");
  auto text = certificate_to_json(cert);
  auto rep = verify_certificate(certificate_from_json(text), f, 1e-6);
  CHECK(rep.pass);
  CHECK(std::abs(rep.residual - cert.residual) <= 1e-12);
  CHECK(rep.max_h_distance <= cfg.neighborhood);
}

TEST_CASE("certificates: verification, tampering, determinism") {
  auto f = generate_random_diffeo(3, 0.02, 3, 64);
  PipelineConfig cfg;
  cfg.seed = 42;
  auto cert = full_factorization(f, cfg);
  auto text = certificate_to_json(cert);
  CHECK(text == certificate_to_json(full_factorization(f, cfg)));
  auto parsed = certificate_from_json(text);
  CHECK(certificate_to_json(parsed) == text);
  auto rep = verify_certificate(parsed, f, 1e-6);
  CHECK(rep.pass);
  for (const auto& c : rep.checks) CHECK_MESSAGE(c.pass, c.name << ": " << c.detail);

  SUBCASE("deleted factor") {
    auto cut = parsed;
    cut.factors.erase(cut.factors.begin());
    auto bad = verify_certificate(cut, f, 1e-6);
    CHECK_FALSE(bad.pass);
    CHECK(bad.residual > 1e3 * 1e-6);
  }
  SUBCASE("different input") {
    auto other = generate_random_diffeo(4, 0.02, 3, 64);
    auto bad = verify_certificate(parsed, other, 1e-6);
    CHECK_FALSE(bad.pass);
  }
  SUBCASE("block order") {
    auto swapped = parsed;
    std::reverse(swapped.factors.begin(), swapped.factors.end());
    CHECK_THROWS_AS(verify_certificate(swapped, f, 1e-6), FormatError);
  }
  SUBCASE("malformed text") {
    CHECK_THROWS_AS(certificate_from_json(text.substr(0, text.size() / 2)), FormatError);
    auto j = parse_json(text, "t");
    j["factors"][0]["kind"] = "braid";
    CHECK_THROWS_AS(certificate_from_json(dump_json(j)), FormatError);
    j = parse_json(text, "t");
    j.erase("bound");
    CHECK_THROWS_AS(certificate_from_json(dump_json(j)), FormatError);
    j = parse_json(text, "t");
    j["factors"][0]["g"]["fibers"][0]["modes"][0][0] = 1000;
    CHECK_THROWS_AS(certificate_from_json(dump_json(j)), FormatError);
  }
  SUBCASE("grid mismatch") {
    auto bad = verify_certificate(parsed, generate_random_diffeo(3, 0.02, 3, 32), 1e-6);
    CHECK_FALSE(bad.pass);
  }
}

TEST_CASE("two-arc cover: more commutators, supports inside charts") {
  auto f = generate_random_diffeo(8, 0.02, 3, 64);
  PipelineConfig global;
  PipelineConfig two;
  two.set_cover("two-arc");
  auto a = full_factorization(f, global);
  auto b = full_factorization(f, two);
  CHECK(b.commutator_count >= a.commutator_count);
  CHECK(b.commutator_count <= 12);
  CHECK(b.bound.value == 12);
  CHECK(b.residual <= 1e-6);
  auto cover = ChartCover::two_arc();
  for (const auto& fac : b.factors) {
    const Arc& v = cover.charts()[fac.chart].support;
    const Arc& w = cover.charts()[fac.chart].outer;
    for (const auto& [base, line] : fac.g.fibers) CHECK(v.contains(double(base) / 64));
    REQUIRE(fac.h.profile.size() == 64);
    for (int i = 0; i < 64; ++i)
      if (!w.contains(i / 64.0)) CHECK(fac.h.profile[i] == 0.0);
  }
  CHECK(verify_certificate(b, f, 1e-6).pass);
}

TEST_CASE("stage errors carry the stage and a replayable partial certificate") {
  PipelineConfig cfg;
  auto far = generate_random_diffeo(1, 0.099, 2, 32);
  auto scaled = TorusDiffeo(far.u() * 1.5, far.w() * 1.5);
  try {
    full_factorization(scaled, cfg);
    FAIL("expected a PipelineError");
  } catch (const PipelineError& e) {
    CHECK(e.stage() == "decompose");
    CHECK(e.kind() == FailureKind::basin);
    CHECK(e.partial().factors.empty());
    CHECK(e.partial().status == "partial");
  }

  // inside the decomposition basin but outside the Herman basin
  auto f = generate_random_diffeo(2, 0.09, 2, 64);
  try {
    full_factorization(f, cfg);
    FAIL("expected a PipelineError");
  } catch (const PipelineError& e) {
    CHECK(e.stage().rfind("herman:", 0) == 0);
    CHECK(e.kind() == FailureKind::basin);
    CHECK(e.partial().status == "partial");
    CHECK(replay_residual(e.partial(), f) <= 1e-8);
  }
  PipelineConfig bad;
  bad.tolerance = -1;
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
  bad = PipelineConfig{};
  bad.decomposition_share = 0.8;
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
  CHECK_THROWS_AS(full_factorization(TorusDiffeo::identity(32), PipelineConfig{.alpha = "0.5"}), InvalidArgument);
}

TEST_CASE("tame probe") {
  auto id = tame_probe("identity", 64);
  REQUIRE(id.inferred_r);
  CHECK(*id.inferred_r == 0);
  for (const auto& by_n : id.raw[0])
    for (double v : by_n) CHECK(v <= 1.0);

  auto d = tame_probe("derivative", 64);
  REQUIRE(d.inferred_r);
  CHECK(*d.inferred_r == 1);
  for (bool b : d.bounded[0]) CHECK_FALSE(b);

  auto c = tame_probe("cohomological", 64, {0, 1});
  for (const auto& by_r : c.raw)
    for (const auto& by_n : by_r)
      for (double v : by_n) CHECK(std::isfinite(v));
  auto j = tame_probe_to_json(c);
  CHECK(j["table"].size() == 6);

  auto g = tame_probe("compose-with-g", 32, {0, 1});
  CHECK(g.modes.size() == 4);
  auto r = tame_probe("right-inverse-tp", 32, {0});
  CHECK(std::isfinite(r.raw[0][0][0]));
  CHECK_THROWS_AS(tame_probe("laplacian", 32), InvalidArgument);
  CHECK_THROWS_AS(tame_probe("identity", 32, {7}), InvalidArgument);
}
