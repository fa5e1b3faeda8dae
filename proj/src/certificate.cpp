#include "difffactor/certificate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>

#include "difffactor/errors.hpp"
#include "difffactor/json_io.hpp"

namespace difffactor {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Dense coefficient table for fast evaluation of a SparseLine.
struct Line {
  std::vector<Complex> c;  // index = wavenumber, weights folded in

  explicit Line(const SparseLine& s) {
    int kmax = s.k.empty() ? -1 : *std::max_element(s.k.begin(), s.k.end());
    c.assign(std::size_t(kmax + 1), Complex(0.0, 0.0));
    for (std::size_t i = 0; i < s.k.size(); ++i) c[s.k[i]] += s.k[i] == 0 ? Complex(s.c[i].real(), 0.0) : 2.0 * s.c[i];
  }
  bool zero() const { return c.empty(); }

  double value(double y) const {
    if (c.empty()) return 0.0;
    const Complex z = std::polar(1.0, kTwoPi * y);
    Complex p(1.0, 0.0);
    double v = 0.0;
    for (const auto& ck : c) {
      v += ck.real() * p.real() - ck.imag() * p.imag();
      p *= z;
    }
    return v;
  }

  // value and derivative
  std::pair<double, double> jet(double y) const {
    if (c.empty()) return {0.0, 0.0};
    const Complex z = std::polar(1.0, kTwoPi * y);
    Complex p(1.0, 0.0);
    double v = 0.0, d = 0.0;
    for (std::size_t k = 0; k < c.size(); ++k) {
      Complex t = c[k] * p;
      v += t.real();
      d -= kTwoPi * double(k) * t.imag();
      p *= z;
    }
    return {v, d};
  }
};

// Solves z + d(z) = y by Newton; NaN if the map is not monotone there.
double invert_line(const Line& g, double y) {
  if (g.zero()) return y;
  double z = y - g.value(y);
  for (int it = 0; it < 60; ++it) {
    auto [v, d] = g.jet(z);
    double slope = 1.0 + d;
    if (!(slope > 0.0)) return std::numeric_limits<double>::quiet_NaN();
    double step = (z + v - y) / slope;
    z -= step;
    if (std::abs(step) <= 1e-15 * (1.0 + std::abs(z))) break;
  }
  return z;
}

double flow_line(const Line& y_field, double mu, int steps, double direction, double y) {
  if (y_field.zero() || mu == 0.0 || steps <= 0) return y;
  if (y_field.c.size() == 1) return y + direction * mu * y_field.c[0].real();
  const double dt = direction / steps;
  auto f = [&](double p) { return mu * y_field.value(p); };
  for (int s = 0; s < steps; ++s) {
    double k1 = f(y), k2 = f(y + 0.5 * dt * k1), k3 = f(y + 0.5 * dt * k2), k4 = f(y + dt * k3);
    y += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return y;
}

// Exact time-one flow of a generator in span{1, cos 2 pi y, sin 2 pi y}: such a
// field is the Moebius field of a traceless 2x2 matrix, acting on
// [cos theta : sin theta] with y = theta / pi.
struct Projective {
  double m[4];

  static Projective exp_traceless(double a, double b, double c) {
    const double d = a * a + b * c;  // A^2 = d I
    double ch, sh;
    if (d > 0.0) {
      double r = std::sqrt(d);
      ch = std::cosh(r);
      sh = std::sinh(r) / r;
    } else if (d < 0.0) {
      double r = std::sqrt(-d);
      ch = std::cos(r);
      sh = std::sin(r) / r;
    } else {
      ch = 1.0;
      sh = 1.0;
    }
    return {{ch + sh * a, sh * b, sh * c, ch - sh * a}};
  }

  double operator()(double y) const {
    const double t = std::numbers::pi * y;
    const double cs = std::cos(t), sn = std::sin(t);
    const double t2 = std::atan2(m[2] * cs + m[3] * sn, m[0] * cs + m[1] * sn);
    return y + std::remainder(t2 - t, std::numbers::pi) / std::numbers::pi;
  }
};

// Decoded factor ready for pointwise replay.
struct ReplayFactor {
  FactorKind kind;
  int axis;
  std::vector<Line> g;    // per base sample
  Line h{SparseLine{}};
  std::vector<double> mu; // per base sample
  int steps;
  bool moebius = false;
  std::vector<Projective> fwd, bwd;  // per base sample, when moebius
};

ReplayFactor decode(const CertificateFactor& f, int n) {
  ReplayFactor r{f.kind, f.axis, std::vector<Line>(n, Line(SparseLine{})), Line(f.h.generator), {}, f.h.steps, false, {}, {}};
  for (const auto& [b, line] : f.g.fibers) r.g[b] = Line(line);
  r.mu = f.h.profile.empty() ? std::vector<double>(n, 1.0) : f.h.profile;
  if (r.h.c.size() == 2) {
    // Y = c0 + 2 Re(c1 e^{2 pi i y}) = ((c - b)/2 + (c + b)/2 cos 2 pi y - a sin 2 pi y) / pi
    const double c0 = r.h.c[0].real(), re = 0.5 * r.h.c[1].real(), im = 0.5 * r.h.c[1].imag();
    const double pi = std::numbers::pi;
    const double a = 2.0 * pi * im, c = pi * (2.0 * re + c0), b = pi * (2.0 * re - c0);
    r.moebius = true;
    for (int i = 0; i < n; ++i) {
      r.fwd.push_back(Projective::exp_traceless(r.mu[i] * a, r.mu[i] * b, r.mu[i] * c));
      r.bwd.push_back(Projective::exp_traceless(-r.mu[i] * a, -r.mu[i] * b, -r.mu[i] * c));
    }
  }
  return r;
}

double flow_h(const ReplayFactor& f, int base, double direction, double y) {
  if (f.moebius) return f.mu[base] == 0.0 ? y : (direction > 0 ? f.fwd[base] : f.bwd[base])(y);
  return flow_line(f.h, f.mu[base], f.steps, direction, y);
}

double apply(const ReplayFactor& f, int base, double y) {
  const Line& g = f.g[base];
  if (f.kind == FactorKind::fiber) return y + g.value(y);
  y = flow_h(f, base, -1.0, y);
  y = invert_line(g, y);
  y = flow_h(f, base, 1.0, y);
  return y + g.value(y);
}

// Displacement of the ordered product of `block` (applied right to left),
// laid out like FiberDiffeo of that axis.
std::vector<double> replay_block(const std::vector<ReplayFactor>& block, int axis, int n) {
  std::vector<double> out(std::size_t(n) * n, 0.0);
  if (block.empty()) return out;
  for (int b = 0; b < n; ++b) {
    for (int k = 0; k < n; ++k) {
      double y0 = double(k) / n, y = y0;
      for (auto it = block.rbegin(); it != block.rend(); ++it) y = apply(*it, b, y);
      std::size_t idx = axis == 1 ? std::size_t(b) * n + k : std::size_t(k) * n + b;
      out[idx] = y - y0;
    }
  }
  return out;
}

// Row spectra by direct DFT, as Lines (k = 0..n/2, Nyquist halved).
struct RowTransform {
  int n;
  std::vector<Complex> twiddle;
  explicit RowTransform(int n_) : n(n_), twiddle(n_) {
    for (int j = 0; j < n; ++j) twiddle[j] = std::polar(1.0, -kTwoPi * j / n);
  }
  Line operator()(const std::vector<double>& row) const {
    SparseLine s;
    for (int k = 0; k <= n / 2; ++k) {
      Complex acc(0.0, 0.0);
      for (int j = 0; j < n; ++j) acc += row[j] * twiddle[(std::size_t(k) * j) % n];
      acc /= double(n);
      if (k == n / 2) acc *= 0.5;
      s.k.push_back(k);
      s.c.push_back(acc);
    }
    return Line(s);
  }
};

std::string hex64(std::uint64_t v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "fnv1a64:%016llx", static_cast<unsigned long long>(v));
  return buf;
}

const char* kind_name(FactorKind k) { return k == FactorKind::commutator ? "commutator" : "fiber"; }

Json line_to_json(const SparseLine& s) {
  Json a = Json::array();
  for (std::size_t i = 0; i < s.k.size(); ++i) a.push_back(Json::array({s.k[i], s.c[i].real(), s.c[i].imag()}));
  return a;
}

SparseLine line_from_json(const Json& j, int n, const std::string& where) {
  if (!j.is_array()) throw FormatError(where + ": expected an array of [k, re, im]");
  SparseLine s;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const Json& e = j[i];
    if (!e.is_array() || e.size() != 3 || !e[0].is_number_integer() || !e[1].is_number() || !e[2].is_number())
      throw FormatError(where + "[" + std::to_string(i) + "]: expected [k, re, im]");
    int k = e[0].get<int>();
    if (k < 0 || k > n / 2) throw FormatError(where + "[" + std::to_string(i) + "]: wavenumber out of range");
    s.k.push_back(k);
    s.c.emplace_back(e[1].get<double>(), e[2].get<double>());
  }
  return s;
}

Json arc_json(const Arc& a) { return Json::array({a.lo, a.hi}); }

}  // namespace

SparseLine sparse_line(std::span<const double> samples, double tail_budget) {
  const int n = int(samples.size());
  PeriodicField f(1, n, std::vector<double>(samples.begin(), samples.end()));
  const auto& sp = f.spectrum();
  std::vector<Complex> c(sp.begin(), sp.begin() + n / 2 + 1);
  c[0] = Complex(c[0].real(), 0.0);
  c[n / 2] = Complex(0.5 * c[n / 2].real(), 0.0);
  // drop the longest tail whose weighted sum stays within the budget
  int keep = n / 2;
  double tail = 0.0;
  while (keep >= 0) {
    double w = (keep == 0 ? 1.0 : 2.0) * std::abs(c[keep]);
    if (tail + w > tail_budget) break;
    tail += w;
    --keep;
  }
  SparseLine s;
  for (int k = 0; k <= keep; ++k) {
    if (c[k] == Complex(0.0, 0.0)) continue;
    s.k.push_back(k);
    s.c.push_back(c[k]);
  }
  return s;
}

FiberSpectra encode_fibers(const FiberDiffeo& f) {
  FiberSpectra out{f.axis(), f.grid(), {}};
  for (int b = 0; b < f.grid(); ++b) {
    auto v = detail::fiber_values(f.displacement(), f.axis(), b);
    if (std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; })) continue;
    out.fibers.emplace_back(b, sparse_line(v));
  }
  return out;
}

std::string input_digest(const TorusDiffeo& f) {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&](const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
      h ^= p[i];
      h *= 1099511628211ull;
    }
  };
  std::int64_t n = f.grid();
  mix(&n, sizeof n);
  for (const auto* field : {&f.u(), &f.w()}) mix(field->values().data(), field->values().size() * sizeof(double));
  return hex64(h);
}

std::string certificate_to_json(const FactorizationCertificate& c, int indent) {
  Json j;
  j["format"] = "difffactor-certificate";
  j["version"] = 1;
  j["input"] = {{"grid", c.grid}, {"digest", c.digest}};
  Json cfg;
  cfg["alpha"] = c.config.alpha_text;
  cfg["alpha_value"] = c.config.alpha;
  Json cover;
  cover["name"] = c.config.cover_name;
  cover["profile"] = c.config.profile;
  Json charts = Json::array();
  for (const auto& ch : c.config.charts)
    charts.push_back({{"core", arc_json(ch.core)}, {"V", arc_json(ch.support)}, {"U", arc_json(ch.outer)}});
  cover["charts"] = charts;
  cfg["cover"] = cover;
  cfg["smoothing"] = c.config.smoothing;
  cfg["tolerance"] = c.config.tolerance;
  cfg["decomposition_tolerance"] = c.config.decomposition_tolerance;
  cfg["commutator_tolerance"] = c.config.commutator_tolerance;
  cfg["eps"] = c.config.eps;
  cfg["flow_steps"] = c.config.flow_steps;
  cfg["neighborhood"] = c.config.neighborhood;
  cfg["seed"] = c.config.seed;
  j["config"] = cfg;
  j["status"] = c.status;
  j["commutator_count"] = c.commutator_count;
  j["bound"] = {{"value", c.bound.value}, {"name", c.bound.name}, {"C", c.bound.C}, {"N", c.bound.N}, {"trace", c.bound.trace}};
  Json stages;
  for (const auto& [name, v] : c.stage_residuals) stages[name] = v;
  j["residuals"] = {{"total", c.residual}, {"stages", stages}};
  Json factors = Json::array();
  for (const auto& f : c.factors) {
    Json e;
    e["kind"] = kind_name(f.kind);
    e["axis"] = f.axis;
    e["stage"] = f.stage;
    e["chart"] = f.chart;
    Json fibers = Json::array();
    for (const auto& [b, line] : f.g.fibers) fibers.push_back({{"base", b}, {"modes", line_to_json(line)}});
    e["g"] = {{"fibers", fibers}};
    if (f.kind == FactorKind::commutator) {
      Json h;
      h["generator"] = line_to_json(f.h.generator);
      if (!f.h.profile.empty()) h["profile"] = f.h.profile;
      h["steps"] = f.h.steps;
      e["h"] = h;
    }
    factors.push_back(e);
  }
  j["factors"] = factors;
  return dump_json(j, indent);
}

FactorizationCertificate certificate_from_json(const std::string& text) {
  const Json j = parse_json(text, "certificate");
  const std::string w = "certificate";
  if (!j.is_object()) throw FormatError(w + ": expected a JSON object");
  if (require_string(j, "format", w) != "difffactor-certificate") throw FormatError(w + ": unknown 'format'");
  if (require_int(j, "version", w) != 1) throw FormatError(w + ": unsupported version");
  FactorizationCertificate c;
  const Json& in = require(j, "input", w);
  c.grid = require_int(in, "grid", w + ".input");
  if (!valid_grid(c.grid)) throw FormatError(w + ".input: invalid grid");
  c.digest = require_string(in, "digest", w + ".input");
  const int n = c.grid;

  const Json& cfg = require(j, "config", w);
  const std::string wc = w + ".config";
  c.config.alpha_text = require_string(cfg, "alpha", wc);
  c.config.alpha = require_number(cfg, "alpha_value", wc);
  const Json& cover = require(cfg, "cover", wc);
  c.config.cover_name = require_string(cover, "name", wc + ".cover");
  c.config.profile = require_string(cover, "profile", wc + ".cover");
  const Json& charts = require(cover, "charts", wc + ".cover");
  if (!charts.is_array()) throw FormatError(wc + ".cover.charts: expected an array");
  for (const auto& ch : charts) {
    auto arc = [&](const char* key) {
      auto v = require_numbers(ch, key, wc + ".cover.charts");
      if (v.size() != 2) throw FormatError(wc + ".cover.charts: arcs are [lo, hi]");
      return Arc{v[0], v[1]};
    };
    c.config.charts.push_back({arc("core"), arc("V"), arc("U")});
  }
  c.config.smoothing = require_string(cfg, "smoothing", wc);
  c.config.tolerance = require_number(cfg, "tolerance", wc);
  c.config.decomposition_tolerance = require_number(cfg, "decomposition_tolerance", wc);
  c.config.commutator_tolerance = require_number(cfg, "commutator_tolerance", wc);
  c.config.eps = require_number(cfg, "eps", wc);
  c.config.flow_steps = require_int(cfg, "flow_steps", wc);
  c.config.neighborhood = require_number(cfg, "neighborhood", wc);
  const Json& seed = require(cfg, "seed", wc);
  if (!seed.is_number_unsigned() && !(seed.is_number_integer() && seed.get<std::int64_t>() >= 0))
    throw FormatError(wc + ": 'seed' must be a non-negative integer");
  c.config.seed = seed.get<std::uint64_t>();

  c.status = require_string(j, "status", w);
  c.commutator_count = require_int(j, "commutator_count", w);
  const Json& bound = require(j, "bound", w);
  c.bound.value = require_int(bound, "value", w + ".bound");
  c.bound.name = require_string(bound, "name", w + ".bound");
  for (double v : require_numbers(bound, "C", w + ".bound")) c.bound.C.push_back(int(v));
  for (double v : require_numbers(bound, "N", w + ".bound")) c.bound.N.push_back(int(v));
  const Json& trace = require(bound, "trace", w + ".bound");
  if (!trace.is_array()) throw FormatError(w + ".bound.trace: expected an array");
  for (const auto& t : trace) {
    if (!t.is_string()) throw FormatError(w + ".bound.trace: entries must be strings");
    c.bound.trace.push_back(t.get<std::string>());
  }
  const Json& res = require(j, "residuals", w);
  c.residual = require_number(res, "total", w + ".residuals");
  const Json& stages = require(res, "stages", w + ".residuals");
  if (!stages.is_object()) throw FormatError(w + ".residuals.stages: expected an object");
  for (auto it = stages.begin(); it != stages.end(); ++it) {
    if (!it.value().is_number()) throw FormatError(w + ".residuals.stages: '" + it.key() + "' must be a number");
    c.stage_residuals.emplace_back(it.key(), it.value().get<double>());
  }

  const Json& factors = require(j, "factors", w);
  if (!factors.is_array()) throw FormatError(w + ".factors: expected an array");
  for (std::size_t i = 0; i < factors.size(); ++i) {
    const std::string wf = w + ".factors[" + std::to_string(i) + "]";
    const Json& e = factors[i];
    CertificateFactor f;
    std::string kind = require_string(e, "kind", wf);
    if (kind == "commutator") f.kind = FactorKind::commutator;
    else if (kind == "fiber") f.kind = FactorKind::fiber;
    else throw FormatError(wf + ": unknown kind '" + kind + "'");
    f.axis = require_int(e, "axis", wf);
    if (f.axis != 1 && f.axis != 2) throw FormatError(wf + ": axis must be 1 or 2");
    f.stage = require_string(e, "stage", wf);
    f.chart = require_int(e, "chart", wf);
    f.g.axis = f.axis;
    f.g.grid = n;
    const Json& fibers = require(require(e, "g", wf), "fibers", wf + ".g");
    if (!fibers.is_array()) throw FormatError(wf + ".g.fibers: expected an array");
    int last = -1;
    for (std::size_t q = 0; q < fibers.size(); ++q) {
      const std::string wq = wf + ".g.fibers[" + std::to_string(q) + "]";
      int b = require_int(fibers[q], "base", wq);
      if (b <= last || b >= n) throw FormatError(wq + ": base index out of range or out of order");
      last = b;
      f.g.fibers.emplace_back(b, line_from_json(require(fibers[q], "modes", wq), n, wq + ".modes"));
    }
    if (f.kind == FactorKind::commutator) {
      const Json& h = require(e, "h", wf);
      f.h.generator = line_from_json(require(h, "generator", wf + ".h"), n, wf + ".h.generator");
      f.h.steps = require_int(h, "steps", wf + ".h");
      if (f.h.steps < 1) throw FormatError(wf + ".h: steps must be positive");
      if (h.contains("profile")) {
        f.h.profile = require_numbers(h, "profile", wf + ".h");
        if (int(f.h.profile.size()) != n) throw FormatError(wf + ".h.profile: needs one value per base sample");
      }
    }
    c.factors.push_back(std::move(f));
  }
  return c;
}

double replay_residual(const FactorizationCertificate& c, const TorusDiffeo& f) {
  const int n = c.grid;
  if (f.grid() != n)
    throw InvalidArgument("replay: certificate grid " + std::to_string(n) + " does not match input grid " +
                          std::to_string(f.grid()));
  std::vector<ReplayFactor> block1, block2;
  for (std::size_t i = 0; i < c.factors.size(); ++i) {
    const auto& fac = c.factors[i];
    if (fac.g.grid != n && !fac.g.fibers.empty()) throw FormatError("replay: factor grid mismatch");
    if (fac.axis == 1 && !block2.empty())
      throw FormatError("replay: factor " + std::to_string(i) + " on axis 1 follows the axis-2 block");
    (fac.axis == 1 ? block1 : block2).push_back(decode(fac, n));
  }
  const auto d1 = replay_block(block1, 1, n);
  const auto d2 = replay_block(block2, 2, n);

  // G = f o F2^{-1} row by row; G must equal F1 = (x, y + d1).
  RowTransform dft(n);
  double worst = 0.0;
  std::vector<double> row_d2(n), row_u(n), row_w(n);
  for (int iy = 0; iy < n; ++iy) {
    for (int ix = 0; ix < n; ++ix) {
      std::size_t idx = std::size_t(ix) * n + iy;
      row_d2[ix] = d2[idx];
      row_u[ix] = f.u()[idx];
      row_w[ix] = f.w()[idx];
    }
    Line l2 = dft(row_d2), lu = dft(row_u), lw = dft(row_w);
    for (int ix = 0; ix < n; ++ix) {
      const double x = double(ix) / n;
      const double xs = invert_line(l2, x);
      const double gu = xs + lu.value(xs) - x;
      const double gw = lw.value(xs) - d1[std::size_t(ix) * n + iy];
      const double e = std::max(std::abs(gu), std::abs(gw));
      if (!(e <= worst)) worst = std::isnan(e) ? std::numeric_limits<double>::infinity() : e;
    }
  }
  return worst;
}

VerificationReport verify_certificate(const FactorizationCertificate& c, const TorusDiffeo& f, double tol) {
  VerificationReport r;
  r.tolerance = tol;
  auto check = [&](std::string name, bool pass, std::string detail) {
    r.checks.push_back({std::move(name), pass, std::move(detail)});
  };
  auto fmt = [](double v) {
    std::ostringstream s;
    s.precision(6);
    s << v;
    return s.str();
  };
  check("grid", c.grid == f.grid(), "certificate " + std::to_string(c.grid) + ", input " + std::to_string(f.grid()));
  if (c.grid != f.grid()) {
    r.pass = false;
    r.residual = std::numeric_limits<double>::infinity();
    return r;
  }
  std::string digest = input_digest(f);
  check("digest", digest == c.digest, digest);

  r.residual = replay_residual(c, f);
  check("replay-residual", r.residual <= tol, fmt(r.residual) + " vs tolerance " + fmt(tol));
  check("recorded-residual", std::abs(r.residual - c.residual) <= 1e-12,
        "recorded " + fmt(c.residual) + ", replayed " + fmt(r.residual));

  // re-flow every recorded exponential and measure its C^0 distance to the identity
  const int n = c.grid;
  const int samples = std::min(n, 64);
  for (const auto& fac : c.factors) {
    if (fac.kind != FactorKind::commutator) continue;
    ++r.commutators;
    const ReplayFactor rf = decode(fac, n);
    std::vector<double> disp;
    disp.reserve(std::size_t(n) * samples);
    for (int b = 0; b < n; ++b)
      for (int k = 0; k < samples; ++k) {
        double p = double(k) / samples;
        disp.push_back(flow_h(rf, b, 1.0, p) - p);
      }
    double mean = 0.0;
    for (double v : disp) mean += v;
    mean = std::round(mean / double(disp.size()));
    for (double v : disp) r.max_h_distance = std::max(r.max_h_distance, std::abs(v - mean));
  }
  check("h-neighborhood", r.max_h_distance <= c.config.neighborhood,
        "max C^0 distance " + fmt(r.max_h_distance) + " vs bound " + fmt(c.config.neighborhood));
  check("commutator-count", r.commutators == c.commutator_count,
        "counted " + std::to_string(r.commutators) + ", recorded " + std::to_string(c.commutator_count));
  bool status_ok = c.status == "within-bound" ? r.commutators <= c.bound.value : false;
  check("status", status_ok,
        c.status + ": " + std::to_string(r.commutators) + " commutators, bound " + std::to_string(c.bound.value));
  r.pass = std::all_of(r.checks.begin(), r.checks.end(), [](const VerificationCheck& k) { return k.pass; });
  return r;
}

}  // namespace difffactor
