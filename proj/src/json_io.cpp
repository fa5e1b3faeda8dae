#include "difffactor/json_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "difffactor/errors.hpp"

namespace difffactor {

namespace {

void dump_number(std::string& out, double v) {
  if (!std::isfinite(v)) {
    out += "null";
    return;
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out += buf;
  // keep a float marker so readers do not narrow to integers
  std::string_view s(buf);
  if (s.find_first_of(".eE") == std::string_view::npos) out += ".0";
}

void dump_rec(std::string& out, const Json& j, int indent, int depth) {
  auto newline = [&](int d) {
    if (indent < 0) return;
    out += '\n';
    out.append(std::size_t(indent) * d, ' ');
  };
  switch (j.type()) {
    case Json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += '{';
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ',';
        first = false;
        newline(depth + 1);
        out += Json(it.key()).dump();
        out += indent < 0 ? ":" : ": ";
        dump_rec(out, it.value(), indent, depth + 1);
      }
      newline(depth);
      out += '}';
      return;
    }
    case Json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      // numeric arrays stay on one line
      bool flat = std::all_of(j.begin(), j.end(), [](const Json& e) { return e.is_primitive(); });
      out += '[';
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) out += flat && indent >= 0 ? ", " : ",";
        if (!flat) newline(depth + 1);
        dump_rec(out, j[i], indent, depth + 1);
      }
      if (!flat) newline(depth);
      out += ']';
      return;
    }
    case Json::value_t::number_float:
      dump_number(out, j.get<double>());
      return;
    default:
      out += j.dump();
  }
}

std::vector<double> field_values(const Json& j, const std::string& key, std::size_t expected, const std::string& where) {
  auto v = require_numbers(j, key, where);
  if (v.size() != expected)
    throw FormatError(where + ": '" + key + "' has " + std::to_string(v.size()) + " values, expected " +
                      std::to_string(expected));
  return v;
}

int require_grid(const Json& j, const std::string& where) {
  int n = require_int(j, "grid", where);
  if (!valid_grid(n)) throw FormatError(where + ": grid " + std::to_string(n) + " is not a power of two >= 8");
  return n;
}

Arc arc_from_json(const Json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw FormatError(where + ": expected [lo, hi]");
  return Arc{j[0].get<double>(), j[1].get<double>()};
}

}  // namespace

std::string dump_json(const Json& j, int indent) {
  std::string out;
  dump_rec(out, j, indent, 0);
  if (indent >= 0) out += '\n';
  return out;
}

Json parse_json(const std::string& text, const std::string& what) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(what + ": " + e.what());
  }
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw InvalidArgument("failed writing '" + path + "'");
}

const Json& require(const Json& j, const std::string& key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) throw FormatError(where + ": missing key '" + key + "'");
  return j[key];
}

double require_number(const Json& j, const std::string& key, const std::string& where) {
  const Json& v = require(j, key, where);
  if (!v.is_number()) throw FormatError(where + ": '" + key + "' must be a number");
  return v.get<double>();
}

int require_int(const Json& j, const std::string& key, const std::string& where) {
  const Json& v = require(j, key, where);
  if (!v.is_number_integer()) throw FormatError(where + ": '" + key + "' must be an integer");
  return v.get<int>();
}

std::string require_string(const Json& j, const std::string& key, const std::string& where) {
  const Json& v = require(j, key, where);
  if (!v.is_string()) throw FormatError(where + ": '" + key + "' must be a string");
  return v.get<std::string>();
}

std::vector<double> require_numbers(const Json& j, const std::string& key, const std::string& where) {
  const Json& v = require(j, key, where);
  if (!v.is_array()) throw FormatError(where + ": '" + key + "' must be an array of numbers");
  std::vector<double> out;
  out.reserve(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number())
      throw FormatError(where + ": '" + key + "'[" + std::to_string(i) + "] is not a finite number");
    out.push_back(v[i].get<double>());
  }
  return out;
}

Json field_to_json(const PeriodicField& f) {
  Json j;
  j["dimension"] = f.dimension();
  j["grid"] = f.grid();
  const auto v = f.values();
  if (f.dimension() == 1) {
    j["values"] = std::vector<double>(v.begin(), v.end());
  } else {
    Json rows = Json::array();
    const std::size_t n = std::size_t(f.grid());
    for (std::size_t r = 0; r < n; ++r) rows.push_back(std::vector<double>(v.begin() + r * n, v.begin() + (r + 1) * n));
    j["values"] = std::move(rows);
  }
  j["convention"] = "period-1";
  return j;
}

PeriodicField field_from_json(const Json& j, const std::string& where) {
  if (!j.is_object()) throw FormatError(where + ": expected a field object");
  if (j.contains("convention") && j["convention"] != "period-1")
    throw FormatError(where + ": unsupported convention " + j["convention"].dump() + " (expected \"period-1\")");
  int d = require_int(j, "dimension", where);
  if (d != 1 && d != 2) throw FormatError(where + ": dimension must be 1 or 2");
  int n = require_grid(j, where);
  if (d == 1) return PeriodicField(1, n, field_values(j, "values", std::size_t(n), where));
  const Json& rows = require(j, "values", where);
  if (!rows.is_array() || rows.size() != std::size_t(n))
    throw FormatError(where + ": 'values' must hold " + std::to_string(n) + " rows");
  std::vector<double> out;
  out.reserve(std::size_t(n) * n);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    Json row{{"row", rows[r]}};
    auto v = field_values(row, "row", std::size_t(n), where + " row " + std::to_string(r));
    out.insert(out.end(), v.begin(), v.end());
  }
  return PeriodicField(2, n, std::move(out));
}

namespace {

Json diffeo_json(const std::string& kind, int grid, Json displacements) {
  Json j;
  j["kind"] = kind;
  j["grid"] = grid;
  j["displacements"] = std::move(displacements);
  return j;
}

// Checks kind and grid and returns the displacement payloads.
const Json& diffeo_payloads(const Json& j, const std::string& kind, int& grid) {
  if (!j.is_object()) throw FormatError(kind + " diffeo: expected a JSON object");
  std::string k = require_string(j, "kind", "diffeo");
  if (k != kind) throw FormatError("diffeo: expected kind '" + kind + "', got '" + k + "'");
  grid = require_grid(j, kind + " diffeo");
  const Json& d = require(j, "displacements", kind + " diffeo");
  if (!d.is_object()) throw FormatError(kind + " diffeo: 'displacements' must be an object");
  return d;
}

PeriodicField payload(const Json& d, const std::string& key, int dimension, int grid, const std::string& where) {
  auto f = field_from_json(require(d, key, where), where + " '" + key + "'");
  if (f.dimension() != dimension || f.grid() != grid)
    throw FormatError(where + ": '" + key + "' must be a " + std::to_string(dimension) + "D field on grid " +
                      std::to_string(grid));
  return f;
}

}  // namespace

std::string diffeo_kind(const Json& j) {
  if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string()) throw FormatError("diffeo: missing 'kind'");
  return j["kind"].get<std::string>();
}

Json circle_to_json(const CircleDiffeo& f) {
  return diffeo_json("circle", f.grid(), Json{{"u", field_to_json(f.displacement())}});
}

CircleDiffeo circle_from_json(const Json& j) {
  int n = 0;
  const Json& d = diffeo_payloads(j, "circle", n);
  return CircleDiffeo(payload(d, "u", 1, n, "circle diffeo"));
}

Json torus_to_json(const TorusDiffeo& f) {
  return diffeo_json("torus", f.grid(), Json{{"u", field_to_json(f.u())}, {"w", field_to_json(f.w())}});
}

TorusDiffeo torus_from_json(const Json& j) {
  int n = 0;
  const Json& d = diffeo_payloads(j, "torus", n);
  return TorusDiffeo(payload(d, "u", 2, n, "torus diffeo"), payload(d, "w", 2, n, "torus diffeo"));
}

Json fiber_to_json(const FiberDiffeo& f) {
  return diffeo_json(f.axis() == 1 ? "fiber1" : "fiber2", f.grid(), Json{{"d", field_to_json(f.displacement())}});
}

FiberDiffeo fiber_from_json(const Json& j) {
  const std::string kind = diffeo_kind(j);
  if (kind != "fiber1" && kind != "fiber2") throw FormatError("diffeo: expected kind 'fiber1' or 'fiber2', got '" + kind + "'");
  int n = 0;
  const Json& d = diffeo_payloads(j, kind, n);
  return FiberDiffeo(kind == "fiber1" ? 1 : 2, payload(d, "d", 2, n, kind + " diffeo"));
}

TorusDiffeo any_torus_from_json(const Json& j) {
  const std::string kind = diffeo_kind(j);
  if (kind == "fiber1" || kind == "fiber2") return fiber_from_json(j).to_torus();
  return torus_from_json(j);
}

FiniteLieAlgebra algebra_from_json(const Json& j) {
  if (j.is_string()) return FiniteLieAlgebra::builtin(j.get<std::string>());
  const std::string where = "algebra";
  std::string name = j.contains("name") && j["name"].is_string() ? j["name"].get<std::string>() : "custom";
  int d = require_int(j, "dimension", where);
  if (d < 1 || d > 64) throw FormatError(where + ": dimension must be in [1, 64]");
  std::vector<double> c(std::size_t(d) * d * d, 0.0);
  const Json& entries = require(j, "constants", where);
  if (!entries.is_array()) throw FormatError(where + ": 'constants' must be an array of [i, j, k, value]");
  for (const auto& e : entries) {
    if (!e.is_array() || e.size() != 4 || !e[0].is_number_integer() || !e[1].is_number_integer() ||
        !e[2].is_number_integer() || !e[3].is_number())
      throw FormatError(where + ": constant entries must be [i, j, k, value]");
    int a = e[0].get<int>(), b = e[1].get<int>(), k = e[2].get<int>();
    if (a < 0 || b < 0 || k < 0 || a >= d || b >= d || k >= d) throw FormatError(where + ": constant index out of range");
    c[(std::size_t(a) * d + b) * d + k] = e[3].get<double>();
  }
  std::vector<Eigen::MatrixXd> rep;
  if (j.contains("representation")) {
    const Json& r = j["representation"];
    if (!r.is_array() || int(r.size()) != d) throw FormatError(where + ": 'representation' needs one matrix per basis element");
    for (const auto& m : r) {
      if (!m.is_array() || m.empty() || !m[0].is_array()) throw FormatError(where + ": representation matrices must be row lists");
      Eigen::MatrixXd mat(m.size(), m[0].size());
      for (std::size_t i = 0; i < m.size(); ++i) {
        if (!m[i].is_array() || m[i].size() != m[0].size()) throw FormatError(where + ": ragged representation matrix");
        for (std::size_t k = 0; k < m[i].size(); ++k) {
          if (!m[i][k].is_number()) throw FormatError(where + ": representation entries must be numbers");
          mat(i, k) = m[i][k].get<double>();
        }
      }
      rep.push_back(std::move(mat));
    }
  }
  return FiniteLieAlgebra(name, d, std::move(c), std::move(rep));
}

ChartCover cover_from_json(const Json& j) {
  const std::string where = "cover";
  BumpProfile profile = BumpProfile::poly7;
  if (j.contains("profile")) profile = parse_profile(require_string(j, "profile", where));
  const Json& charts = require(j, "charts", where);
  if (!charts.is_array() || charts.empty()) throw FormatError(where + ": 'charts' must be a non-empty array");
  std::vector<Chart> out;
  // V: support of the fragmentation bump (mu = 1 there); U: support of mu;
  // core: where the fragmentation bump is 1, default V shrunk by 0.03.
  for (const auto& c : charts) {
    Arc v = arc_from_json(require(c, "V", where), where + ".V");
    Arc u = arc_from_json(require(c, "U", where), where + ".U");
    Arc core = c.contains("core") ? arc_from_json(c["core"], where + ".core")
                                  : (v.whole() ? v : Arc{v.lo + 0.03, v.hi - 0.03});
    if (core.length() <= 0.0) throw FormatError(where + ": arc V too short for the default core");
    out.push_back({core, v, u});
  }
  return ChartCover(std::move(out), profile);
}

Json cover_to_json(const ChartCover& c) {
  Json j;
  j["profile"] = to_string(c.profile());
  Json charts = Json::array();
  for (const auto& ch : c.charts()) {
    Json e;
    e["core"] = {ch.core.lo, ch.core.hi};
    e["V"] = {ch.support.lo, ch.support.hi};
    e["U"] = {ch.outer.lo, ch.outer.hi};
    charts.push_back(e);
  }
  j["charts"] = charts;
  return j;
}

ChartCover cover_from_name(const std::string& name, BumpProfile profile) {
  if (name == "global") return ChartCover::global();
  if (name == "two-arc") return ChartCover::two_arc(profile);
  return cover_from_json(parse_json(read_text_file(name), "cover file '" + name + "'"));
}

}  // namespace difffactor
