#pragma once

#include <string>

#include <json.hpp>

#include "difffactor/diffeo.hpp"
#include "difffactor/fragmentation.hpp"
#include "difffactor/lie_ngates.hpp"

namespace difffactor {

using Json = nlohmann::ordered_json;

/// Serializes with every floating-point value printed to 17 significant
/// digits; non-finite values become null. indent < 0 gives one line.
std::string dump_json(const Json& j, int indent = -1);
/// Throws FormatError carrying `what` and the parser message.
Json parse_json(const std::string& text, const std::string& what);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

// Accessors that throw FormatError naming the missing or mistyped key.
const Json& require(const Json& j, const std::string& key, const std::string& where);
double require_number(const Json& j, const std::string& key, const std::string& where);
int require_int(const Json& j, const std::string& key, const std::string& where);
std::string require_string(const Json& j, const std::string& key, const std::string& where);
std::vector<double> require_numbers(const Json& j, const std::string& key, const std::string& where);

// {"dimension", "grid", "values", "convention": "period-1"}; 2D values are
// nested row-major arrays (values[ix][iy]).
Json field_to_json(const PeriodicField& f);
PeriodicField field_from_json(const Json& j, const std::string& where = "field");

// {"kind": "circle" | "torus" | "fiber1" | "fiber2", "grid",
//  "displacements": {...fields...}} with payload keys u (circle), u and w
// (torus) and d (fiber).
std::string diffeo_kind(const Json& j);
Json circle_to_json(const CircleDiffeo& f);
CircleDiffeo circle_from_json(const Json& j);
Json torus_to_json(const TorusDiffeo& f);
TorusDiffeo torus_from_json(const Json& j);
Json fiber_to_json(const FiberDiffeo& f);
FiberDiffeo fiber_from_json(const Json& j);
/// Torus or fiber kinds, as a torus diffeomorphism.
TorusDiffeo any_torus_from_json(const Json& j);

/// {"name", "dimension", "constants": [[i, j, k, value], ...],
///  "representation": [matrix rows...] (optional)}; a bare string names a
/// built-in algebra.
FiniteLieAlgebra algebra_from_json(const Json& j);

/// {"profile": "poly7", "charts": [{"V": [lo, hi], "U": [lo, hi], "core": [lo, hi]}]}.
/// V is the support of the fragmentation bump, U (containing V) supports the
/// localization bump, and the optional core defaults to V shrunk by 0.03 per side.
ChartCover cover_from_json(const Json& j);
Json cover_to_json(const ChartCover& c);
/// "global", "two-arc" or a path to a cover file.
ChartCover cover_from_name(const std::string& name, BumpProfile profile = BumpProfile::poly7);

}  // namespace difffactor
