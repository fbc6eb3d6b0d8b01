#pragma once

// Family description files (JSON).  Coordinates, bounds and matrices are
// decimal strings; doubles are written in shortest round-trip form, so a
// save/load cycle is bit-exact.
//
//   { "format": "glue-family", "version": 1, "name": ...,
//     "poset":      { "points": [{"id", "index"}], "succ": [[a, b], ...] },
//     "spaces":     [{ "pair": [p, q], "dim", "ambient_dim",
//                      "charts": [{ "kind": "affine" | "circle", "box": [...],
//                                   "origin": [...], "linear": [[...]] }] }],
//     "strata":     [{ "pair": [p, q], "chain": [...], "facets": [[chart, coord, "lo" | "hi"], ...] }],
//     "embeddings": [{ "triple": [p, r, q], "pieces": [{ "left_chart", "right_chart",
//                      "target_chart", "matrix": [[...]], "offset": [...] }] }],
//     "morse_system": { "name", "f", "variables", "box": [[lo, hi]], "period": [...] } }
//
// `strata` is derived from the face labels; on load it must agree with them.

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "glue/family_model.hpp"
#include "glue/morse_engine.hpp"

namespace glue {

/// A Morse function given by an expression.  Box ends and periods are
/// constant expressions ("2*pi").
struct MorseSystemSpec {
  std::string name;
  std::string f;
  std::vector<std::string> variables;
  std::vector<std::pair<std::string, std::string>> box;
  std::vector<std::string> period; // empty: nothing periodic
};

MorseSystem make_system(const MorseSystemSpec& spec);

struct FamilyDocument {
  StratifiedFamily family;
  std::optional<MorseSystemSpec> morse_system;
};

/// Throws InputError with a JSON path on malformed input.
FamilyDocument parse_family(const std::string& text);
/// Throws Unsupported for a chart or embedding known only by its evaluators.
std::string serialize_family(const StratifiedFamily& family,
                             const std::optional<MorseSystemSpec>& morse_system = std::nullopt);

FamilyDocument load_family(const std::string& path);
void save_family(const std::string& path, const StratifiedFamily& family,
                 const std::optional<MorseSystemSpec>& morse_system = std::nullopt);

/// Shortest decimal that reads back as the same double.
std::string format_double(double x);
/// Correctly rounded parse of a complete decimal string; InputError otherwise.
double parse_double(const std::string& s);

} // namespace glue
