#pragma once

#include <iosfwd>
#include <string>

#include "fractalmix/graph.hpp"

namespace fractalmix {

inline constexpr const char* kGraphFormat = "wg-json/1";

// Serializes `g` as wg-json/1. Output is a deterministic function of the graph.
std::string to_wg_json(const WeightedGraph& g);
void write_wg_json(const WeightedGraph& g, std::ostream& out);
void save_wg_json(const WeightedGraph& g, const std::string& path);

// Parses wg-json/1; throws ValidationError on schema problems and
// StructuralError when the described graph violates a graph invariant.
WeightedGraph from_wg_json(const std::string& text);
WeightedGraph load_wg_json(const std::string& path);

}  // namespace fractalmix
