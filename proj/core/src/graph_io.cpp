#include "fractalmix/graph_io.hpp"

#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "fractalmix/errors.hpp"

namespace fractalmix {

using nlohmann::json;

std::string to_wg_json(const WeightedGraph& g) {
  json doc;
  doc["format"] = kGraphFormat;
  doc["directed"] = false;
  json vertices = json::array();
  for (Vertex x = 0; x < g.vertex_count(); ++x) {
    json v = {{"id", x}};
    if (g.coord_dim() > 0) {
      const auto c = g.coord(x);
      v["coords"] = std::vector<std::int64_t>(c.begin(), c.end());
    }
    vertices.push_back(std::move(v));
  }
  doc["vertices"] = std::move(vertices);
  json edges = json::array();
  for (const auto& e : g.edges()) edges.push_back({{"u", e.u}, {"v", e.v}, {"mu", e.mu}});
  doc["edges"] = std::move(edges);
  return doc.dump() + "\n";
}

void write_wg_json(const WeightedGraph& g, std::ostream& out) { out << to_wg_json(g); }

void save_wg_json(const WeightedGraph& g, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot open " + path + " for writing");
  write_wg_json(g, out);
}

WeightedGraph from_wg_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("wg-json parse error: ") + e.what());
  }
  try {
    if (doc.value("format", std::string{}) != kGraphFormat)
      throw ValidationError("wg-json: missing or unsupported \"format\" (expected wg-json/1)");
    if (doc.value("directed", false))
      throw ValidationError("wg-json: directed graphs are not supported");
    const auto& vertices = doc.at("vertices");
    const std::size_t n = vertices.size();
    std::size_t dim = 0;
    std::vector<std::int64_t> coords;
    std::vector<char> seen(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto& v = vertices[i];
      const auto id = v.at("id").get<std::int64_t>();
      if (id < 0 || static_cast<std::size_t>(id) >= n || seen[id])
        throw ValidationError("wg-json: vertex ids must be a permutation of 0..n-1");
      seen[id] = 1;
      if (v.contains("coords")) {
        const auto c = v.at("coords").get<std::vector<std::int64_t>>();
        if (i == 0) {
          dim = c.size();
          coords.assign(n * dim, 0);
        }
        if (c.size() != dim) throw ValidationError("wg-json: inconsistent coordinate dimension");
        std::copy(c.begin(), c.end(), coords.begin() + static_cast<std::ptrdiff_t>(id * dim));
      } else if (dim > 0) {
        throw ValidationError("wg-json: coordinates present on some vertices only");
      }
    }
    std::vector<Edge> edges;
    for (const auto& e : doc.at("edges")) {
      const auto u = e.at("u").get<std::int64_t>();
      const auto v = e.at("v").get<std::int64_t>();
      if (u < 0 || v < 0) throw StructuralError("wg-json: negative vertex id in edge");
      edges.push_back({static_cast<Vertex>(u), static_cast<Vertex>(v),
                       e.contains("mu") ? e.at("mu").get<double>() : 1.0});
    }
    return WeightedGraph::from_edges(n, std::move(edges), std::move(coords), dim);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("wg-json schema error: ") + e.what());
  }
}

WeightedGraph load_wg_json(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open graph file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_wg_json(ss.str());
}

}  // namespace fractalmix
