#include "fractalmix/graph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "fractalmix/errors.hpp"
#include "fractalmix/fit.hpp"
#include "fractalmix/rng.hpp"

namespace fractalmix {

WeightedGraph WeightedGraph::from_edges(std::size_t vertex_count, std::vector<Edge> edges,
                                        std::vector<std::int64_t> coords,
                                        std::size_t coord_dim) {
  if (vertex_count == 0) throw StructuralError("graph must have at least one vertex");
  if (vertex_count > std::numeric_limits<Vertex>::max())
    throw CapacityError("vertex count exceeds 32-bit vertex ids");
  if (coord_dim > 0 && coords.size() != vertex_count * coord_dim)
    throw ValidationError("coordinate array does not match vertex count");

  for (auto& e : edges) {
    if (e.u >= vertex_count || e.v >= vertex_count) {
      std::ostringstream os;
      os << "edge (" << e.u << "," << e.v << ") references a vertex >= " << vertex_count;
      throw StructuralError(os.str());
    }
    if (e.u == e.v) {
      std::ostringstream os;
      os << "self-loop at vertex " << e.u;
      throw StructuralError(os.str());
    }
    if (!(e.mu > 0.0) || !std::isfinite(e.mu)) {
      std::ostringstream os;
      os << "ellipticity: edge (" << e.u << "," << e.v << ") has non-positive conductance "
         << e.mu;
      throw StructuralError(os.str());
    }
    if (e.u > e.v) std::swap(e.u, e.v);
  }
  std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) {
    return a.u != b.u ? a.u < b.u : a.v < b.v;
  });
  for (std::size_t i = 1; i < edges.size(); ++i) {
    if (edges[i].u == edges[i - 1].u && edges[i].v == edges[i - 1].v) {
      std::ostringstream os;
      os << "duplicate edge (" << edges[i].u << "," << edges[i].v << ")";
      throw StructuralError(os.str());
    }
  }

  WeightedGraph g;
  g.coord_dim_ = coord_dim;
  g.coords_ = std::move(coords);
  std::vector<std::size_t> deg(vertex_count, 0);
  for (const auto& e : edges) {
    ++deg[e.u];
    ++deg[e.v];
  }
  g.offsets_.assign(vertex_count + 1, 0);
  for (std::size_t x = 0; x < vertex_count; ++x) g.offsets_[x + 1] = g.offsets_[x] + deg[x];
  g.neighbors_.resize(g.offsets_.back());
  g.conductance_.resize(g.offsets_.back());
  std::vector<std::size_t> fill(g.offsets_.begin(), g.offsets_.end() - 1);
  for (const auto& e : edges) {
    g.neighbors_[fill[e.u]] = e.v;
    g.conductance_[fill[e.u]++] = e.mu;
    g.neighbors_[fill[e.v]] = e.u;
    g.conductance_[fill[e.v]++] = e.mu;
    if (e.mu != 1.0) g.unit_weights_ = false;
  }
  // Edges were sorted by (u, v), so every adjacency list is sorted too.
  g.weight_.assign(vertex_count, 0.0);
  for (std::size_t x = 0; x < vertex_count; ++x) {
    double s = 0.0;
    for (std::size_t k = g.offsets_[x]; k < g.offsets_[x + 1]; ++k) s += g.conductance_[k];
    g.weight_[x] = s;
    g.max_degree_ = std::max(g.max_degree_, deg[x]);
  }
  g.total_weight_ = std::accumulate(g.weight_.begin(), g.weight_.end(), 0.0);

  const std::size_t comps = component_count(g);
  if (comps != 1) {
    std::ostringstream os;
    os << "connectivity: graph has " << comps << " connected components";
    throw StructuralError(os.str());
  }
  return g;
}

double WeightedGraph::measure(std::span<const Vertex> set) const noexcept {
  double s = 0.0;
  for (const Vertex x : set) s += weight_[x];
  return s;
}

double WeightedGraph::conductance(Vertex x, Vertex y) const noexcept {
  const auto nb = neighbors(x);
  const auto it = std::lower_bound(nb.begin(), nb.end(), y);
  if (it == nb.end() || *it != y) return 0.0;
  return conductance_[offsets_[x] + static_cast<std::size_t>(it - nb.begin())];
}

std::vector<Edge> WeightedGraph::edges() const {
  std::vector<Edge> out;
  out.reserve(edge_count());
  for (Vertex x = 0; x < vertex_count(); ++x) {
    const auto nb = neighbors(x);
    const auto mu = conductances(x);
    for (std::size_t k = 0; k < nb.size(); ++k)
      if (x < nb[k]) out.push_back({x, nb[k], mu[k]});
  }
  return out;
}

std::vector<double> invariant_measure(const WeightedGraph& g) {
  if (component_count(g) != 1) throw StructuralError("connectivity: graph is disconnected");
  std::vector<double> pi(g.vertex_count());
  for (Vertex x = 0; x < g.vertex_count(); ++x)
    pi[x] = g.vertex_weight(x) / g.total_weight();
  return pi;
}

std::vector<int> bfs_distances(const WeightedGraph& g, std::span<const Vertex> sources) {
  std::vector<int> dist(g.vertex_count(), -1);
  std::vector<Vertex> queue;
  queue.reserve(g.vertex_count());
  for (const Vertex s : sources) {
    if (dist[s] < 0) {
      dist[s] = 0;
      queue.push_back(s);
    }
  }
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const Vertex x = queue[head];
    for (const Vertex y : g.neighbors(x)) {
      if (dist[y] < 0) {
        dist[y] = dist[x] + 1;
        queue.push_back(y);
      }
    }
  }
  return dist;
}

std::vector<int> bfs_distances(const WeightedGraph& g, Vertex source) {
  const Vertex s[1] = {source};
  return bfs_distances(g, s);
}

std::size_t component_count(const WeightedGraph& g) {
  const std::size_t n = g.vertex_count();
  std::vector<char> seen(n, 0);
  std::vector<Vertex> stack;
  std::size_t comps = 0;
  for (Vertex s = 0; s < n; ++s) {
    if (seen[s]) continue;
    ++comps;
    seen[s] = 1;
    stack.push_back(s);
    while (!stack.empty()) {
      const Vertex x = stack.back();
      stack.pop_back();
      for (const Vertex y : g.neighbors(x)) {
        if (!seen[y]) {
          seen[y] = 1;
          stack.push_back(y);
        }
      }
    }
  }
  return comps;
}

namespace {

std::pair<Vertex, int> farthest(const WeightedGraph& g, Vertex s) {
  const auto d = bfs_distances(g, s);
  Vertex arg = s;
  int best = 0;
  for (Vertex x = 0; x < g.vertex_count(); ++x) {
    if (d[x] < 0) throw StructuralError("connectivity: graph is disconnected");
    if (d[x] > best) {
      best = d[x];
      arg = x;
    }
  }
  return {arg, best};
}

}  // namespace

DiameterResult diameter(const WeightedGraph& g, std::size_t exact_cap) {
  const std::size_t n = g.vertex_count();
  DiameterResult r;
  if (n <= exact_cap) {
    for (Vertex s = 0; s < n; ++s) r.value = std::max(r.value, farthest(g, s).second);
    r.exact = true;
    return r;
  }
  // Repeated double sweeps from spread-out seeds; every sweep value is an
  // attained distance, hence a lower bound.
  r.exact = false;
  CounterRng rng = make_stream(0xd1a3, n);
  Vertex seed = 0;
  for (int sweep = 0; sweep < 8; ++sweep) {
    const auto [a, da] = farthest(g, seed);
    const auto [b, db] = farthest(g, a);
    r.value = std::max({r.value, da, db});
    seed = sweep % 2 == 0 ? b : static_cast<Vertex>(rng.bounded(n));
  }
  return r;
}

std::vector<Vertex> ball(const WeightedGraph& g, Vertex x, int r) {
  std::vector<Vertex> out;
  if (r < 0) return out;
  std::vector<int> dist(g.vertex_count(), -1);
  dist[x] = 0;
  out.push_back(x);
  for (std::size_t head = 0; head < out.size(); ++head) {
    const Vertex u = out[head];
    if (dist[u] == r) continue;
    for (const Vertex y : g.neighbors(u)) {
      if (dist[y] < 0) {
        dist[y] = dist[u] + 1;
        out.push_back(y);
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<double> volume_profile(const WeightedGraph& g, Vertex x) {
  const auto d = bfs_distances(g, x);
  const int maxd = *std::max_element(d.begin(), d.end());
  std::vector<double> vol(static_cast<std::size_t>(maxd) + 1, 0.0);
  for (Vertex y = 0; y < g.vertex_count(); ++y) vol[d[y]] += g.vertex_weight(y);
  for (std::size_t r = 1; r < vol.size(); ++r) vol[r] += vol[r - 1];
  return vol;
}

namespace {

std::vector<Vertex> pick_centers(std::size_t n, std::size_t count, std::uint64_t seed) {
  std::vector<Vertex> centers;
  if (count >= n) {
    centers.resize(n);
    std::iota(centers.begin(), centers.end(), Vertex{0});
    return centers;
  }
  CounterRng rng = make_stream(seed, 0);
  centers.reserve(count);
  for (std::size_t i = 0; i < count; ++i) centers.push_back(static_cast<Vertex>(rng.bounded(n)));
  return centers;
}

}  // namespace

AssumptionReport check_assumptions(const WeightedGraph& g, double d_f_nominal,
                                   const AssumptionOptions& options) {
  AssumptionReport rep;
  const std::size_t n = g.vertex_count();
  rep.d_f = d_f_nominal;
  rep.max_degree = g.max_degree();

  double mu_max = 0.0, mu_min = std::numeric_limits<double>::infinity();
  double p0 = 1.0;
  for (Vertex x = 0; x < n; ++x) {
    for (const double mu : g.conductances(x)) {
      mu_max = std::max(mu_max, mu);
      mu_min = std::min(mu_min, mu);
      p0 = std::min(p0, mu / g.vertex_weight(x));
    }
  }
  if (g.edge_count() == 0) {
    mu_max = mu_min = 1.0;
  }
  rep.c_e = std::max({1.0, mu_max, 1.0 / mu_min});
  rep.p_0 = p0;
  rep.ellipticity_ok = std::isfinite(rep.c_e) && mu_min > 0.0;
  rep.p0_ok = p0 > 0.0;

  const auto w = g.vertex_weights();
  rep.weight_max = *std::max_element(w.begin(), w.end());
  rep.weight_min = *std::min_element(w.begin(), w.end());
  rep.delta = rep.weight_min > 0 ? rep.weight_max / rep.weight_min
                                 : std::numeric_limits<double>::infinity();

  const int diam = diameter(g).value;
  rep.full_enumeration = n <= options.enumeration_cap;
  const auto centers = pick_centers(
      n, rep.full_enumeration ? n : std::max<std::size_t>(options.sampled_centers, 200),
      options.seed);
  rep.centers_checked = centers.size();
  double cv = 1.0;
  for (const Vertex x : centers) {
    const auto vol = volume_profile(g, x);
    for (int r = 1; r <= diam; ++r) {
      const double v = vol[std::min<std::size_t>(static_cast<std::size_t>(r), vol.size() - 1)];
      const double rd = std::pow(static_cast<double>(r), d_f_nominal);
      cv = std::max({cv, v / rd, rd / v});
    }
  }
  rep.c_v = cv;
  rep.volume_ok = std::isfinite(cv);
  return rep;
}

VolumeFit volume_growth_fit(const WeightedGraph& g, std::size_t samples, std::uint64_t seed) {
  const int diam = diameter(g).value;
  VolumeFit fit;
  for (int r = 2; r <= diam / 4; r *= 2) fit.radii.push_back(r);
  if (diam < 8 || fit.radii.size() < 2)
    throw ValidationError("volume_growth_fit: insufficient radius range");

  const auto centers = pick_centers(g.vertex_count(), samples, seed);
  std::vector<std::vector<double>> per_center;
  per_center.reserve(centers.size());
  fit.mean_log_volume.assign(fit.radii.size(), 0.0);
  for (const Vertex x : centers) {
    const auto vol = volume_profile(g, x);
    std::vector<double> v(fit.radii.size());
    for (std::size_t i = 0; i < fit.radii.size(); ++i) {
      v[i] = vol[std::min<std::size_t>(static_cast<std::size_t>(fit.radii[i]), vol.size() - 1)];
      fit.mean_log_volume[i] += std::log(v[i]);
    }
    per_center.push_back(std::move(v));
  }
  std::vector<double> lr(fit.radii.size());
  for (std::size_t i = 0; i < fit.radii.size(); ++i) {
    fit.mean_log_volume[i] /= static_cast<double>(centers.size());
    // Lattice balls count points up to r, so the effective radius is r + 1/2
    // (on a path V = 2(r + 1/2) exactly).
    lr[i] = std::log(fit.radii[i] + 0.5);
  }
  const LineFit lf = fit_line(lr, fit.mean_log_volume);
  fit.d_f = lf.slope;
  fit.r2 = lf.r2;
  double cv = 1.0;
  for (const auto& v : per_center) {
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double rd = std::pow(fit.radii[i] + 0.5, fit.d_f);
      cv = std::max({cv, v[i] / rd, rd / v[i]});
    }
  }
  fit.c_v = cv;
  return fit;
}

}  // namespace fractalmix
