#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace fractalmix {

using Vertex = std::uint32_t;

struct Edge {
  Vertex u;
  Vertex v;
  double mu;
};

/// Undirected weighted graph with symmetric positive conductances.
///
/// Vertices are dense ids 0..n-1. Adjacency is stored in CSR form, each
/// undirected edge appearing once in each endpoint's list. The vertex weight
/// mu_x is the sum of incident conductances. Construction validates every
/// invariant (no self-loops, no parallel edges, positive conductances,
/// connectivity); an instance is immutable afterwards and safe to share
/// between threads.
///
/// Generated fractals additionally carry integer lattice coordinates of a
/// fixed dimension (coord_dim() == 0 when absent).
class WeightedGraph {
 public:
  WeightedGraph() = default;

  static WeightedGraph from_edges(std::size_t vertex_count, std::vector<Edge> edges,
                                  std::vector<std::int64_t> coords = {},
                                  std::size_t coord_dim = 0);

  std::size_t vertex_count() const noexcept { return weight_.size(); }
  std::size_t edge_count() const noexcept { return neighbors_.size() / 2; }

  std::span<const Vertex> neighbors(Vertex x) const noexcept {
    return {neighbors_.data() + offsets_[x], offsets_[x + 1] - offsets_[x]};
  }
  std::span<const double> conductances(Vertex x) const noexcept {
    return {conductance_.data() + offsets_[x], offsets_[x + 1] - offsets_[x]};
  }
  std::size_t degree(Vertex x) const noexcept { return offsets_[x + 1] - offsets_[x]; }
  std::size_t max_degree() const noexcept { return max_degree_; }

  double vertex_weight(Vertex x) const noexcept { return weight_[x]; }
  std::span<const double> vertex_weights() const noexcept { return weight_; }
  double total_weight() const noexcept { return total_weight_; }
  double measure(std::span<const Vertex> set) const noexcept;

  // Conductance of xy, or 0 when xy is not an edge.
  double conductance(Vertex x, Vertex y) const noexcept;

  bool unit_weights() const noexcept { return unit_weights_; }

  std::size_t coord_dim() const noexcept { return coord_dim_; }
  std::span<const std::int64_t> coord(Vertex x) const noexcept {
    return {coords_.data() + static_cast<std::size_t>(x) * coord_dim_, coord_dim_};
  }

  // Each undirected edge once, with u < v, sorted.
  std::vector<Edge> edges() const;

  std::span<const std::size_t> offsets() const noexcept { return offsets_; }
  std::span<const Vertex> adjacency() const noexcept { return neighbors_; }

 private:
  std::vector<std::size_t> offsets_{0};
  std::vector<Vertex> neighbors_;
  std::vector<double> conductance_;
  std::vector<double> weight_;
  std::vector<std::int64_t> coords_;
  std::size_t coord_dim_ = 0;
  std::size_t max_degree_ = 0;
  double total_weight_ = 0.0;
  bool unit_weights_ = true;
};

// pi(x) = mu_x / mu(G).
std::vector<double> invariant_measure(const WeightedGraph& g);

// Hop distances from `source`; -1 marks unreachable vertices.
std::vector<int> bfs_distances(const WeightedGraph& g, Vertex source);
std::vector<int> bfs_distances(const WeightedGraph& g, std::span<const Vertex> sources);

// Number of connected components.
std::size_t component_count(const WeightedGraph& g);

struct DiameterResult {
  int value = 0;
  bool exact = true;  // false: certified lower bound from double sweeps
};

inline constexpr std::size_t kDiameterExactCap = 200'000;

DiameterResult diameter(const WeightedGraph& g, std::size_t exact_cap = kDiameterExactCap);

// B(x, r) = { y : d(x, y) <= r }, sorted by vertex id.
std::vector<Vertex> ball(const WeightedGraph& g, Vertex x, int r);

// V(x, r) = mu(B(x, r)) for every r in [0, max distance from x].
std::vector<double> volume_profile(const WeightedGraph& g, Vertex x);

struct AssumptionReport {
  double c_e = 1.0;        // uniform ellipticity constant
  double p_0 = 1.0;        // min_xy mu_xy / mu_x
  double c_v = 1.0;        // d_f-set constant over the checked (x, r)
  double d_f = 0.0;        // exponent the c_v check was run with
  std::size_t max_degree = 0;
  double weight_max = 0.0;  // max_x mu_x
  double weight_min = 0.0;  // min_x mu_x
  double delta = 1.0;       // weight_max / weight_min
  std::size_t centers_checked = 0;
  bool full_enumeration = true;
  bool ellipticity_ok = true;
  bool p0_ok = true;
  bool volume_ok = true;

  bool pass() const noexcept { return ellipticity_ok && p0_ok && volume_ok; }
};

struct AssumptionOptions {
  std::size_t enumeration_cap = 10'000;
  std::size_t sampled_centers = 200;
  std::uint64_t seed = 0x5eed;
};

AssumptionReport check_assumptions(const WeightedGraph& g, double d_f_nominal,
                                   const AssumptionOptions& options = {});

struct VolumeFit {
  double d_f = 0.0;
  double c_v = 0.0;  // max ratio spread of mean V(x,r) against r^d_f over fitted radii
  double r2 = 0.0;
  std::vector<int> radii;
  std::vector<double> mean_log_volume;
};

// Slope of the center-averaged log V(x, r) against log(r + 1/2) over dyadic radii
// 2, 4, ... <= R_N / 4.
VolumeFit volume_growth_fit(const WeightedGraph& g, std::size_t samples,
                            std::uint64_t seed = 1);

}  // namespace fractalmix
