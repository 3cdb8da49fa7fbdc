#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "fractalmix/graph.hpp"
#include "fractalmix/linalg.hpp"
#include "fractalmix/walk.hpp"

namespace fractalmix {

// R_eff(A, B) = 1 / min{ E(f, f) : f = 1 on A, f = 0 on B }.
double effective_resistance(const LaplacianSystem& sys, std::span<const Vertex> a,
                            std::span<const Vertex> b, const SolverOptions& options = {},
                            SolveStats* stats = nullptr);
double effective_resistance(const LaplacianSystem& sys, Vertex x, Vertex y,
                            const SolverOptions& options = {}, SolveStats* stats = nullptr);

/// All pairwise effective resistances, read from the inverse of the
/// Laplacian grounded at vertex 0: R(x, y) = G_xx - 2 G_xy + G_yy.
class PairwiseResistance {
 public:
  PairwiseResistance(std::size_t n, std::vector<double> values)
      : n_(n), values_(std::move(values)) {}

  std::size_t size() const noexcept { return n_; }
  double operator()(Vertex x, Vertex y) const noexcept {
    return values_[static_cast<std::size_t>(x) * n_ + y];
  }
  std::span<const double> row(Vertex x) const noexcept {
    return {values_.data() + static_cast<std::size_t>(x) * n_, n_};
  }

 private:
  std::size_t n_;
  std::vector<double> values_;
};

inline constexpr std::size_t kPivotCap = 5000;

PairwiseResistance pairwise_resistance(const WeightedGraph& g, std::size_t cap = kPivotCap);

struct ResistanceOptions {
  std::size_t pivot_cap = kPivotCap;
  bool allow_heuristic = false;  // above the cap: lower bound from candidate pairs
  std::size_t heuristic_sweeps = 4;
  SolverOptions solver;
};

struct ResistanceSummary {
  double r_max = 0.0;  // r(G)
  double s_n = 0.0;    // mu(G) r(G)
  Vertex x = 0;
  Vertex y = 0;
  bool lower_bound = false;
  std::shared_ptr<const PairwiseResistance> pairwise;  // null for heuristic summaries

  double normalized(Vertex a, Vertex b) const noexcept { return (*pairwise)(a, b) / r_max; }
};

ResistanceSummary resistance_summary(const LaplacianSystem& sys,
                                     const ResistanceOptions& options = {});

// Non-lazy expected hitting times E_z[tau_x] for every z; lazy values are
// exactly twice as large.
std::vector<double> hitting_time(const LaplacianSystem& sys, Vertex target, bool lazy = false,
                                 const SolverOptions& options = {});

// { y : R(x, y) / r(G) <= kappa }, sorted.
std::vector<Vertex> resistance_ball(const ResistanceSummary& summary, Vertex x, double kappa);

struct ResistanceSample {
  Vertex x = 0;
  Vertex y = 0;
  int d = 0;
  double reff = 0.0;
};

struct ResistanceFit {
  double exponent = 0.0;
  double r2 = 0.0;
  std::vector<ResistanceSample> pairs;
};

// Slope of log R_eff(x, y) against log d(x, y) over sampled pairs with
// 1 <= d <= R_N / 4. Distances are drawn log-uniformly, then a partner at
// that distance is picked uniformly.
ResistanceFit resistance_exponent_fit(const WeightedGraph& g, const PairwiseResistance& reff,
                                      std::size_t samples, std::uint64_t seed);

// g(x, y) = sum_{t <= horizon} p_t(x, y) for the lazy kernel, as a row over y.
std::vector<double> truncated_green(const WalkKernel& kernel, Vertex x, std::size_t horizon);

// g(x, A) = sum_{y in A} g(x, y) for every x, from one propagation of 1_A.
std::vector<double> truncated_green_of_set(const WalkKernel& kernel, std::span<const Vertex> a,
                                           std::size_t horizon);

// Random connected subsets grown by randomized BFS from random roots, with
// sizes uniform in [1, max_size]. A heuristic: the inequality quantifies over
// all subsets.
std::vector<std::vector<Vertex>> sample_connected_subsets(const WeightedGraph& g,
                                                          std::size_t count, std::size_t max_size,
                                                          std::uint64_t seed);

struct FkRow {
  std::size_t size = 0;
  double mu_s = 0.0;
  double lambda1 = 0.0;
  double product = 0.0;  // lambda1 * mu(S)^(d_w / d_f)
};

struct FkResult {
  double min_product = 0.0;
  std::vector<FkRow> rows;
};

inline constexpr std::size_t kEigenCap = 3000;

// Smallest Dirichlet eigenvalue of L_S f = lambda D_S f on each subset, by
// inverse power iteration (tolerance 1e-9 on the eigenvalue).
double dirichlet_eigenvalue(const WeightedGraph& g, std::span<const Vertex> subset,
                            std::size_t cap = kEigenCap);
FkResult faber_krahn_check(const WeightedGraph& g, std::span<const std::vector<Vertex>> subsets,
                           double d_w, double d_f, std::size_t cap = kEigenCap);

inline constexpr std::size_t kUniformMixingCap = 5000;

// max_{x,y} |P_t(x, y) / pi(y) - 1| of the lazy kernel at time t.
class UniformDistance {
 public:
  explicit UniformDistance(const WeightedGraph& g, std::size_t cap = kUniformMixingCap);
  double operator()(std::uint64_t t) const;
  // Smallest t with distance <= eps.
  std::uint64_t mixing_time(double eps) const;

 private:
  std::size_t n_;
  std::vector<double> lambda_;  // eigenvalues of the symmetrized lazy kernel, top one removed
  std::vector<double> weight_;  // weight_[i * n + x] = phi_i(x)^2 / pi(x)
};

std::uint64_t uniform_mixing_time(const WalkKernel& kernel, double eps,
                                  std::size_t cap = kUniformMixingCap);

// Greedy cover by balls of radius floor(eta R_N): the lowest-id uncovered
// vertex becomes the next center.
std::vector<Vertex> ball_cover(const WeightedGraph& g, double eta, int r_n);

}  // namespace fractalmix
