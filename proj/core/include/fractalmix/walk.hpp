#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "fractalmix/graph.hpp"
#include "fractalmix/linalg.hpp"
#include "fractalmix/rng.hpp"

namespace fractalmix {

/// Simple random walk kernel P(x, y) = mu_xy / mu_x, or its lazy version
/// (stay with probability 1/2, else move by P).
///
/// Neighbor draws use a uniform index on unit-weight graphs, a cumulative
/// table when deg(x) <= 8 and an alias table above that.
class WalkKernel {
 public:
  WalkKernel(const WeightedGraph& g, bool lazy);
  WalkKernel(WeightedGraph&&, bool) = delete;  // keeps a pointer to g

  const WeightedGraph& graph() const noexcept { return *g_; }
  bool lazy() const noexcept { return lazy_; }

  // One draw from P(x, .), ignoring laziness.
  Vertex move(Vertex x, CounterRng& rng) const noexcept;

  Vertex step(Vertex x, CounterRng& rng) const noexcept {
    if (lazy_ && rng.coin()) return x;
    return move(x, rng);
  }

  double transition(Vertex x, Vertex y) const noexcept;

  // out = dist K (row vector times kernel). out must not alias dist.
  void apply(std::span<const double> dist, std::span<double> out) const noexcept;
  // out = K f (kernel acting on functions).
  void apply_function(std::span<const double> f, std::span<double> out) const noexcept;

 private:
  const WeightedGraph* g_;
  bool lazy_;
  std::vector<double> table_;    // per CSR slot: cumulative probability or alias threshold
  std::vector<std::uint32_t> alias_;  // per CSR slot: alias offset (degree > 8 only)
};

struct Trackers {
  bool cover = true;
  bool visits = false;
  bool stop_at_cover = false;
};

/// A simulated path X_0, ..., X_steps. `visited` is {X_0, ..., X_steps}, so
/// cover_time is the first t with {X_0, ..., X_t} = V. `visits` counts
/// occurrences including X_0 and sums to steps + 1.
struct Trajectory {
  Vertex start = 0;
  Vertex current = 0;
  std::uint64_t steps = 0;
  std::vector<char> visited;
  std::size_t uncovered = 0;
  std::optional<std::uint64_t> cover_time;
  std::vector<std::uint64_t> visits;

  std::size_t range_size() const noexcept { return visited.size() - uncovered; }
};

Trajectory simulate(const WalkKernel& kernel, Vertex start, std::uint64_t horizon,
                    CounterRng& rng, const Trackers& trackers = {});
Trajectory simulate(const WalkKernel& kernel, Vertex start, std::uint64_t horizon,
                    std::uint64_t seed, const Trackers& trackers = {});

inline constexpr std::uint64_t kNoStepCap = std::numeric_limits<std::uint64_t>::max();

// Cover time of one path; CapacityError past `cap` steps.
std::uint64_t sample_cover_time(const WalkKernel& kernel, Vertex start, CounterRng& rng,
                                std::uint64_t cap = kNoStepCap);

struct CoverTimeSample {
  std::vector<std::uint64_t> times;   // by sample index
  std::vector<std::uint64_t> sorted;  // ascending
  bool lazy = false;
  double mean = 0.0;
  double sd = 0.0;
  double cv = 0.0;

  static CoverTimeSample from_times(std::vector<std::uint64_t> times, bool lazy);
  // Empirical quantile (lower inverse of the empirical CDF).
  std::uint64_t quantile(double q) const;
  // Fraction of samples with tau_cov > t.
  double survival(double t) const noexcept;
};

// Sample i is drawn from make_stream(seed, i), so results are identical for
// any thread count.
CoverTimeSample cover_time_distribution(const WalkKernel& kernel, Vertex start,
                                        std::size_t samples, std::uint64_t seed,
                                        std::size_t threads = 1,
                                        std::uint64_t cap = kNoStepCap);

struct TailFit {
  double c0 = 0.0;
  double slope = 0.0;  // of log survival against t / T_N
  double r2 = 0.0;
  std::size_t points = 0;
};

// Fits log P(tau > t) against t / T_N over the window where the empirical
// survival lies in [1e-3, 1e-1]; c0 = -1 / slope.
TailFit tail_fit(std::span<const std::uint64_t> sorted_samples, double t_n);
inline TailFit tail_fit(const CoverTimeSample& s, double t_n) { return tail_fit(s.sorted, t_n); }

inline constexpr std::size_t kHeatKernelBudget = std::size_t{1} << 27;  // stored entries
inline constexpr double kHeatOpBudget = 5e10;                          // edge relaxations

// Rows P_t(x, .) for t = 0..t_max. p_t(x, y) = row[t][y] / mu_y.
std::vector<std::vector<double>> heat_kernel_rows(const WalkKernel& kernel, Vertex x,
                                                  std::size_t t_max,
                                                  std::size_t budget = kHeatKernelBudget);

// p_t(x, x) for t = 0..t_max without storing rows.
std::vector<double> heat_diagonal(const WalkKernel& kernel, Vertex x, std::size_t t_max);

struct DiagonalFit {
  double ds_half = 0.0;  // -slope
  double r2 = 0.0;
  std::vector<double> t;
  std::vector<double> p;
};

// Slope of log p_t(x, x) against log t over `points` log-spaced times in
// [t_lo, t_hi]. The kernel must be lazy.
DiagonalFit diagonal_decay_fit(const WalkKernel& kernel, Vertex x, std::size_t t_lo,
                               std::size_t t_hi, std::size_t points = 24);

struct Estimate {
  double value = 0.0;
  double stderr_ = 0.0;
  bool exact = false;
};

inline constexpr std::size_t kConfinementExactCap = 50'000;

// P_x(max_{j<=t} d(x, X_j) <= r).
Estimate confinement_probability(const WalkKernel& kernel, Vertex x, int r, std::uint64_t t,
                                 std::size_t samples, std::uint64_t seed,
                                 std::size_t exact_cap = kConfinementExactCap);

// Exact confinement probabilities for t = 0..t_max.
std::vector<double> confinement_curve(const WalkKernel& kernel, Vertex x, int r,
                                      std::size_t t_max,
                                      std::size_t exact_cap = kConfinementExactCap);

struct ExitOptions {
  std::size_t exact_cap = 20'000;
  SolverOptions solver;
  std::size_t threads = 1;
};

// E_x[tau_exit of B(x, r)]: exact Dirichlet solve when the ball is small
// enough, Monte Carlo otherwise.
Estimate mean_exit_time(const WalkKernel& kernel, Vertex x, int r, std::size_t samples,
                        std::uint64_t seed, const ExitOptions& options = {});

struct ExitRow {
  int r = 0;
  double mean_exit = 0.0;
  double stderr_ = 0.0;
};

struct ExitScaling {
  double d_w = 0.0;
  double r2 = 0.0;
  std::vector<ExitRow> rows;
};

// Center-averaged mean exit times per radius and the slope of
// log E[tau_exit] against log(r + 1).
ExitScaling exit_time_scaling(const WalkKernel& kernel, std::span<const Vertex> centers,
                              std::span<const int> radii, std::size_t samples,
                              std::uint64_t seed, const ExitOptions& options = {});

// Local times L(x) = visits_{s<t}(x) / (r_G mu_x). Requires recorded visits.
std::vector<double> local_time_field(const Trajectory& trajectory, const WeightedGraph& g,
                                     double r_g);

inline double modulus_phi(double kappa) {
  return kappa <= 0.0 ? 0.0 : std::sqrt(kappa * (1.0 + std::abs(std::log(kappa))));
}

struct ModulusCurve {
  double kappa = 0.0;
  double phi = 0.0;
  std::vector<double> lambda;
  std::vector<double> probability;
  std::vector<double> max_oscillation;  // per sample
};

// Empirical P(max_{t<=horizon} max_{close pairs} |L_t(x) - L_t(y)| >= lambda phi(kappa)).
// close[x] lists the y != x with normalized resistance R(x, y) <= kappa.
ModulusCurve modulus_of_continuity_stat(const WalkKernel& kernel,
                                        std::span<const std::vector<Vertex>> close, double r_g,
                                        double kappa, std::uint64_t horizon, Vertex start,
                                        std::span<const double> lambdas, std::size_t samples,
                                        std::uint64_t seed, std::size_t threads = 1);

}  // namespace fractalmix
