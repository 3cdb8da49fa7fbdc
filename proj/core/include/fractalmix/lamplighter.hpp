#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "fractalmix/graph.hpp"
#include "fractalmix/rng.hpp"
#include "fractalmix/walk.hpp"

namespace fractalmix {

struct LamplighterState {
  std::vector<char> lamps;  // one 0/1 entry per vertex
  Vertex position = 0;
};

/// Switch-walk-switch move driven by a lazy kernel: randomize the lamp at the
/// current vertex, take one lazy step, randomize the lamp at the landing
/// vertex. After t >= 1 moves the randomized lamps are exactly those on
/// {X_0, ..., X_t}; at t = 0 no lamp has been touched.
void sws_step(const WalkKernel& lazy_kernel, LamplighterState& state, CounterRng& rng);

inline constexpr std::size_t kExactStateCap = (std::size_t{1} << 20) * 20;

/// Dense distribution over Z_2 wreath G, state index = position * 2^n + lamps
/// (bit v of `lamps` is the lamp at vertex v).
class WreathChain {
 public:
  explicit WreathChain(const WalkKernel& lazy_kernel, std::size_t cap = kExactStateCap);
  WreathChain(WalkKernel&&, std::size_t = kExactStateCap) = delete;

  std::size_t vertex_count() const noexcept { return n_; }
  std::size_t state_count() const noexcept { return n_ << n_; }
  std::size_t index(Vertex position, std::uint64_t lamps) const noexcept {
    return (static_cast<std::size_t>(position) << n_) | lamps;
  }
  // P*((f, x), (g, y)).
  double transition(std::size_t from, std::size_t to) const noexcept;
  void apply(std::span<const double> dist, std::span<double> out) const;
  // pi*(f, x) = 2^-n pi(x).
  std::vector<double> stationary() const;
  // Marginal law of the walker position.
  std::vector<double> position_marginal(std::span<const double> dist) const;

 private:
  const WalkKernel* kernel_;
  std::size_t n_;
};

/// Per-time TV record. `t` is strictly increasing; `exact` is empty when no
/// exact values exist, and lower/upper hold monotone-corrected envelopes
/// (NaN where absent).
struct TvProfile {
  std::vector<std::uint64_t> t;
  std::vector<double> exact;
  std::vector<double> lower;
  std::vector<double> upper;
};

// Exact TV to pi* for t = 0..t_max from (start_lamps, start).
std::vector<double> exact_tv_curve(const WalkKernel& lazy_kernel, std::uint64_t start_lamps,
                                   Vertex start, std::size_t t_max,
                                   std::size_t cap = kExactStateCap);
TvProfile exact_tv_profile(const WalkKernel& lazy_kernel, std::uint64_t start_lamps, Vertex start,
                           std::size_t t_max, std::size_t cap = kExactStateCap);

/// Sufficient statistic of the chain started with every lamp off:
/// `visited` = {X_0, ..., X_t} of the driving walk; lamps there are uniform
/// once `switched` (t >= 1), all other lamps keep their initial values.
struct CollapsedState {
  std::vector<char> visited;
  Vertex position = 0;
  bool switched = false;
  std::size_t visited_count = 0;

  // Number of lamps still forced to their initial value.
  std::size_t unrandomized() const noexcept {
    return switched ? visited.size() - visited_count : visited.size();
  }
};

CollapsedState collapsed_sample(const WalkKernel& lazy_kernel, Vertex start, std::uint64_t t,
                                CounterRng& rng);
LamplighterState materialize(const CollapsedState& state, std::span<const char> initial_lamps,
                             CounterRng& rng);

/// Collapsed Monte Carlo over a time grid from (all lamps off, start). Lamp
/// values are drawn at first visit, which gives the correct joint law at each
/// fixed time. zero_ball[k][i] is set when some radius-r ball holds no lit
/// lamp at grid[k] in sample i (only when zero_ball_radius >= 0).
struct CollapsedRun {
  std::vector<std::uint64_t> grid;
  std::size_t vertex_count = 0;
  std::size_t samples = 0;
  std::vector<std::vector<std::uint32_t>> unrandomized;  // [grid][sample]
  std::vector<std::vector<char>> zero_ball;              // [grid][sample]
  int zero_ball_radius = -1;
};

CollapsedRun collapsed_run(const WalkKernel& lazy_kernel, Vertex start,
                           std::span<const std::uint64_t> grid, std::size_t samples,
                           std::uint64_t seed, int zero_ball_radius = -1,
                           std::size_t threads = 1);

// sqrt(log(2 / alpha) / (2 M)): uniform deviation of an empirical CDF.
double dkw_epsilon(std::size_t samples, double alpha = 0.01);

struct UpperBound {
  double tail = 0.0;   // P(tau_cov > t), optionally inflated
  double crude = 1.0;  // tail + min(1, sqrt(S_N) / (2 sqrt(t)))
  double sharp = std::numeric_limits<double>::quiet_NaN();  // tail + exact walk TV
};

// Upper bound on TV at time t >= 1 from the LAZY cover-time sample. `inflate`
// is added to the empirical tail (0 for the plain formula, dkw_epsilon for a
// bound holding at the matching confidence).
UpperBound tv_upper_bound(const CoverTimeSample& lazy_cover, double s_n, std::uint64_t t,
                          std::optional<double> walk_tv = std::nullopt, double inflate = 0.0);

// TV of the lazy walk law from `start` to pi for t = 0..t_max. Stops powering
// once TV < 1e-14 and repeats that value, which stays a valid upper bound.
std::vector<double> walk_tv_curve(const WalkKernel& lazy_kernel, Vertex start, std::size_t t_max);

struct LowerBound {
  double value = 0.0;    // certified, clipped at 0
  double raw = 0.0;      // plug-in estimate before the confidence correction
  double correction = 0.0;
};

// Z = (#zero lamps) = U + Bin(n - U, 1/2) against Bin(n, 1/2), sup over
// thresholds, minus dkw_epsilon(M, alpha).
LowerBound tv_lower_bound_statistic(std::span<const std::uint32_t> unrandomized, std::size_t n,
                                    double alpha = 0.01);

// Sum over y of 2^-#B(y, r): an upper bound on pi*(some radius-r ball all off).
double zero_ball_union_term(const WeightedGraph& g, int r);
// r = ceil((2 d_f c_tilde c_v log2 R_N)^(1 / d_f)).
int zero_ball_radius_formula(double d_f, double c_tilde, double c_v, int r_n);
// Smallest r >= 1 whose union term is <= target; throws "ball construction
// degenerate" when r would reach R_N / 4.
int zero_ball_radius_auto(const WeightedGraph& g, int r_n, double target = 0.01);
void check_zero_ball_radius(int r, int r_n);

// P(some zero ball) - union term - one-sided Hoeffding term, clipped at 0.
LowerBound tv_lower_bound_zeroball(std::span<const char> hits, double union_term,
                                   double alpha = 0.01);

// Exact TV between the law of k exchangeable lamps (zeros on a uniformly
// placed set of size U, uniform elsewhere) and uniform on {0,1}^k. law[j] =
// P(U = j), j = 0..k.
double tv_exchangeable_exact(std::span<const double> law, std::size_t k);

// Law of U_t for the lazy lamplighter walk on K_n: U_t is the number of
// vertices other than the start not yet visited; returned for t = 0..t_max
// (index [t][j], j = 0..n-1).
std::vector<std::vector<double>> complete_graph_unvisited_law(std::size_t n, std::size_t t_max);

// Exact lamp-marginal TV profile on K_n for t = 0..t_max. At t = 0 every lamp
// is off; for t >= 1 the start lamp is uniform and the other n - 1 lamps are
// exchangeable.
std::vector<double> complete_graph_lamp_tv(std::size_t n, std::size_t t_max);

// Expected cover times of K_n: (n-1) H_{n-1} for the simple walk, twice that lazy.
double complete_graph_cover_mean(std::size_t n, bool lazy);

struct MixingBracket {
  double eps = 0.0;
  std::optional<std::uint64_t> lower;  // t_mix(eps) >= lower
  std::optional<std::uint64_t> upper;  // t_mix(eps) <= upper
  std::optional<std::uint64_t> exact;
};

/// Applies the envelope corrections: running minimum of the upper bound
/// forward in time, running maximum of the lower bound backward in time.
TvProfile make_tv_profile(std::vector<std::uint64_t> t, std::vector<double> exact,
                          std::vector<double> lower, std::vector<double> upper);

/// For each eps: upper = first grid t with upper <= eps; lower = (last grid t
/// with lower > eps) + 1, or 0 when none; exact = first grid t with
/// exact <= eps. eps must lie in (0, 1).
std::vector<MixingBracket> mixing_profile(const TvProfile& profile, std::span<const double> eps);

// Bracket of t_mix(eps) / t_mix(1 - eps) from two brackets; NaN where a side is missing.
struct RatioBracket {
  double lo = std::numeric_limits<double>::quiet_NaN();
  double hi = std::numeric_limits<double>::quiet_NaN();
  double exact = std::numeric_limits<double>::quiet_NaN();
};
RatioBracket cutoff_ratio(const MixingBracket& eps, const MixingBracket& one_minus_eps);

}  // namespace fractalmix
