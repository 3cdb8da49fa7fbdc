#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fractalmix/fractal.hpp"
#include "fractalmix/graph.hpp"
#include "fractalmix/lamplighter.hpp"
#include "fractalmix/resistance.hpp"
#include "fractalmix/walk.hpp"

namespace fractalmix {

struct CvEstimate {
  std::string label;
  std::size_t vertices = 0;
  std::size_t samples = 0;
  double mean = 0.0;
  double sd = 0.0;
  double cv = 0.0;
  double ci_lo = 0.0;  // percentile bootstrap interval for cv
  double ci_hi = 0.0;
};

CvEstimate cv_with_bootstrap(const CoverTimeSample& sample, std::size_t resamples,
                             std::uint64_t seed, double level = 0.95);

struct ConcentrationCase {
  std::string label;
  const WeightedGraph* graph = nullptr;
  Vertex start = 0;
};

// Coefficient of variation of the cover time per case, with bootstrap CIs.
std::vector<CvEstimate> concentration_experiment(std::span<const ConcentrationCase> cases,
                                                 bool lazy, std::size_t samples,
                                                 std::uint64_t seed, std::size_t threads = 1,
                                                 std::size_t resamples = 1000);

// True when cv is strictly decreasing and consecutive CIs do not overlap.
bool cv_strictly_decreasing(std::span<const CvEstimate> cvs, bool require_ci_separation);

struct RangeCoverPair {
  Vertex x = 0;  // ball center
  Vertex z = 0;  // walk start
  std::size_t ball_size = 0;
  double probability = 0.0;  // P_z(Range_t does not contain B_R(x, kappa))
  double stderr_ = 0.0;
};

struct RangeCoverResult {
  double kappa = 0.0;
  std::uint64_t t = 0;
  double envelope = 0.0;  // 2^(1 - t / (4 S_N))
  std::vector<RangeCoverPair> pairs;
  std::size_t worst = 0;  // index of the largest estimate

  // Worst estimate minus z standard errors stays below the envelope.
  bool within_envelope(double z = 2.576) const;
};

// Range_t = {X_0, ..., X_{t-1}}: each sample runs at most t - 1 steps and
// stops once the ball is covered.
RangeCoverResult range_covers_resistance_ball(const WalkKernel& kernel,
                                              const ResistanceSummary& summary, double kappa,
                                              std::uint64_t t,
                                              std::span<const std::pair<Vertex, Vertex>> pairs,
                                              std::size_t samples, std::uint64_t seed,
                                              std::size_t threads = 1);

struct GreenShell {
  int distance = 0;  // d(x, A)
  std::size_t count = 0;
  double mean_green = 0.0;  // mean of g(x, A) over the shell
};

struct Mp12Report {
  std::string label;
  std::size_t vertices = 0;
  double mu_g = 0.0;
  double delta = 1.0;  // max mu_x / min mu_x
  int small_radius = 2;
  double max_log_volume = 0.0;  // max_x log V(x, small_radius)
  double t_mix_u = 0.0;
  bool t_mix_proxy = false;  // true: c * T_N in place of the exact value
  double proxy_constant = 0.0;
  int set_radius = 1;  // A = B(a, set_radius)
  Vertex set_center = 0;
  std::vector<GreenShell> green;
  bool green_monotone = false;
};

struct Mp12Options {
  int small_radius = 2;
  int set_radius = 1;
  double eps = 0.25;
  std::size_t uniform_cap = kUniformMixingCap;
  double d_w = 2.0;               // exponent for the proxy horizon c * R_N^d_w
  double proxy_constant = 0.0;    // used when the graph exceeds uniform_cap
  std::optional<Vertex> set_center;  // default: approximate center from a double sweep
};

Mp12Report mp12_diagnostics(const WeightedGraph& g, const std::string& label,
                            const Mp12Options& options = {});

// A non-increasing shell-mean sequence (relative slack 1e-12) over shells
// with d(x, A) >= 1.
bool green_monotone(std::span<const GreenShell> shells);

struct DichotomyOptions {
  std::vector<double> eps_grid{0.02, 0.05, 0.1, 0.25, 0.5, 0.75, 0.9};
  std::size_t cover_samples = 2000;
  std::size_t collapsed_samples = 2000;
  std::size_t grid_points = 96;
  double alpha = 0.01;               // confidence level of the certified bounds
  double no_cutoff_factor = 3.0;     // lower(eps_min) / upper(1/2) required on every level
  double bounded_spread = 4.0;       // max/min of upper(1/2) / T_N across levels
  double cutoff_window_eps = 0.25;   // window t(eps) / t(1 - eps)
  std::size_t exact_complete_max = 10'000;
  std::size_t pivot_cap = kPivotCap;
  std::uint64_t seed = 1;
  std::size_t threads = 1;
};

struct DichotomyLevel {
  std::string spec;
  std::string regime;
  std::size_t vertices = 0;
  int r_n = 0;
  double d_w = 0.0;
  double t_n = 0.0;
  double s_n = 0.0;
  bool s_n_lower_bound = false;
  double cover_mean_lazy = 0.0;
  double cover_cv_lazy = 0.0;
  double cover_mean = 0.0;  // simple walk; for context
  double half_cover = 0.0;  // 1/2 mean lazy cover time
  bool exact_lamp_marginal = false;
  int zero_ball_radius = -1;
  TvProfile profile;
  std::vector<MixingBracket> brackets;
  RatioBracket window;  // t(eps) / t(1 - eps) at cutoff_window_eps
};

struct DichotomyReport {
  std::string family;
  std::vector<DichotomyLevel> levels;
  std::string verdict;  // "no-cutoff evidence" | "cutoff evidence" | "inconclusive" | "inconclusive/critical"
  std::string reason;
  DichotomyOptions options;
};

DichotomyLevel dichotomy_level(const GraphSpec& spec, const DichotomyOptions& options);
DichotomyReport dichotomy_report(std::span<const GraphSpec> specs, const DichotomyOptions& options);

// The verdict is a pure function of the per-level statistics.
std::pair<std::string, std::string> dichotomy_verdict(std::span<const DichotomyLevel> levels,
                                                      const DichotomyOptions& options);

// Time grid 0 = t_0 < ... spanning [0, t_max]: dense near 0, then linear.
std::vector<std::uint64_t> default_time_grid(std::uint64_t t_max, std::size_t points);

}  // namespace fractalmix
