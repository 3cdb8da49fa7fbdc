#include "fractalmix/lamplighter.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <numeric>

#include "fractalmix/errors.hpp"
#include "fractalmix/parallel.hpp"

namespace fractalmix {

namespace {

constexpr double kLn2 = 0.69314718055994530942;

std::vector<double> log_factorials(std::size_t n) {
  std::vector<double> lf(n + 1, 0.0);
  for (std::size_t i = 2; i <= n; ++i) lf[i] = lf[i - 1] + std::log(static_cast<double>(i));
  return lf;
}

double log_choose(const std::vector<double>& lf, std::size_t a, std::size_t b) {
  return lf[a] - lf[b] - lf[a - b];
}

// tail[k] = P(Bin(m, 1/2) >= k) for k = 0..m+1.
std::vector<double> binomial_half_tail(const std::vector<double>& lf, std::size_t m) {
  std::vector<double> tail(m + 2, 0.0);
  const double base = -static_cast<double>(m) * kLn2;
  double acc = 0.0;
  for (std::size_t k = m + 1; k-- > 0;) {
    acc += std::exp(base + log_choose(lf, m, k));
    tail[k] = std::min(acc, 1.0);
  }
  tail[0] = 1.0;
  return tail;
}

double total_variation(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return 0.5 * s;
}

}  // namespace

void sws_step(const WalkKernel& kernel, LamplighterState& s, CounterRng& rng) {
  s.lamps[s.position] = rng.coin() ? 1 : 0;
  s.position = kernel.step(s.position, rng);
  s.lamps[s.position] = rng.coin() ? 1 : 0;
}

WreathChain::WreathChain(const WalkKernel& kernel, std::size_t cap)
    : kernel_(&kernel), n_(kernel.graph().vertex_count()) {
  if (!kernel.lazy()) throw ValidationError("wreath chain: lazy driving kernel required");
  if (n_ >= 40 || (n_ << n_) > cap) throw CapacityError("wreath chain: state space exceeds exact cap");
}

double WreathChain::transition(std::size_t from, std::size_t to) const noexcept {
  const std::uint64_t mask = (std::uint64_t{1} << n_) - 1;
  const auto x = static_cast<Vertex>(from >> n_), y = static_cast<Vertex>(to >> n_);
  const std::uint64_t f = from & mask, g = to & mask;
  std::uint64_t free = std::uint64_t{1} << x;
  if (x != y) free |= std::uint64_t{1} << y;
  if ((f & ~free) != (g & ~free)) return 0.0;
  if (x == y) return 0.25;
  return kernel_->graph().conductance(x, y) / kernel_->graph().vertex_weight(x) / 8.0;
}

void WreathChain::apply(std::span<const double> dist, std::span<double> out) const {
  const auto& g = kernel_->graph();
  const std::uint64_t mask = (std::uint64_t{1} << n_) - 1;
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t s = 0; s < dist.size(); ++s) {
    const double m = dist[s];
    if (m == 0.0) continue;
    const auto x = static_cast<Vertex>(s >> n_);
    const std::uint64_t bx = std::uint64_t{1} << x;
    const std::uint64_t f = s & mask & ~bx;
    out[index(x, f)] += 0.25 * m;
    out[index(x, f | bx)] += 0.25 * m;
    const auto nb = g.neighbors(x);
    const auto mu = g.conductances(x);
    for (std::size_t k = 0; k < nb.size(); ++k) {
      const Vertex y = nb[k];
      const std::uint64_t by = std::uint64_t{1} << y;
      const std::uint64_t base = f & ~by;
      const double w = m * mu[k] / g.vertex_weight(x) / 8.0;
      out[index(y, base)] += w;
      out[index(y, base | bx)] += w;
      out[index(y, base | by)] += w;
      out[index(y, base | bx | by)] += w;
    }
  }
}

std::vector<double> WreathChain::stationary() const {
  const auto pi = invariant_measure(kernel_->graph());
  std::vector<double> out(state_count());
  const double scale = std::ldexp(1.0, -static_cast<int>(n_));
  for (std::size_t s = 0; s < out.size(); ++s) out[s] = pi[s >> n_] * scale;
  return out;
}

std::vector<double> WreathChain::position_marginal(std::span<const double> dist) const {
  std::vector<double> out(n_, 0.0);
  for (std::size_t s = 0; s < dist.size(); ++s) out[s >> n_] += dist[s];
  return out;
}

std::vector<double> exact_tv_curve(const WalkKernel& kernel, std::uint64_t start_lamps,
                                   Vertex start, std::size_t t_max, std::size_t cap) {
  const WreathChain chain(kernel, cap);
  if (start >= chain.vertex_count() || start_lamps >> chain.vertex_count())
    throw ValidationError("exact_tv: start state out of range");
  const auto pi = chain.stationary();
  std::vector<double> cur(chain.state_count(), 0.0), next(chain.state_count());
  cur[chain.index(start, start_lamps)] = 1.0;
  std::vector<double> tv(t_max + 1);
  tv[0] = total_variation(cur, pi);
  for (std::size_t t = 1; t <= t_max; ++t) {
    chain.apply(cur, next);
    cur.swap(next);
    tv[t] = total_variation(cur, pi);
  }
  return tv;
}

TvProfile exact_tv_profile(const WalkKernel& kernel, std::uint64_t start_lamps, Vertex start,
                           std::size_t t_max, std::size_t cap) {
  std::vector<std::uint64_t> t(t_max + 1);
  std::iota(t.begin(), t.end(), std::uint64_t{0});
  return make_tv_profile(std::move(t), exact_tv_curve(kernel, start_lamps, start, t_max, cap), {},
                         {});
}

CollapsedState collapsed_sample(const WalkKernel& kernel, Vertex start, std::uint64_t t,
                                CounterRng& rng) {
  Trackers tr;
  const Trajectory path = simulate(kernel, start, t, rng, tr);
  CollapsedState s;
  s.visited = path.visited;
  s.position = path.current;
  s.switched = t >= 1;
  s.visited_count = path.range_size();
  return s;
}

LamplighterState materialize(const CollapsedState& state, std::span<const char> initial,
                             CounterRng& rng) {
  if (initial.size() != state.visited.size())
    throw ValidationError("materialize: lamp vector length mismatch");
  LamplighterState out;
  out.position = state.position;
  out.lamps.assign(initial.begin(), initial.end());
  if (state.switched)
    for (std::size_t v = 0; v < out.lamps.size(); ++v)
      if (state.visited[v]) out.lamps[v] = rng.coin() ? 1 : 0;
  return out;
}

CollapsedRun collapsed_run(const WalkKernel& kernel, Vertex start,
                           std::span<const std::uint64_t> grid, std::size_t samples,
                           std::uint64_t seed, int zero_ball_radius, std::size_t threads) {
  const auto& g = kernel.graph();
  const std::size_t n = g.vertex_count();
  if (start >= n) throw ValidationError("collapsed_run: start out of range");
  if (!std::is_sorted(grid.begin(), grid.end()))
    throw ValidationError("collapsed_run: time grid must be ascending");
  CollapsedRun run;
  run.grid.assign(grid.begin(), grid.end());
  run.vertex_count = n;
  run.samples = samples;
  run.zero_ball_radius = zero_ball_radius;
  run.unrandomized.assign(grid.size(), std::vector<std::uint32_t>(samples));
  if (zero_ball_radius >= 0) run.zero_ball.assign(grid.size(), std::vector<char>(samples));

  parallel_for(samples, threads, [&](std::size_t i) {
    CounterRng rng = make_stream(seed, i);
    CounterRng lamp_rng = make_stream(seed ^ 0x6c616d7073ULL, i);
    std::vector<char> visited(n, 0), lit(n, 0);
    std::vector<int> dist;
    std::deque<Vertex> queue;
    visited[start] = 1;
    lit[start] = lamp_rng.coin() ? 1 : 0;
    std::size_t covered = 1;
    Vertex x = start;
    std::uint64_t t = 0;
    for (std::size_t k = 0; k < grid.size(); ++k) {
      while (t < grid[k]) {
        x = kernel.step(x, rng);
        ++t;
        if (!visited[x]) {
          visited[x] = 1;
          lit[x] = lamp_rng.coin() ? 1 : 0;
          ++covered;
        }
      }
      const bool switched = t >= 1;
      run.unrandomized[k][i] = static_cast<std::uint32_t>(switched ? n - covered : n);
      if (zero_ball_radius < 0) continue;
      // Some y has every lamp within distance r off iff d(y, lit set) > r.
      dist.assign(n, -1);
      queue.clear();
      if (switched)
        for (Vertex v = 0; v < n; ++v)
          if (visited[v] && lit[v]) {
            dist[v] = 0;
            queue.push_back(v);
          }
      bool hit = queue.empty();
      while (!queue.empty() && !hit) {
        const Vertex v = queue.front();
        queue.pop_front();
        for (const Vertex y : g.neighbors(v))
          if (dist[y] < 0) {
            dist[y] = dist[v] + 1;
            if (dist[y] > zero_ball_radius) hit = true;
            queue.push_back(y);
          }
      }
      if (!hit)
        hit = std::any_of(dist.begin(), dist.end(), [&](int d) { return d < 0 || d > zero_ball_radius; });
      run.zero_ball[k][i] = hit ? 1 : 0;
    }
  });
  return run;
}

double dkw_epsilon(std::size_t samples, double alpha) {
  if (samples == 0) return 1.0;
  return std::sqrt(std::log(2.0 / alpha) / (2.0 * static_cast<double>(samples)));
}

UpperBound tv_upper_bound(const CoverTimeSample& lazy_cover, double s_n, std::uint64_t t,
                          std::optional<double> walk_tv, double inflate) {
  if (t < 1) throw ValidationError("tv_upper_bound: t must be >= 1");
  UpperBound b;
  b.tail = std::min(1.0, lazy_cover.survival(static_cast<double>(t)) + inflate);
  const double walk_term = std::min(1.0, std::sqrt(s_n) / (2.0 * std::sqrt(static_cast<double>(t))));
  b.crude = std::clamp(b.tail + walk_term, 0.0, 1.0);
  if (walk_tv) b.sharp = std::clamp(b.tail + *walk_tv, 0.0, 1.0);
  return b;
}

std::vector<double> walk_tv_curve(const WalkKernel& kernel, Vertex start, std::size_t t_max) {
  const auto& g = kernel.graph();
  const std::size_t n = g.vertex_count();
  if (start >= n) throw ValidationError("walk_tv_curve: start out of range");
  const auto pi = invariant_measure(g);
  std::vector<double> cur(n, 0.0), next(n), tv(t_max + 1);
  cur[start] = 1.0;
  tv[0] = total_variation(cur, pi);
  std::size_t t = 1;
  for (; t <= t_max && tv[t - 1] >= 1e-14; ++t) {
    kernel.apply(cur, next);
    cur.swap(next);
    tv[t] = total_variation(cur, pi);
  }
  for (; t <= t_max; ++t) tv[t] = tv[t - 1];
  return tv;
}

LowerBound tv_lower_bound_statistic(std::span<const std::uint32_t> u, std::size_t n, double alpha) {
  if (u.empty()) throw ValidationError("tv_lower_bound_statistic: no samples");
  std::map<std::uint32_t, std::size_t> counts;
  for (const auto v : u) {
    if (v > n) throw ValidationError("tv_lower_bound_statistic: count exceeds vertex count");
    ++counts[v];
  }
  const auto lf = log_factorials(n);
  const double m = static_cast<double>(u.size());
  // P(Z >= a) under the collapsed law and under Bin(n, 1/2).
  std::vector<double> emp(n + 2, 0.0);
  for (const auto& [val, c] : counts) {
    const auto tail = binomial_half_tail(lf, n - val);
    const double w = static_cast<double>(c) / m;
    for (std::size_t a = 0; a <= n + 1; ++a) {
      const double p = a <= val ? 1.0 : (a - val <= n - val + 1 ? tail[a - val] : 0.0);
      emp[a] += w * p;
    }
  }
  const auto ref = binomial_half_tail(lf, n);
  LowerBound b;
  for (std::size_t a = 0; a <= n + 1; ++a) b.raw = std::max(b.raw, std::abs(emp[a] - ref[a]));
  b.correction = dkw_epsilon(u.size(), alpha);
  b.value = std::max(0.0, b.raw - b.correction);
  return b;
}

double zero_ball_union_term(const WeightedGraph& g, int r) {
  double s = 0.0;
  for (Vertex y = 0; y < g.vertex_count(); ++y)
    s += std::ldexp(1.0, -static_cast<int>(std::min<std::size_t>(ball(g, y, r).size(), 2000)));
  return s;
}

int zero_ball_radius_formula(double d_f, double c_tilde, double c_v, int r_n) {
  return static_cast<int>(
      std::ceil(std::pow(2.0 * d_f * c_tilde * c_v * std::log2(static_cast<double>(r_n)), 1.0 / d_f)));
}

void check_zero_ball_radius(int r, int r_n) {
  if (r < 0 || 4.0 * r >= static_cast<double>(r_n))
    throw ValidationError("zero-ball bound: ball construction degenerate (r >= R_N / 4)");
}

int zero_ball_radius_auto(const WeightedGraph& g, int r_n, double target) {
  for (int r = 1; 4.0 * r < static_cast<double>(r_n); ++r)
    if (zero_ball_union_term(g, r) <= target) return r;
  throw ValidationError("zero-ball bound: ball construction degenerate (r >= R_N / 4)");
}

LowerBound tv_lower_bound_zeroball(std::span<const char> hits, double union_term, double alpha) {
  if (hits.empty()) throw ValidationError("tv_lower_bound_zeroball: no samples");
  const double m = static_cast<double>(hits.size());
  const double p = static_cast<double>(std::count(hits.begin(), hits.end(), 1)) / m;
  LowerBound b;
  b.raw = p - union_term;
  b.correction = std::sqrt(std::log(1.0 / alpha) / (2.0 * m));
  b.value = std::max(0.0, b.raw - b.correction);
  return b;
}

double tv_exchangeable_exact(std::span<const double> law, std::size_t k) {
  if (k > 10'000) throw CapacityError("tv_exchangeable_exact: more than 10^4 lamps");
  if (law.size() != k + 1) throw ValidationError("tv_exchangeable_exact: law must have k + 1 entries");
  const auto lf = log_factorials(k);
  std::vector<std::size_t> support;
  std::vector<double> log_w;  // log p_j - log C(k, j) - (k - j) log 2
  for (std::size_t j = 0; j <= k; ++j) {
    if (law[j] < 0) throw ValidationError("tv_exchangeable_exact: negative probability");
    if (law[j] <= 1e-20) continue;
    support.push_back(j);
    log_w.push_back(std::log(law[j]) - log_choose(lf, k, j) - static_cast<double>(k - j) * kLn2);
  }
  const double log_uniform = -static_cast<double>(k) * kLn2;
  double tv = 0.0;
  std::vector<double> terms;
  for (std::size_t z = 0; z <= k; ++z) {
    // P(one configuration with zero-set size z).
    terms.clear();
    for (std::size_t i = 0; i < support.size() && support[i] <= z; ++i)
      terms.push_back(log_w[i] + log_choose(lf, z, support[i]));
    if (terms.empty()) continue;
    const double top = *std::max_element(terms.begin(), terms.end());
    double s = 0.0;
    for (const double v : terms) s += std::exp(v - top);
    const double log_p = top + std::log(s);
    if (log_p <= log_uniform) continue;
    const double lc = log_choose(lf, k, z);
    tv += std::exp(lc + log_p) * -std::expm1(log_uniform - log_p);
  }
  return std::min(tv, 1.0);
}

std::vector<std::vector<double>> complete_graph_unvisited_law(std::size_t n, std::size_t t_max) {
  if (n < 2) throw ValidationError("complete graph: n must be >= 2");
  std::vector<std::vector<double>> out(t_max + 1, std::vector<double>(n, 0.0));
  out[0][n - 1] = 1.0;
  const double others = static_cast<double>(n - 1);
  for (std::size_t t = 1; t <= t_max; ++t) {
    const auto& prev = out[t - 1];
    auto& cur = out[t];
    for (std::size_t u = 0; u < n; ++u) {
      if (prev[u] == 0.0) continue;
      const double p_new = 0.5 * static_cast<double>(u) / others;
      cur[u] += prev[u] * (1.0 - p_new);
      if (u > 0) cur[u - 1] += prev[u] * p_new;
    }
  }
  return out;
}

std::vector<double> complete_graph_lamp_tv(std::size_t n, std::size_t t_max) {
  if (n < 2) throw ValidationError("complete graph: n must be >= 2");
  std::vector<double> tv(t_max + 1);
  tv[0] = -std::expm1(-static_cast<double>(n) * kLn2);
  std::vector<double> law(n, 0.0), next(n);
  law[n - 1] = 1.0;
  const double others = static_cast<double>(n - 1);
  for (std::size_t t = 1; t <= t_max; ++t) {
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t u = 0; u < n; ++u) {
      if (law[u] == 0.0) continue;
      const double p_new = 0.5 * static_cast<double>(u) / others;
      next[u] += law[u] * (1.0 - p_new);
      if (u > 0) next[u - 1] += law[u] * p_new;
    }
    law.swap(next);
    tv[t] = tv_exchangeable_exact(law, n - 1);
  }
  return tv;
}

double complete_graph_cover_mean(std::size_t n, bool lazy) {
  double h = 0.0;
  for (std::size_t k = 1; k < n; ++k) h += 1.0 / static_cast<double>(k);
  return (lazy ? 2.0 : 1.0) * static_cast<double>(n - 1) * h;
}

TvProfile make_tv_profile(std::vector<std::uint64_t> t, std::vector<double> exact,
                          std::vector<double> lower, std::vector<double> upper) {
  const std::size_t m = t.size();
  if (!std::is_sorted(t.begin(), t.end()) || std::adjacent_find(t.begin(), t.end()) != t.end())
    throw ValidationError("tv profile: times must be strictly increasing");
  const double nan = std::numeric_limits<double>::quiet_NaN();
  if (lower.empty()) lower.assign(m, nan);
  if (upper.empty()) upper.assign(m, nan);
  if ((!exact.empty() && exact.size() != m) || lower.size() != m || upper.size() != m)
    throw ValidationError("tv profile: column length mismatch");
  // TV from a fixed start is non-increasing, so an upper bound at t holds
  // for every later time and a lower bound at t for every earlier one.
  double best = nan;
  for (std::size_t i = 0; i < m; ++i) {
    if (!std::isnan(upper[i])) best = std::isnan(best) ? upper[i] : std::min(best, upper[i]);
    upper[i] = best;
  }
  best = nan;
  for (std::size_t i = m; i-- > 0;) {
    if (!std::isnan(lower[i])) best = std::isnan(best) ? lower[i] : std::max(best, lower[i]);
    lower[i] = best;
  }
  return {std::move(t), std::move(exact), std::move(lower), std::move(upper)};
}

std::vector<MixingBracket> mixing_profile(const TvProfile& p, std::span<const double> eps_grid) {
  std::vector<MixingBracket> out;
  for (const double eps : eps_grid) {
    if (!(eps > 0.0 && eps < 1.0)) throw ValidationError("mixing_profile: epsilon outside (0, 1)");
    MixingBracket b;
    b.eps = eps;
    for (std::size_t i = 0; i < p.t.size(); ++i)
      if (!std::isnan(p.upper[i]) && p.upper[i] <= eps) {
        b.upper = p.t[i];
        break;
      }
    b.lower = 0;
    for (std::size_t i = p.t.size(); i-- > 0;)
      if (!std::isnan(p.lower[i]) && p.lower[i] > eps) {
        b.lower = p.t[i] + 1;
        break;
      }
    if (!p.exact.empty())
      for (std::size_t i = 0; i < p.t.size(); ++i)
        if (p.exact[i] <= eps) {
          b.exact = p.t[i];
          break;
        }
    out.push_back(b);
  }
  return out;
}

RatioBracket cutoff_ratio(const MixingBracket& a, const MixingBracket& b) {
  RatioBracket r;
  if (a.lower && b.upper && *b.upper > 0)
    r.lo = static_cast<double>(*a.lower) / static_cast<double>(*b.upper);
  if (a.upper && b.lower)
    r.hi = *b.lower > 0 ? static_cast<double>(*a.upper) / static_cast<double>(*b.lower)
                        : std::numeric_limits<double>::infinity();
  if (a.exact && b.exact && *b.exact > 0)
    r.exact = static_cast<double>(*a.exact) / static_cast<double>(*b.exact);
  return r;
}

}  // namespace fractalmix
