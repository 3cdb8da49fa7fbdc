#include "fractalmix/walk.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "fractalmix/errors.hpp"
#include "fractalmix/fit.hpp"
#include "fractalmix/parallel.hpp"

namespace fractalmix {

namespace {
constexpr std::size_t kCumulativeMaxDegree = 8;
}

WalkKernel::WalkKernel(const WeightedGraph& g, bool lazy) : g_(&g), lazy_(lazy) {
  if (g.unit_weights()) return;
  const auto offsets = g.offsets();
  table_.assign(g.adjacency().size(), 0.0);
  alias_.assign(g.adjacency().size(), 0);
  std::vector<double> scaled;
  std::vector<std::uint32_t> small, large;
  for (Vertex x = 0; x < g.vertex_count(); ++x) {
    const auto mu = g.conductances(x);
    const std::size_t deg = mu.size(), off = offsets[x];
    const double total = g.vertex_weight(x);
    if (deg <= kCumulativeMaxDegree) {
      double acc = 0.0;
      for (std::size_t k = 0; k < deg; ++k) {
        acc += mu[k] / total;
        table_[off + k] = acc;
      }
      table_[off + deg - 1] = 2.0;  // absorbs rounding in the running sum
      continue;
    }
    // Vose's alias method.
    scaled.resize(deg);
    small.clear();
    large.clear();
    for (std::size_t k = 0; k < deg; ++k) {
      scaled[k] = mu[k] / total * static_cast<double>(deg);
      (scaled[k] < 1.0 ? small : large).push_back(static_cast<std::uint32_t>(k));
    }
    while (!small.empty() && !large.empty()) {
      const auto s = small.back(), l = large.back();
      small.pop_back();
      table_[off + s] = scaled[s];
      alias_[off + s] = l;
      scaled[l] -= 1.0 - scaled[s];
      if (scaled[l] < 1.0) {
        large.pop_back();
        small.push_back(l);
      }
    }
    for (const auto k : large) table_[off + k] = 1.0;
    for (const auto k : small) table_[off + k] = 1.0;
  }
}

Vertex WalkKernel::move(Vertex x, CounterRng& rng) const noexcept {
  const auto nb = g_->neighbors(x);
  const std::size_t deg = nb.size();
  if (table_.empty()) return nb[rng.bounded(deg)];
  const std::size_t off = g_->offsets()[x];
  if (deg <= kCumulativeMaxDegree) {
    const double u = rng.uniform();
    std::size_t k = 0;
    while (u >= table_[off + k]) ++k;
    return nb[k];
  }
  const std::size_t k = rng.bounded(deg);
  return rng.uniform() < table_[off + k] ? nb[k] : nb[alias_[off + k]];
}

double WalkKernel::transition(Vertex x, Vertex y) const noexcept {
  if (x == y) return lazy_ ? 0.5 : 0.0;
  const double p = g_->conductance(x, y) / g_->vertex_weight(x);
  return lazy_ ? 0.5 * p : p;
}

void WalkKernel::apply(std::span<const double> dist, std::span<double> out) const noexcept {
  const auto& g = *g_;
  const double move_share = lazy_ ? 0.5 : 1.0;
  for (Vertex y = 0; y < g.vertex_count(); ++y) out[y] = lazy_ ? 0.5 * dist[y] : 0.0;
  for (Vertex x = 0; x < g.vertex_count(); ++x) {
    if (dist[x] == 0.0) continue;
    const double d = dist[x] * move_share / g.vertex_weight(x);
    const auto nb = g.neighbors(x);
    const auto mu = g.conductances(x);
    for (std::size_t k = 0; k < nb.size(); ++k) out[nb[k]] += d * mu[k];
  }
}

void WalkKernel::apply_function(std::span<const double> f, std::span<double> out) const noexcept {
  const auto& g = *g_;
  const double move_share = lazy_ ? 0.5 : 1.0;
  for (Vertex x = 0; x < g.vertex_count(); ++x) {
    const auto nb = g.neighbors(x);
    const auto mu = g.conductances(x);
    double acc = 0.0;
    for (std::size_t k = 0; k < nb.size(); ++k) acc += mu[k] * f[nb[k]];
    out[x] = move_share * acc / g.vertex_weight(x) + (lazy_ ? 0.5 * f[x] : 0.0);
  }
}

Trajectory simulate(const WalkKernel& kernel, Vertex start, std::uint64_t horizon,
                    CounterRng& rng, const Trackers& trackers) {
  const std::size_t n = kernel.graph().vertex_count();
  if (start >= n) throw ValidationError("simulate: start vertex out of range");
  Trajectory tr;
  tr.start = tr.current = start;
  tr.visited.assign(n, 0);
  tr.visited[start] = 1;
  tr.uncovered = n - 1;
  if (tr.uncovered == 0) tr.cover_time = 0;
  if (trackers.visits) {
    tr.visits.assign(n, 0);
    tr.visits[start] = 1;
  }
  Vertex x = start;
  std::uint64_t t = 0;
  while (t < horizon) {
    if (trackers.stop_at_cover && tr.cover_time) break;
    x = kernel.step(x, rng);
    ++t;
    if (trackers.visits) ++tr.visits[x];
    if (!tr.visited[x]) {
      tr.visited[x] = 1;
      if (--tr.uncovered == 0) tr.cover_time = t;
    }
  }
  tr.current = x;
  tr.steps = t;
  return tr;
}

Trajectory simulate(const WalkKernel& kernel, Vertex start, std::uint64_t horizon,
                    std::uint64_t seed, const Trackers& trackers) {
  CounterRng rng = make_stream(seed, 0);
  return simulate(kernel, start, horizon, rng, trackers);
}

std::uint64_t sample_cover_time(const WalkKernel& kernel, Vertex start, CounterRng& rng,
                                std::uint64_t cap) {
  const std::size_t n = kernel.graph().vertex_count();
  if (start >= n) throw ValidationError("cover time: start vertex out of range");
  std::vector<char> seen(n, 0);
  seen[start] = 1;
  std::size_t uncovered = n - 1;
  Vertex x = start;
  std::uint64_t t = 0;
  while (uncovered > 0) {
    if (t == cap) throw CapacityError("cover time: step cap exceeded");
    x = kernel.step(x, rng);
    ++t;
    if (!seen[x]) {
      seen[x] = 1;
      --uncovered;
    }
  }
  return t;
}

CoverTimeSample CoverTimeSample::from_times(std::vector<std::uint64_t> times, bool lazy) {
  CoverTimeSample s;
  s.lazy = lazy;
  s.times = std::move(times);
  s.sorted = s.times;
  std::sort(s.sorted.begin(), s.sorted.end());
  const double m = static_cast<double>(s.times.size());
  if (m == 0) return s;
  double sum = 0.0;
  for (const auto t : s.times) sum += static_cast<double>(t);
  s.mean = sum / m;
  double ss = 0.0;
  for (const auto t : s.times) {
    const double d = static_cast<double>(t) - s.mean;
    ss += d * d;
  }
  s.sd = m > 1 ? std::sqrt(ss / (m - 1)) : 0.0;
  s.cv = s.mean > 0 ? s.sd / s.mean : 0.0;
  return s;
}

std::uint64_t CoverTimeSample::quantile(double q) const {
  if (sorted.empty()) throw ValidationError("quantile of an empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw ValidationError("quantile level outside [0, 1]");
  const double m = static_cast<double>(sorted.size());
  auto k = static_cast<std::size_t>(std::ceil(q * m));
  k = std::clamp<std::size_t>(k, 1, sorted.size());
  return sorted[k - 1];
}

double CoverTimeSample::survival(double t) const noexcept {
  if (sorted.empty()) return 0.0;
  const auto it = std::upper_bound(sorted.begin(), sorted.end(), t,
                                   [](double v, std::uint64_t s) { return v < static_cast<double>(s); });
  return static_cast<double>(sorted.end() - it) / static_cast<double>(sorted.size());
}

CoverTimeSample cover_time_distribution(const WalkKernel& kernel, Vertex start,
                                        std::size_t samples, std::uint64_t seed,
                                        std::size_t threads, std::uint64_t cap) {
  if (samples == 0) throw ValidationError("cover_time_distribution: samples must be >= 1");
  std::vector<std::uint64_t> times(samples);
  parallel_for(samples, threads, [&](std::size_t i) {
    CounterRng rng = make_stream(seed, i);
    times[i] = sample_cover_time(kernel, start, rng, cap);
  });
  return CoverTimeSample::from_times(std::move(times), kernel.lazy());
}

TailFit tail_fit(std::span<const std::uint64_t> sorted, double t_n) {
  if (sorted.size() < 1000) throw ValidationError("tail_fit: need at least 1000 samples");
  if (!(t_n > 0)) throw ValidationError("tail_fit: T_N must be positive");
  if (sorted.front() == sorted.back()) throw ValidationError("tail_fit: degenerate tail");
  const double m = static_cast<double>(sorted.size());
  std::vector<double> xs, ys;
  // Survival just after each distinct value: fraction strictly greater.
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    const double s = static_cast<double>(sorted.size() - j) / m;
    if (s >= 1e-3 && s <= 1e-1) {
      xs.push_back(static_cast<double>(sorted[i]) / t_n);
      ys.push_back(std::log(s));
    }
    i = j;
  }
  if (xs.size() < 2 || xs.front() == xs.back()) throw ValidationError("tail_fit: degenerate tail");
  const LineFit f = fit_line(xs, ys);
  if (!(f.slope < 0)) throw ValidationError("tail_fit: degenerate tail");
  return {-1.0 / f.slope, f.slope, f.r2, f.points};
}

std::vector<std::vector<double>> heat_kernel_rows(const WalkKernel& kernel, Vertex x,
                                                  std::size_t t_max, std::size_t budget) {
  const std::size_t n = kernel.graph().vertex_count();
  if (x >= n) throw ValidationError("heat_kernel_rows: vertex out of range");
  if ((t_max + 1) > budget / n) throw CapacityError("heat_kernel_rows: budget exceeded");
  std::vector<std::vector<double>> rows(t_max + 1, std::vector<double>(n, 0.0));
  rows[0][x] = 1.0;
  for (std::size_t t = 1; t <= t_max; ++t) kernel.apply(rows[t - 1], rows[t]);
  return rows;
}

std::vector<double> heat_diagonal(const WalkKernel& kernel, Vertex x, std::size_t t_max) {
  const auto& g = kernel.graph();
  const std::size_t n = g.vertex_count();
  if (x >= n) throw ValidationError("heat_diagonal: vertex out of range");
  if (static_cast<double>(t_max) * static_cast<double>(n + g.adjacency().size()) > kHeatOpBudget)
    throw CapacityError("heat_diagonal: budget exceeded");
  std::vector<double> cur(n, 0.0), next(n);
  cur[x] = 1.0;
  std::vector<double> diag(t_max + 1);
  diag[0] = 1.0 / g.vertex_weight(x);
  for (std::size_t t = 1; t <= t_max; ++t) {
    kernel.apply(cur, next);
    cur.swap(next);
    diag[t] = cur[x] / g.vertex_weight(x);
  }
  return diag;
}

DiagonalFit diagonal_decay_fit(const WalkKernel& kernel, Vertex x, std::size_t t_lo,
                               std::size_t t_hi, std::size_t points) {
  if (!kernel.lazy()) throw ValidationError("diagonal_decay_fit: lazy kernel required");
  if (t_lo < 1 || t_hi <= t_lo || points < 2)
    throw ValidationError("diagonal_decay_fit: need 1 <= t_lo < t_hi and >= 2 points");
  const auto diag = heat_diagonal(kernel, x, t_hi);
  DiagonalFit out;
  const double a = std::log(static_cast<double>(t_lo)), b = std::log(static_cast<double>(t_hi));
  std::size_t last = 0;
  for (std::size_t i = 0; i < points; ++i) {
    const double lt = a + (b - a) * static_cast<double>(i) / static_cast<double>(points - 1);
    const auto t = static_cast<std::size_t>(std::llround(std::exp(lt)));
    if (t == last) continue;
    last = t;
    out.t.push_back(static_cast<double>(t));
    out.p.push_back(diag[t]);
  }
  std::vector<double> lx(out.t.size()), ly(out.t.size());
  for (std::size_t i = 0; i < out.t.size(); ++i) {
    lx[i] = std::log(out.t[i]);
    ly[i] = std::log(out.p[i]);
  }
  const LineFit f = fit_line(lx, ly);
  out.ds_half = -f.slope;
  out.r2 = f.r2;
  return out;
}

namespace {

struct LocalBall {
  std::vector<Vertex> vertices;
  std::vector<std::size_t> local;  // global -> local index, npos outside
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
};

LocalBall make_local_ball(const WeightedGraph& g, Vertex x, int r) {
  LocalBall b;
  b.vertices = ball(g, x, r);
  b.local.assign(g.vertex_count(), LocalBall::npos);
  for (std::size_t i = 0; i < b.vertices.size(); ++i) b.local[b.vertices[i]] = i;
  return b;
}

// One step of dist K restricted to the ball; mass leaving the ball is dropped.
void apply_absorbing(const WalkKernel& kernel, const LocalBall& b, std::span<const double> cur,
                     std::span<double> next) {
  const auto& g = kernel.graph();
  const double move_share = kernel.lazy() ? 0.5 : 1.0;
  for (std::size_t i = 0; i < cur.size(); ++i) next[i] = kernel.lazy() ? 0.5 * cur[i] : 0.0;
  for (std::size_t i = 0; i < cur.size(); ++i) {
    if (cur[i] == 0.0) continue;
    const Vertex v = b.vertices[i];
    const double d = cur[i] * move_share / g.vertex_weight(v);
    const auto nb = g.neighbors(v);
    const auto mu = g.conductances(v);
    for (std::size_t k = 0; k < nb.size(); ++k) {
      const std::size_t j = b.local[nb[k]];
      if (j != LocalBall::npos) next[j] += d * mu[k];
    }
  }
}

}  // namespace

std::vector<double> confinement_curve(const WalkKernel& kernel, Vertex x, int r,
                                      std::size_t t_max, std::size_t exact_cap) {
  if (r < 0) throw ValidationError("confinement: radius must be >= 0");
  const auto& g = kernel.graph();
  if (x >= g.vertex_count()) throw ValidationError("confinement: vertex out of range");
  const LocalBall b = make_local_ball(g, x, r);
  if (b.vertices.size() > exact_cap) throw CapacityError("confinement: ball exceeds exact cap");
  std::vector<double> cur(b.vertices.size(), 0.0), next(b.vertices.size());
  cur[b.local[x]] = 1.0;
  std::vector<double> out(t_max + 1);
  out[0] = 1.0;
  for (std::size_t t = 1; t <= t_max; ++t) {
    apply_absorbing(kernel, b, cur, next);
    cur.swap(next);
    out[t] = std::accumulate(cur.begin(), cur.end(), 0.0);
  }
  return out;
}

Estimate confinement_probability(const WalkKernel& kernel, Vertex x, int r, std::uint64_t t,
                                 std::size_t samples, std::uint64_t seed, std::size_t exact_cap) {
  if (r < 1) throw ValidationError("confinement: radius must be >= 1");
  const auto& g = kernel.graph();
  if (x >= g.vertex_count()) throw ValidationError("confinement: vertex out of range");
  if (t == 0) return {1.0, 0.0, true};
  const auto dist = bfs_distances(g, x);
  const bool whole = std::all_of(dist.begin(), dist.end(), [r](int d) { return d <= r; });
  if (whole) return {1.0, 0.0, true};
  const std::size_t ball_size =
      static_cast<std::size_t>(std::count_if(dist.begin(), dist.end(), [r](int d) { return d <= r; }));
  if (ball_size <= exact_cap)
    return {confinement_curve(kernel, x, r, t, exact_cap).back(), 0.0, true};
  if (samples == 0) throw ValidationError("confinement: samples must be >= 1");
  std::size_t stayed = 0;
  for (std::size_t i = 0; i < samples; ++i) {
    CounterRng rng = make_stream(seed, i);
    Vertex v = x;
    bool inside = true;
    for (std::uint64_t s = 0; s < t && inside; ++s) {
      v = kernel.step(v, rng);
      inside = dist[v] <= r;
    }
    stayed += inside ? 1 : 0;
  }
  const double p = static_cast<double>(stayed) / static_cast<double>(samples);
  return {p, std::sqrt(p * (1 - p) / static_cast<double>(samples)), false};
}

Estimate mean_exit_time(const WalkKernel& kernel, Vertex x, int r, std::size_t samples,
                        std::uint64_t seed, const ExitOptions& options) {
  const auto& g = kernel.graph();
  if (x >= g.vertex_count()) throw ValidationError("exit time: vertex out of range");
  if (r < 0) throw ValidationError("exit time: radius must be >= 0");
  const auto dist = bfs_distances(g, x);
  std::vector<char> outside(g.vertex_count());
  std::size_t inside = 0;
  for (Vertex v = 0; v < g.vertex_count(); ++v) {
    outside[v] = dist[v] > r ? 1 : 0;
    inside += outside[v] ? 0 : 1;
  }
  if (inside == g.vertex_count())
    throw ValidationError("exit time: ball covers the whole graph");
  const double laziness = kernel.lazy() ? 2.0 : 1.0;
  if (inside <= options.exact_cap) {
    // (I - P) u = 1 on the ball, i.e. L u = mu; u = 0 outside.
    const std::vector<double> zero(g.vertex_count(), 0.0);
    std::vector<double> rhs(g.vertex_weights().begin(), g.vertex_weights().end());
    const LaplacianSystem sys(g);
    const auto u = solve_dirichlet(sys, outside, zero, rhs, options.solver);
    return {laziness * u[x], 0.0, true};
  }
  if (samples < 2) throw ValidationError("exit time: need >= 2 samples for Monte Carlo");
  std::vector<double> tau(samples);
  parallel_for(samples, options.threads, [&](std::size_t i) {
    CounterRng rng = make_stream(seed, i);
    Vertex v = x;
    std::uint64_t t = 0;
    while (!outside[v]) {
      v = kernel.step(v, rng);
      ++t;
    }
    tau[i] = static_cast<double>(t);
  });
  const double m = static_cast<double>(samples);
  const double mean = std::accumulate(tau.begin(), tau.end(), 0.0) / m;
  double ss = 0.0;
  for (const double v : tau) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / (m - 1) / m), false};
}

ExitScaling exit_time_scaling(const WalkKernel& kernel, std::span<const Vertex> centers,
                              std::span<const int> radii, std::size_t samples,
                              std::uint64_t seed, const ExitOptions& options) {
  if (radii.size() < 2 || centers.empty())
    throw ValidationError("exit_time_scaling: insufficient radius range");
  ExitScaling out;
  std::vector<double> lx, ly;
  for (std::size_t ri = 0; ri < radii.size(); ++ri) {
    double sum = 0.0, var = 0.0;
    for (std::size_t ci = 0; ci < centers.size(); ++ci) {
      const auto e = mean_exit_time(kernel, centers[ci], radii[ri], samples,
                                    mix64(seed ^ mix64(ri * 1315423911ULL + ci)), options);
      sum += e.value;
      var += e.stderr_ * e.stderr_;
    }
    const double k = static_cast<double>(centers.size());
    out.rows.push_back({radii[ri], sum / k, std::sqrt(var) / k});
    // The walk leaves B(x, r) on the sphere at distance r + 1.
    lx.push_back(std::log(radii[ri] + 1.0));
    ly.push_back(std::log(sum / k));
  }
  const LineFit f = fit_line(lx, ly);
  out.d_w = f.slope;
  out.r2 = f.r2;
  return out;
}

std::vector<double> local_time_field(const Trajectory& tr, const WeightedGraph& g, double r_g) {
  if (tr.visits.empty()) throw ValidationError("local_time_field: visit counts were not recorded");
  if (!(r_g > 0)) throw ValidationError("local_time_field: r(G) must be positive");
  std::vector<double> out(tr.visits.size());
  for (Vertex x = 0; x < out.size(); ++x) {
    // visits include X_t; local times count s < t only.
    const double c = static_cast<double>(tr.visits[x] - (x == tr.current ? 1 : 0));
    out[x] = c / (r_g * g.vertex_weight(x));
  }
  return out;
}

ModulusCurve modulus_of_continuity_stat(const WalkKernel& kernel,
                                        std::span<const std::vector<Vertex>> close, double r_g,
                                        double kappa, std::uint64_t horizon, Vertex start,
                                        std::span<const double> lambdas, std::size_t samples,
                                        std::uint64_t seed, std::size_t threads) {
  const auto& g = kernel.graph();
  const std::size_t n = g.vertex_count();
  if (close.size() != n) throw ValidationError("modulus: neighbor lists must cover every vertex");
  if (!(r_g > 0)) throw ValidationError("modulus: r(G) must be positive");
  if (samples == 0) throw ValidationError("modulus: samples must be >= 1");
  ModulusCurve out;
  out.kappa = kappa;
  out.phi = modulus_phi(kappa);
  out.lambda.assign(lambdas.begin(), lambdas.end());
  out.max_oscillation.assign(samples, 0.0);
  std::vector<double> scale(n);
  for (Vertex x = 0; x < n; ++x) scale[x] = 1.0 / (r_g * g.vertex_weight(x));
  parallel_for(samples, threads, [&](std::size_t i) {
    CounterRng rng = make_stream(seed, i);
    std::vector<std::uint64_t> count(n, 0);
    Vertex v = start;
    double worst = 0.0;
    for (std::uint64_t t = 1; t <= horizon; ++t) {
      // L_t gains the visit at X_{t-1}; only pairs through that vertex move.
      ++count[v];
      const double lv = static_cast<double>(count[v]) * scale[v];
      for (const Vertex y : close[v])
        worst = std::max(worst, std::abs(lv - static_cast<double>(count[y]) * scale[y]));
      v = kernel.step(v, rng);
    }
    out.max_oscillation[i] = worst;
  });
  for (const double lam : lambdas) {
    std::size_t hits = 0;
    for (const double w : out.max_oscillation) hits += w >= lam * out.phi ? 1 : 0;
    out.probability.push_back(static_cast<double>(hits) / static_cast<double>(samples));
  }
  return out;
}

}  // namespace fractalmix
