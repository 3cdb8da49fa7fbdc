#include "fractalmix/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "fractalmix/errors.hpp"
#include "fractalmix/parallel.hpp"
#include "fractalmix/rng.hpp"

namespace fractalmix {

CvEstimate cv_with_bootstrap(const CoverTimeSample& s, std::size_t resamples, std::uint64_t seed,
                             double level) {
  if (s.times.size() < 2) throw ValidationError("bootstrap: need at least 2 samples");
  CvEstimate out;
  out.samples = s.times.size();
  out.mean = s.mean;
  out.sd = s.sd;
  out.cv = s.cv;
  const std::size_t m = s.times.size();
  std::vector<double> cvs(resamples);
  for (std::size_t b = 0; b < resamples; ++b) {
    CounterRng rng = make_stream(seed, b);
    double sum = 0.0, sq = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const auto v = static_cast<double>(s.times[rng.bounded(m)]);
      sum += v;
      sq += v * v;
    }
    const double mean = sum / static_cast<double>(m);
    const double var = std::max(0.0, (sq - static_cast<double>(m) * mean * mean) /
                                         static_cast<double>(m - 1));
    cvs[b] = mean > 0 ? std::sqrt(var) / mean : 0.0;
  }
  std::sort(cvs.begin(), cvs.end());
  const double tail = 0.5 * (1.0 - level);
  auto pick = [&](double q) {
    const auto k = static_cast<std::size_t>(std::floor(q * static_cast<double>(resamples - 1) + 0.5));
    return cvs[std::min(k, resamples - 1)];
  };
  out.ci_lo = resamples ? pick(tail) : out.cv;
  out.ci_hi = resamples ? pick(1.0 - tail) : out.cv;
  return out;
}

std::vector<CvEstimate> concentration_experiment(std::span<const ConcentrationCase> cases,
                                                 bool lazy, std::size_t samples,
                                                 std::uint64_t seed, std::size_t threads,
                                                 std::size_t resamples) {
  if (samples < 1000) throw ValidationError("concentration_experiment: need >= 1000 samples");
  std::vector<CvEstimate> out;
  for (const auto& c : cases) {
    const WalkKernel kernel(*c.graph, lazy);
    const auto sample = cover_time_distribution(kernel, c.start, samples,
                                                derive_seed(seed, c.label + "/cover"), threads);
    auto cv = cv_with_bootstrap(sample, resamples, derive_seed(seed, c.label + "/bootstrap"));
    cv.label = c.label;
    cv.vertices = c.graph->vertex_count();
    out.push_back(std::move(cv));
  }
  return out;
}

bool cv_strictly_decreasing(std::span<const CvEstimate> cvs, bool require_ci_separation) {
  for (std::size_t i = 0; i + 1 < cvs.size(); ++i) {
    if (!(cvs[i + 1].cv < cvs[i].cv)) return false;
    if (require_ci_separation && !(cvs[i + 1].ci_hi < cvs[i].ci_lo)) return false;
  }
  return true;
}

bool RangeCoverResult::within_envelope(double z) const {
  if (pairs.empty()) return true;
  const auto& p = pairs[worst];
  return p.probability - z * p.stderr_ <= envelope;
}

RangeCoverResult range_covers_resistance_ball(const WalkKernel& kernel,
                                              const ResistanceSummary& summary, double kappa,
                                              std::uint64_t t,
                                              std::span<const std::pair<Vertex, Vertex>> pairs,
                                              std::size_t samples, std::uint64_t seed,
                                              std::size_t threads) {
  if (samples == 0) throw ValidationError("range_covers_resistance_ball: samples must be >= 1");
  const std::size_t n = kernel.graph().vertex_count();
  RangeCoverResult out;
  out.kappa = kappa;
  out.t = t;
  out.envelope = std::min(1.0, std::exp2(1.0 - static_cast<double>(t) / (4.0 * summary.s_n)));
  for (std::size_t pi = 0; pi < pairs.size(); ++pi) {
    const auto [x, z] = pairs[pi];
    if (x >= n || z >= n) throw ValidationError("range_covers_resistance_ball: vertex out of range");
    const auto target = resistance_ball(summary, x, kappa);
    std::vector<char> in_ball(n, 0);
    for (const Vertex v : target) in_ball[v] = 1;
    std::vector<char> missed(samples, 0);
    const std::uint64_t stream_seed = mix64(seed + 0x9e3779b97f4a7c15ULL * (pi + 1));
    parallel_for(samples, threads, [&](std::size_t i) {
      if (t == 0) {
        missed[i] = 1;
        return;
      }
      CounterRng rng = make_stream(stream_seed, i);
      std::vector<char> seen(n, 0);
      std::size_t left = target.size();
      Vertex v = z;
      seen[v] = 1;
      if (in_ball[v]) --left;
      for (std::uint64_t s = 1; s < t && left > 0; ++s) {
        v = kernel.step(v, rng);
        if (!seen[v]) {
          seen[v] = 1;
          if (in_ball[v]) --left;
        }
      }
      missed[i] = left > 0 ? 1 : 0;
    });
    RangeCoverPair row;
    row.x = x;
    row.z = z;
    row.ball_size = target.size();
    const double m = static_cast<double>(samples);
    row.probability = static_cast<double>(std::count(missed.begin(), missed.end(), 1)) / m;
    row.stderr_ = std::sqrt(row.probability * (1.0 - row.probability) / m);
    out.pairs.push_back(row);
    if (row.probability > out.pairs[out.worst].probability) out.worst = out.pairs.size() - 1;
  }
  return out;
}

bool green_monotone(std::span<const GreenShell> shells) {
  const GreenShell* prev = nullptr;
  for (const auto& s : shells) {
    if (s.distance < 1 || s.count == 0) continue;
    if (prev && s.mean_green > prev->mean_green * (1.0 + 1e-12)) return false;
    prev = &s;
  }
  return true;
}

Mp12Report mp12_diagnostics(const WeightedGraph& g, const std::string& label,
                            const Mp12Options& options) {
  Mp12Report rep;
  rep.label = label;
  rep.vertices = g.vertex_count();
  rep.mu_g = g.total_weight();
  const auto w = g.vertex_weights();
  rep.delta = *std::max_element(w.begin(), w.end()) / *std::min_element(w.begin(), w.end());
  rep.small_radius = options.small_radius;
  for (Vertex x = 0; x < g.vertex_count(); ++x)
    rep.max_log_volume =
        std::max(rep.max_log_volume, std::log(g.measure(ball(g, x, options.small_radius))));

  const int r_n = diameter(g).value;
  if (g.vertex_count() <= options.uniform_cap) {
    rep.t_mix_u = static_cast<double>(UniformDistance(g, options.uniform_cap).mixing_time(options.eps));
  } else {
    if (!(options.proxy_constant > 0))
      throw CapacityError("mp12: graph exceeds the uniform-mixing cap and no proxy constant is set");
    rep.t_mix_proxy = true;
    rep.proxy_constant = options.proxy_constant;
    rep.t_mix_u = std::ceil(options.proxy_constant * std::pow(r_n, options.d_w));
  }

  // Default set center: approximate graph center from two sweep endpoints.
  Vertex center = 0;
  if (options.set_center) {
    center = *options.set_center;
  } else {
    const auto d0 = bfs_distances(g, Vertex{0});
    const Vertex a = static_cast<Vertex>(std::max_element(d0.begin(), d0.end()) - d0.begin());
    const auto da = bfs_distances(g, a);
    const Vertex b = static_cast<Vertex>(std::max_element(da.begin(), da.end()) - da.begin());
    const auto db = bfs_distances(g, b);
    int best = std::numeric_limits<int>::max();
    for (Vertex v = 0; v < g.vertex_count(); ++v) {
      const int e = std::max(da[v], db[v]);
      if (e < best) {
        best = e;
        center = v;
      }
    }
  }
  rep.set_center = center;
  rep.set_radius = options.set_radius;
  const auto set = ball(g, center, options.set_radius);
  const WalkKernel lazy(g, true);
  const auto green = truncated_green_of_set(lazy, set, static_cast<std::size_t>(rep.t_mix_u));
  const auto dist = bfs_distances(g, set);
  const int dmax = *std::max_element(dist.begin(), dist.end());
  std::vector<GreenShell> shells(static_cast<std::size_t>(dmax) + 1);
  for (Vertex v = 0; v < g.vertex_count(); ++v) {
    auto& s = shells[static_cast<std::size_t>(dist[v])];
    s.distance = dist[v];
    ++s.count;
    s.mean_green += green[v];
  }
  for (auto& s : shells)
    if (s.count) s.mean_green /= static_cast<double>(s.count);
  rep.green = std::move(shells);
  rep.green_monotone = green_monotone(rep.green);
  return rep;
}

std::vector<std::uint64_t> default_time_grid(std::uint64_t t_max, std::size_t points) {
  std::vector<std::uint64_t> grid{0};
  if (t_max == 0) return grid;
  points = std::max<std::size_t>(points, 8);
  const std::size_t geometric = points / 4;
  const double knee = std::max(1.0, static_cast<double>(t_max) / 16.0);
  for (std::size_t i = 0; i < geometric; ++i) {
    const double v = std::exp(std::log(knee) * static_cast<double>(i) / static_cast<double>(geometric));
    grid.push_back(static_cast<std::uint64_t>(std::llround(v)));
  }
  const std::size_t linear = points - geometric;
  for (std::size_t i = 0; i <= linear; ++i)
    grid.push_back(static_cast<std::uint64_t>(
        std::llround(knee + (static_cast<double>(t_max) - knee) * static_cast<double>(i) /
                                static_cast<double>(linear))));
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

namespace {

bool is_complete(const GraphSpec& spec) {
  const auto* b = std::get_if<BaselineSpec>(&spec.family);
  return b && b->kind == BaselineKind::complete;
}

std::vector<double> with_window(std::vector<double> eps, double w) {
  for (const double e : {w, 1.0 - w})
    if (std::find(eps.begin(), eps.end(), e) == eps.end()) eps.push_back(e);
  return eps;
}

const MixingBracket* find_bracket(const std::vector<MixingBracket>& b, double eps) {
  for (const auto& x : b)
    if (std::abs(x.eps - eps) < 1e-12) return &x;
  return nullptr;
}

}  // namespace

DichotomyLevel dichotomy_level(const GraphSpec& spec, const DichotomyOptions& opt) {
  DichotomyLevel lv;
  lv.spec = spec.text;
  const RegimeInfo info = classify_regime(spec);
  lv.regime = to_string(info.regime);
  const WeightedGraph g = build_graph(spec);
  const std::size_t n = g.vertex_count();
  lv.vertices = n;
  const auto eps_all = with_window(opt.eps_grid, opt.cutoff_window_eps);
  const DiameterResult diam = diameter(g);
  lv.r_n = diam.value;
  const LaplacianSystem sys(g);
  ResistanceOptions ropt;
  ropt.pivot_cap = opt.pivot_cap;
  ropt.allow_heuristic = true;
  const auto summary = resistance_summary(sys, ropt);
  lv.s_n = summary.s_n;
  lv.s_n_lower_bound = summary.lower_bound;

  if (is_complete(spec)) {
    if (n > opt.exact_complete_max) throw CapacityError("dichotomy: complete graph too large");
    lv.d_w = std::numeric_limits<double>::quiet_NaN();
    lv.t_n = std::numeric_limits<double>::quiet_NaN();
    // Cover time of K_n is a sum of independent geometric phases.
    double mean_lazy = 0.0, var_lazy = 0.0;
    for (std::size_t c = 1; c < n; ++c) {
      const double p = 0.5 * static_cast<double>(n - c) / static_cast<double>(n - 1);
      mean_lazy += 1.0 / p;
      var_lazy += (1.0 - p) / (p * p);
    }
    lv.cover_mean_lazy = mean_lazy;
    lv.cover_cv_lazy = std::sqrt(var_lazy) / mean_lazy;
    lv.cover_mean = complete_graph_cover_mean(n, false);
    lv.half_cover = 0.5 * mean_lazy;
    lv.exact_lamp_marginal = true;
    const auto t_max = static_cast<std::size_t>(std::ceil(2.0 * mean_lazy));
    auto tv = complete_graph_lamp_tv(n, t_max);
    std::vector<std::uint64_t> t(t_max + 1);
    std::iota(t.begin(), t.end(), std::uint64_t{0});
    // Exact values are their own bounds.
    lv.profile = make_tv_profile(std::move(t), tv, tv, tv);
  } else {
    lv.d_w = info.d_w;
    if (std::isnan(lv.d_w)) {
      std::vector<int> radii;
      for (int r = 2; 4 * r <= lv.r_n; r *= 2) radii.push_back(r);
      if (radii.size() >= 2) {
        const WalkKernel simple(g, false);
        const Vertex centers[] = {0};
        lv.d_w = exit_time_scaling(simple, centers, radii, 1000, derive_seed(opt.seed, spec.text + "/dw"))
                     .d_w;
      } else {
        lv.d_w = 2.0;
      }
    }
    lv.t_n = std::pow(static_cast<double>(lv.r_n), lv.d_w);
    const WalkKernel lazy(g, true), simple(g, false);
    const auto cover = cover_time_distribution(lazy, 0, opt.cover_samples,
                                               derive_seed(opt.seed, spec.text + "/cover-lazy"),
                                               opt.threads);
    const auto cover_simple = cover_time_distribution(
        simple, 0, std::max<std::size_t>(opt.cover_samples / 4, 1),
        derive_seed(opt.seed, spec.text + "/cover"), opt.threads);
    lv.cover_mean_lazy = cover.mean;
    lv.cover_cv_lazy = cover.cv;
    lv.cover_mean = cover_simple.mean;
    lv.half_cover = 0.5 * cover.mean;

    const auto t_max = static_cast<std::uint64_t>(std::ceil(1.1 * static_cast<double>(cover.sorted.back())));
    const auto grid = default_time_grid(t_max, opt.grid_points);
    int radius = -1;
    try {
      radius = zero_ball_radius_auto(g, lv.r_n);
    } catch (const ValidationError&) {
      radius = -1;
    }
    lv.zero_ball_radius = radius;
    const double union_term = radius >= 0 ? zero_ball_union_term(g, radius) : 1.0;
    const auto run = collapsed_run(lazy, 0, grid, opt.collapsed_samples,
                                   derive_seed(opt.seed, spec.text + "/collapsed"), radius,
                                   opt.threads);
    const auto walk_tv = walk_tv_curve(lazy, 0, t_max);
    std::vector<double> lower(grid.size()), upper(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) {
      double lo = tv_lower_bound_statistic(run.unrandomized[k], n, opt.alpha).value;
      if (radius >= 0) lo = std::max(lo, tv_lower_bound_zeroball(run.zero_ball[k], union_term, opt.alpha).value);
      lower[k] = lo;
      upper[k] = grid[k] == 0 ? 1.0 : tv_upper_bound(cover, lv.s_n, grid[k], walk_tv[grid[k]]).sharp;
    }
    lv.profile = make_tv_profile(grid, {}, std::move(lower), std::move(upper));
  }
  lv.brackets = mixing_profile(lv.profile, eps_all);
  const auto* a = find_bracket(lv.brackets, opt.cutoff_window_eps);
  const auto* b = find_bracket(lv.brackets, 1.0 - opt.cutoff_window_eps);
  if (a && b) lv.window = cutoff_ratio(*a, *b);
  // Keep only the requested epsilons in the stored brackets.
  std::vector<MixingBracket> kept;
  for (const double e : opt.eps_grid)
    if (const auto* x = find_bracket(lv.brackets, e)) kept.push_back(*x);
  lv.brackets = std::move(kept);
  return lv;
}

std::pair<std::string, std::string> dichotomy_verdict(std::span<const DichotomyLevel> levels,
                                                      const DichotomyOptions& opt) {
  std::ostringstream why;
  if (levels.empty()) return {"inconclusive", "no levels"};
  for (const auto& lv : levels)
    if (lv.regime == "critical")
      return {"inconclusive/critical", "critical regime is outside the dichotomy hypotheses"};

  const bool all_exact = std::all_of(levels.begin(), levels.end(),
                                     [](const DichotomyLevel& l) { return l.exact_lamp_marginal; });
  if (all_exact) {
    bool ok = levels.size() >= 2;
    for (std::size_t i = 0; i + 1 < levels.size(); ++i) {
      const double r0 = levels[i].window.exact, r1 = levels[i + 1].window.exact;
      ok = ok && !std::isnan(r0) && !std::isnan(r1) && r1 < r0;
    }
    why << "exact lamp-marginal window t(" << opt.cutoff_window_eps << ")/t("
        << 1.0 - opt.cutoff_window_eps << ")";
    for (const auto& lv : levels) why << ' ' << lv.window.exact;
    if (ok) return {"cutoff evidence", why.str() + " strictly decreasing"};
    return {"inconclusive", why.str() + " not strictly decreasing"};
  }

  const double eps_min = *std::min_element(opt.eps_grid.begin(), opt.eps_grid.end());
  bool recurrent = std::all_of(levels.begin(), levels.end(), [](const DichotomyLevel& l) {
    return l.regime == "strongly_recurrent";
  });
  if (recurrent) {
    bool ok = true;
    double up_min = std::numeric_limits<double>::infinity(), up_max = 0.0;
    why << "lower(" << eps_min << ")/upper(0.5):";
    for (const auto& lv : levels) {
      MixingBracket lo_b, half_b;
      for (const auto& b : lv.brackets) {
        if (std::abs(b.eps - eps_min) < 1e-12) lo_b = b;
        if (std::abs(b.eps - 0.5) < 1e-12) half_b = b;
      }
      if (!lo_b.lower || !half_b.upper || *half_b.upper == 0) {
        ok = false;
        why << " n/a";
        continue;
      }
      const double ratio = static_cast<double>(*lo_b.lower) / static_cast<double>(*half_b.upper);
      why << ' ' << ratio;
      ok = ok && ratio >= opt.no_cutoff_factor;
      const double up = static_cast<double>(*half_b.upper) / lv.t_n;
      up_min = std::min(up_min, up);
      up_max = std::max(up_max, up);
    }
    const double spread = up_max / up_min;
    why << "; upper(0.5)/T_N spread " << spread;
    ok = ok && spread <= opt.bounded_spread;
    if (ok) return {"no-cutoff evidence", why.str()};
    return {"inconclusive", why.str()};
  }

  // Transient or unknown: brackets tightening and concentrating cover times.
  bool ok = levels.size() >= 2;
  why << "window upper brackets:";
  for (std::size_t i = 0; i < levels.size(); ++i) {
    why << ' ' << levels[i].window.hi;
    if (i + 1 < levels.size())
      ok = ok && levels[i + 1].window.hi < levels[i].window.hi &&
           levels[i + 1].cover_cv_lazy < levels[i].cover_cv_lazy;
  }
  if (ok) return {"cutoff evidence", why.str() + "; cover-time CV decreasing"};
  return {"inconclusive", why.str()};
}

DichotomyReport dichotomy_report(std::span<const GraphSpec> specs, const DichotomyOptions& opt) {
  DichotomyReport rep;
  rep.options = opt;
  if (!specs.empty()) {
    const auto& t = specs.front().text;
    rep.family = t.substr(0, t.find(':'));
  }
  for (const auto& s : specs) rep.levels.push_back(dichotomy_level(s, opt));
  std::tie(rep.verdict, rep.reason) = dichotomy_verdict(rep.levels, opt);
  return rep;
}

}  // namespace fractalmix
