// Acceptance run: one PASS/FAIL line per criterion, exit 1 if any fails.
// Optional arguments restrict the run to the named criteria (e.g. P3 P9).

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fractalmix/analysis.hpp"
#include "fractalmix/fractal.hpp"
#include "fractalmix/graph.hpp"
#include "fractalmix/lamplighter.hpp"
#include "fractalmix/parallel.hpp"
#include "fractalmix/resistance.hpp"
#include "fractalmix/rng.hpp"
#include "fractalmix/walk.hpp"

using namespace fractalmix;

namespace {

const double kDf = std::log(3.0) / std::log(2.0);
const double kDw = std::log(5.0) / std::log(2.0);
constexpr std::uint64_t kSeed = 20240611;

struct Outcome {
  bool pass = false;
  std::string detail;
};

WeightedGraph graph_of(const std::string& s) { return build_graph(parse_graph_spec(s)); }
std::string gasket(int level) { return "gasket:d=2,level=" + std::to_string(level); }

std::string fmt(double v, int prec = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", prec, v);
  return buf;
}

// First t with tv[t] <= eps.
std::uint64_t first_below(const std::vector<double>& tv, double eps) {
  for (std::size_t t = 0; t < tv.size(); ++t)
    if (tv[t] <= eps) return t;
  return tv.size();
}

Outcome p1() {
  const auto fit = volume_growth_fit(graph_of(gasket(7)), 256, derive_seed(kSeed, "P1"));
  return {std::abs(fit.d_f - kDf) <= 0.1,
          "d_f=" + fmt(fit.d_f) + " target " + fmt(kDf) + " +- 0.1 (r2 " + fmt(fit.r2) + ")"};
}

Outcome p2() {
  const auto g = graph_of(gasket(7));
  const int r_n = diameter(g).value;
  std::vector<int> radii;
  for (int r = 2; 4 * r <= r_n; r *= 2) radii.push_back(r);
  const Vertex centers[] = {0};
  ExitOptions opt;
  opt.exact_cap = 0;  // Monte Carlo at the stated sample size
  const auto sc = exit_time_scaling(WalkKernel(g, false), centers, radii, 10000,
                                    derive_seed(kSeed, "P2"), opt);
  return {std::abs(sc.d_w - kDw) <= 0.15,
          "d_w=" + fmt(sc.d_w) + " target " + fmt(kDw) + " +- 0.15, 10^4 samples/radius"};
}

Outcome p3() {
  const auto g = graph_of(gasket(6));
  const auto reff = pairwise_resistance(g);
  const auto fit = resistance_exponent_fit(g, reff, 4000, derive_seed(kSeed, "P3"));
  const double want = kDw - kDf;
  return {std::abs(fit.exponent - want) <= 0.1,
          "slope=" + fmt(fit.exponent) + " target " + fmt(want) + " +- 0.1"};
}

Outcome p4() {
  const std::vector<std::string> specs{
      "path:n=60",        "cycle:n=45",          "complete:n=30",
      "torus:d=2,side=12", "torus:d=3,side=6",   gasket(1),
      gasket(2),          gasket(3),             gasket(4),
      gasket(5),          "gasket:d=3,level=2",  "gasket:d=2,level=4,rough=5,wseed=3",
      "carpet:L=3,b=1,d=2,level=2", "carpet:L=3,b=1,d=3,level=1",
      "torus:d=2,side=10,rough=3,wseed=8"};
  double worst = 0.0;
  std::string worst_graph;
  std::size_t graphs = 0;
  for (const auto& s : specs) {
    const auto g = graph_of(s);
    if (g.vertex_count() > 500) continue;
    ++graphs;
    const LaplacianSystem sys(g);
    const std::size_t n = g.vertex_count();
    for (std::size_t i = 0; i < 100; ++i) {
      CounterRng rng = make_stream(derive_seed(kSeed, "P4/" + s), i);
      const auto x = static_cast<Vertex>(rng.bounded(n));
      auto z = static_cast<Vertex>(rng.bounded(n - 1));
      if (z >= x) ++z;
      const double commute = hitting_time(sys, z)[x] + hitting_time(sys, x)[z];
      const double rm = effective_resistance(sys, x, z) * g.total_weight();
      const double rel = std::abs(commute - rm) / rm;
      if (rel > worst) {
        worst = rel;
        worst_graph = s;
      }
    }
  }
  return {worst <= 1e-8, "max relative deviation " + fmt(worst, 3) + " over " +
                             std::to_string(graphs) + " graphs x 100 pairs (worst " + worst_graph + ")"};
}

Outcome p5() {
  double lo = 1e300, hi = 0.0;
  std::string ratios;
  for (int level = 3; level <= 7; ++level) {
    const auto g = graph_of(gasket(level));
    const LaplacianSystem sys(g);
    const auto s = resistance_summary(sys);
    const double t_n = std::pow(5.0, level);
    const double r = s.s_n / t_n;
    lo = std::min(lo, r);
    hi = std::max(hi, r);
    ratios += ' ' + fmt(r);
  }
  return {hi / lo <= 4.0, "S_N/T_N levels 3-7:" + ratios + ", max/min " + fmt(hi / lo)};
}

Outcome p6() {
  const auto g = graph_of(gasket(5));
  const auto s = cover_time_distribution(WalkKernel(g, true), 0, 10000, derive_seed(kSeed, "P6"));
  const auto tf = tail_fit(s, std::pow(5.0, 5));
  return {tf.r2 >= 0.95, "R2=" + fmt(tf.r2) + " (need >= 0.95), c0=" + fmt(tf.c0) + ", " +
                             std::to_string(tf.points) + " points"};
}

Outcome p7() {
  constexpr std::size_t kM = 20000;
  constexpr double kAlpha = 0.01;
  bool ok = true;
  std::ostringstream why;
  for (const auto& [spec, t_max] : {std::pair<std::string, std::size_t>{"path:n=2", 40}, {"path:n=3", 80}}) {
    const auto g = graph_of(spec);
    const WalkKernel lazy(g, true);
    const std::size_t n = g.vertex_count();
    const auto exact = exact_tv_curve(lazy, 0, 0, t_max);
    std::vector<std::uint64_t> grid(t_max + 1);
    for (std::size_t t = 0; t <= t_max; ++t) grid[t] = t;
    const auto run = collapsed_run(lazy, 0, grid, kM, derive_seed(kSeed, "P7/collapsed/" + spec));
    const auto cover = cover_time_distribution(lazy, 0, kM, derive_seed(kSeed, "P7/cover/" + spec));
    const LaplacianSystem sys(g);
    const double s_n = resistance_summary(sys).s_n;
    const auto walk_tv = walk_tv_curve(lazy, 0, t_max);
    const double inflate = dkw_epsilon(kM, kAlpha);
    std::size_t bad_order = 0, bad_mono = 0;
    double max_gap_lo = -1.0, max_gap_hi = -1.0;
    for (std::size_t t = 0; t <= t_max; ++t) {
      const double lo = tv_lower_bound_statistic(run.unrandomized[t], n, kAlpha).value;
      const double up = t == 0 ? 1.0 : tv_upper_bound(cover, s_n, t, walk_tv[t], inflate).sharp;
      if (lo > exact[t] || exact[t] > up) ++bad_order;
      if (t && exact[t] > exact[t - 1] + 1e-12) ++bad_mono;
      max_gap_lo = std::max(max_gap_lo, lo - exact[t]);
      max_gap_hi = std::max(max_gap_hi, exact[t] - up);
    }
    ok = ok && bad_order == 0 && bad_mono == 0;
    why << spec << ": order violations " << bad_order << ", monotonicity violations " << bad_mono
        << ", max(lower-exact) " << fmt(max_gap_lo, 3) << ", max(exact-upper) " << fmt(max_gap_hi, 3)
        << "; ";
  }
  why << "M=" << kM << ", 99% bounds";
  return {ok, why.str()};
}

Outcome p8() {
  DichotomyOptions opt;
  opt.seed = derive_seed(kSeed, "P8");
  std::vector<DichotomyLevel> levels;
  for (int level = 3; level <= 6; ++level) levels.push_back(dichotomy_level(parse_graph_spec(gasket(level)), opt));
  bool ok = true;
  std::ostringstream why;
  why << "lower(0.02)/T_N vs 3 x upper(0.5)/T_N:";
  for (const auto& lv : levels) {
    std::optional<std::uint64_t> lo, up;
    for (const auto& b : lv.brackets) {
      if (std::abs(b.eps - 0.02) < 1e-12) lo = b.lower;
      if (std::abs(b.eps - 0.5) < 1e-12) up = b.upper;
    }
    if (!lo || !up) {
      ok = false;
      why << " [" << lv.spec << " n/a]";
      continue;
    }
    const double a = static_cast<double>(*lo) / lv.t_n, b = static_cast<double>(*up) / lv.t_n;
    ok = ok && a > 3.0 * b;
    why << " L" << lv.spec.substr(lv.spec.rfind('=') + 1) << " " << fmt(a) << " vs " << fmt(3.0 * b);
  }
  const auto [verdict, reason] = dichotomy_verdict(levels, opt);
  why << "; verdict: " << verdict;
  return {ok, why.str()};
}

Outcome p9() {
  const std::vector<std::size_t> sizes{64, 128, 256, 512};
  bool ok = true;
  double prev = 1e300;
  std::ostringstream why;
  why << "t(0.25)/t(0.75), t(0.5)/(T_cov/2):";
  for (const auto n : sizes) {
    const double half = 0.5 * complete_graph_cover_mean(n, true);
    const auto tv = complete_graph_lamp_tv(n, static_cast<std::size_t>(std::ceil(4.0 * half)));
    const auto a = first_below(tv, 0.25), b = first_below(tv, 0.75), m = first_below(tv, 0.5);
    const double window = static_cast<double>(a) / static_cast<double>(b);
    const double centre = static_cast<double>(m) / half;
    ok = ok && window < prev && std::abs(centre - 1.0) <= 0.15;
    if (n == sizes.back()) ok = ok && window <= 1.15;
    prev = window;
    why << " n=" << n << ' ' << fmt(window) << ", " << fmt(centre) << ';';
  }
  why << " need window decreasing, <= 1.15 at n=512, centre within 15%";
  return {ok, why.str()};
}

Outcome p10() {
  constexpr std::size_t kM = 4000;
  auto run = [&](const std::vector<std::string>& specs, const std::string& tag) {
    std::vector<WeightedGraph> graphs;
    for (const auto& s : specs) graphs.push_back(graph_of(s));
    std::vector<ConcentrationCase> cases;
    for (std::size_t i = 0; i < specs.size(); ++i) cases.push_back({specs[i], &graphs[i], 0});
    return concentration_experiment(cases, true, kM, derive_seed(kSeed, "P10/" + tag));
  };
  const auto torus = run({"torus:d=3,side=8", "torus:d=3,side=12", "torus:d=3,side=16"}, "torus");
  const auto complete = run({"complete:n=64", "complete:n=128", "complete:n=256", "complete:n=512"}, "complete");
  const auto gaskets = run({gasket(3), gasket(4), gasket(5), gasket(6)}, "gasket");
  double torus_max = 0.0;
  for (const auto& e : torus) torus_max = std::max(torus_max, e.ci_hi);
  bool gasket_ok = true;
  for (const auto& e : gaskets) gasket_ok = gasket_ok && e.ci_lo > torus_max;
  const bool t_ok = cv_strictly_decreasing(torus, true), c_ok = cv_strictly_decreasing(complete, true);
  std::ostringstream why;
  auto list = [&](const char* name, const std::vector<CvEstimate>& v) {
    why << name << ':';
    for (const auto& e : v) why << ' ' << fmt(e.cv, 3) << " [" << fmt(e.ci_lo, 3) << ',' << fmt(e.ci_hi, 3) << ']';
    why << "; ";
  };
  list("torus3", torus);
  list("complete", complete);
  list("gasket", gaskets);
  why << "torus decreasing " << t_ok << ", complete decreasing " << c_ok << ", gasket above torus " << gasket_ok;
  return {t_ok && c_ok && gasket_ok, why.str()};
}

Outcome p11() {
  const auto g = graph_of(gasket(5));
  const LaplacianSystem sys(g);
  const auto summary = resistance_summary(sys);
  const WalkKernel lazy(g, true);
  std::vector<std::pair<Vertex, Vertex>> pairs{{summary.x, summary.y}, {summary.y, summary.x}};
  for (std::size_t i = 0; i < 30; ++i) {
    CounterRng rng = make_stream(derive_seed(kSeed, "P11/pairs"), i);
    pairs.emplace_back(static_cast<Vertex>(rng.bounded(g.vertex_count())),
                       static_cast<Vertex>(rng.bounded(g.vertex_count())));
  }
  const auto t = static_cast<std::uint64_t>(std::ceil(8.0 * summary.s_n));
  const auto r = range_covers_resistance_ball(lazy, summary, 0.1, t, pairs, 4000, derive_seed(kSeed, "P11"));
  const auto& w = r.pairs[r.worst];
  return {r.within_envelope(), "kappa=0.1, t=8S_N=" + std::to_string(t) + ", worst P(miss)=" +
                                   fmt(w.probability) + " +- " + fmt(w.stderr_, 2) + " (ball " +
                                   std::to_string(w.ball_size) + "), envelope " + fmt(r.envelope)};
}

// Dense generalized eigenproblem L_S f = lambda D_S f.
double dense_dirichlet(const WeightedGraph& g, const std::vector<Vertex>& s) {
  const auto k = static_cast<Eigen::Index>(s.size());
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(k, k), b = Eigen::MatrixXd::Zero(k, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    a(i, i) = g.vertex_weight(s[i]);
    b(i, i) = g.vertex_weight(s[i]);
    for (Eigen::Index j = 0; j < k; ++j)
      if (i != j) a(i, j) = -g.conductance(s[i], s[j]);
  }
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(a, b, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

Outcome p12() {
  const auto g = graph_of(gasket(4));
  const auto subsets = sample_connected_subsets(g, 200, g.vertex_count() / 2, derive_seed(kSeed, "P12"));
  const auto fk = faber_krahn_check(g, subsets, kDw, kDf);
  double oracle_min = 1e300, max_rel = 0.0;
  for (std::size_t i = 0; i < subsets.size(); ++i) {
    const double lam = dense_dirichlet(g, subsets[i]);
    oracle_min = std::min(oracle_min, lam * std::pow(g.measure(subsets[i]), kDw / kDf));
    max_rel = std::max(max_rel, std::abs(fk.rows[i].lambda1 - lam) / lam);
  }
  return {fk.min_product > 0.05 && max_rel <= 1e-6,
          "min lambda1*mu^(d_w/d_f)=" + fmt(fk.min_product) + " (dense oracle " + fmt(oracle_min) +
              ", max rel eigen error " + fmt(max_rel, 2) + "), floor 0.05"};
}

Outcome mp12() {
  bool ok = true;
  std::ostringstream why;
  double proxy = 0.0;
  for (int level = 1; level <= 3; ++level) {
    const auto g = graph_of("carpet:L=3,b=1,d=3,level=" + std::to_string(level));
    Mp12Options opt;
    opt.proxy_constant = proxy;
    const auto rep = mp12_diagnostics(g, "level " + std::to_string(level), opt);
    // Calibrate c in c * R_N^2 on the largest level solved exactly.
    if (!rep.t_mix_proxy) proxy = rep.t_mix_u / std::pow(diameter(g).value, 2.0);
    ok = ok && rep.green_monotone;
    why << "L" << level << " n=" << rep.vertices << " T=" << fmt(rep.t_mix_u) << (rep.t_mix_proxy ? "(proxy)" : "")
        << " shells " << rep.green.size() << " monotone " << rep.green_monotone << "; ";
  }
  why << "g(x,A) over d(x,A), carpet L=3 b=1 d=3";
  return {ok, why.str()};
}

struct Criterion {
  const char* id;
  const char* title;
  std::function<Outcome()> run;
  double max_seconds = 0.0;  // 0: no runtime limit
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all{
      {"P1", "gasket volume exponent", p1, 60.0},
      {"P2", "gasket walk exponent", p2, 600.0},
      {"P3", "resistance scaling", p3},
      {"P4", "commute-time identity", p4},
      {"P5", "S_N comparable to T_N", p5},
      {"P6", "cover-time tail", p6},
      {"P7", "bound ordering and exactness", p7},
      {"P8", "no-cutoff evidence on gaskets", p8},
      {"P9", "cutoff on complete graphs", p9, 1200.0},
      {"P10", "concentration dichotomy", p10},
      {"P11", "range covers resistance balls", p11},
      {"P12", "Faber-Krahn positivity", p12},
      {"MP12", "carpet Green decay", mp12},
  };
  std::set<std::string> only(argv + 1, argv + argc);
  int failed = 0;
  for (const auto& c : all) {
    if (!only.empty() && !only.count(c.id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.max_seconds > 0 && secs > c.max_seconds) {
      o.pass = false;
      o.detail += "; over the " + fmt(c.max_seconds) + " s budget";
    }
    std::printf("%-4s %s  %s: %s [%.1f s]\n", c.id, o.pass ? "PASS" : "FAIL", c.title, o.detail.c_str(), secs);
    std::fflush(stdout);
    failed += !o.pass;
  }
  std::printf("%d criteria failed\n", failed);
  return failed ? 1 : 0;
}
