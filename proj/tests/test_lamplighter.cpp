#include <gtest/gtest.h>

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numeric>

#include "fractalmix/errors.hpp"
#include "fractalmix/fractal.hpp"
#include "fractalmix/lamplighter.hpp"
#include "fractalmix/resistance.hpp"
#include "oracles.hpp"

using namespace fractalmix;

namespace {

WeightedGraph spec_graph(const char* s) { return build_graph(parse_graph_spec(s)); }

// Dense wreath kernel built straight from the move description: switch at
// x, lazy step x -> y, switch at y.
Eigen::MatrixXd wreath_oracle(const WeightedGraph& g) {
  const int n = static_cast<int>(g.vertex_count());
  const auto p = oracle::transition_matrix(g, true);
  const int states = n << n;
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(states, states);
  for (int x = 0; x < n; ++x)
    for (int f = 0; f < (1 << n); ++f)
      for (int a = 0; a < 2; ++a)
        for (int y = 0; y < n; ++y) {
          if (p(x, y) == 0.0) continue;
          for (int b = 0; b < 2; ++b) {
            int h = (f & ~(1 << x)) | (a << x);
            h = (h & ~(1 << y)) | (b << y);
            k((x << n) | f, (y << n) | h) += 0.25 * p(x, y);
          }
        }
  return k;
}

double tv(const Eigen::VectorXd& a, const Eigen::VectorXd& b) { return 0.5 * (a - b).cwiseAbs().sum(); }

}  // namespace

TEST(Wreath, KernelMatchesMoveOracle) {
  for (const char* s : {"path:n=2", "path:n=3", "complete:n=3", "cycle:n=4", "complete:n=4,rough=3,wseed=1"}) {
    const auto g = spec_graph(s);
    const WalkKernel k(g, true);
    const WreathChain w(k);
    const auto o = wreath_oracle(g);
    ASSERT_EQ(static_cast<Eigen::Index>(w.state_count()), o.rows());
    for (std::size_t i = 0; i < w.state_count(); ++i) {
      double row = 0.0;
      for (std::size_t j = 0; j < w.state_count(); ++j) {
        EXPECT_NEAR(w.transition(i, j), o(i, j), 1e-15) << s;
        row += w.transition(i, j);
      }
      EXPECT_NEAR(row, 1.0, 1e-14);
    }
  }
}

TEST(Wreath, KernelDisplayValues) {
  // Staying: 1/4 per lamp value at x. Moving: P(x,y)/8 per (lamp x, lamp y).
  const auto g = spec_graph("path:n=3");
  const WalkKernel k(g, true);
  const WreathChain w(k);
  const auto from = w.index(1, 0b000);
  EXPECT_DOUBLE_EQ(w.transition(from, w.index(1, 0b010)), 0.25);
  EXPECT_DOUBLE_EQ(w.transition(from, w.index(1, 0b000)), 0.25);
  EXPECT_DOUBLE_EQ(w.transition(from, w.index(0, 0b011)), 0.125 * 0.5);
  EXPECT_DOUBLE_EQ(w.transition(from, w.index(2, 0b100)), 0.125 * 0.5);
  EXPECT_DOUBLE_EQ(w.transition(from, w.index(2, 0b001)), 0.0);
  const auto pi = w.stationary();
  EXPECT_NEAR(std::accumulate(pi.begin(), pi.end(), 0.0), 1.0, 1e-15);
  EXPECT_DOUBLE_EQ(pi[w.index(1, 0b101)], 0.125 * 0.5);
}

TEST(Wreath, ApplyMatchesDensePowers) {
  const auto g = spec_graph("complete:n=4,rough=3,wseed=1");
  const WalkKernel k(g, true);
  const WreathChain w(k);
  const auto o = wreath_oracle(g);
  std::vector<double> d(w.state_count(), 0.0), next(w.state_count());
  d[w.index(2, 0b0101)] = 1.0;
  Eigen::RowVectorXd ref = Eigen::RowVectorXd::Zero(o.rows());
  ref(w.index(2, 0b0101)) = 1.0;
  for (int t = 0; t < 12; ++t) {
    w.apply(d, next);
    d.swap(next);
    ref = ref * o;
    for (std::size_t i = 0; i < d.size(); ++i) EXPECT_NEAR(d[i], ref(i), 1e-14);
  }
  EXPECT_THROW(WreathChain(k, 10), CapacityError);
}

TEST(Wreath, PositionMarginalIsLazyWalk) {
  for (const char* s : {"gasket:d=2,level=1", "path:n=7", "cycle:n=5,rough=2,wseed=3"}) {
    const auto g = spec_graph(s);
    ASSERT_LE(g.vertex_count(), 10u);
    const WalkKernel k(g, true);
    const WreathChain w(k);
    const auto rows = heat_kernel_rows(k, 1, 25);
    std::vector<double> d(w.state_count(), 0.0), next(w.state_count());
    d[w.index(1, 0)] = 1.0;
    for (std::size_t t = 0; t <= 25; ++t) {
      const auto m = w.position_marginal(d);
      for (Vertex x = 0; x < g.vertex_count(); ++x) EXPECT_NEAR(m[x], rows[t][x], 1e-13) << s;
      w.apply(d, next);
      d.swap(next);
    }
  }
}

TEST(ExactTv, SingleEdgeHandOracle) {
  const auto g = spec_graph("path:n=2");
  const WalkKernel k(g, true);
  const auto curve = exact_tv_curve(k, 0, 0, 60);
  // t = 0: point mass against pi* = 1/8 everywhere.
  EXPECT_NEAR(curve[0], 1.0 - 0.125, 1e-15);
  // t = 1: stay (1/2) leaves lamp 0 uniform and lamp 1 off; move (1/2)
  // randomizes both. Position 0 row: 1/4, 1/4, 0, 0 against 1/8.
  EXPECT_NEAR(curve[1], 0.25, 1e-15);
  for (std::size_t t = 1; t < curve.size(); ++t) EXPECT_LE(curve[t], curve[t - 1] + 1e-12);
  EXPECT_LT(curve.back(), 1e-12);
  const auto o = wreath_oracle(g);
  Eigen::RowVectorXd d = Eigen::RowVectorXd::Zero(8);
  d(0) = 1.0;
  const Eigen::VectorXd pi = Eigen::VectorXd::Constant(8, 0.125);
  for (std::size_t t = 0; t <= 20; ++t) {
    EXPECT_NEAR(curve[t], tv(d.transpose(), pi), 1e-14);
    d = d * o;
  }
}

TEST(ExactTv, ProfilesAreMonotone) {
  for (const char* s : {"gasket:d=2,level=1", "cycle:n=6", "complete:n=5"}) {
    const auto g = spec_graph(s);
    const WalkKernel k(g, true);
    const auto prof = exact_tv_profile(k, 0, 0, 200);
    const double pi0 = invariant_measure(g)[0] / std::pow(2.0, static_cast<double>(g.vertex_count()));
    EXPECT_NEAR(prof.exact.front(), 1.0 - pi0, 1e-12);
    for (std::size_t i = 1; i < prof.exact.size(); ++i) EXPECT_LE(prof.exact[i], prof.exact[i - 1] + 1e-12);
    EXPECT_EQ(prof.t.front(), 0u);
  }
}

TEST(ExactTv, CompleteGraphLampMarginal) {
  const std::size_t n = 5, t_max = 80;
  const auto g = spec_graph("complete:n=5");
  const WalkKernel k(g, true);
  const WreathChain w(k);
  const auto closed = complete_graph_lamp_tv(n, t_max);
  std::vector<double> d(w.state_count(), 0.0), next(w.state_count());
  d[w.index(0, 0)] = 1.0;
  for (std::size_t t = 0; t <= t_max; ++t) {
    std::vector<double> lamps(1u << n, 0.0);
    for (Vertex x = 0; x < n; ++x)
      for (std::uint64_t f = 0; f < (1u << n); ++f) lamps[f] += d[w.index(x, f)];
    double s = 0.0;
    for (const double v : lamps) s += std::abs(v - 1.0 / 32.0);
    EXPECT_NEAR(closed[t], 0.5 * s, 1e-12) << t;
    w.apply(d, next);
    d.swap(next);
  }
}

TEST(ExactTv, CompleteGraphUnvisitedLaw) {
  const auto law = complete_graph_unvisited_law(6, 50);
  EXPECT_DOUBLE_EQ(law[0][5], 1.0);
  for (const auto& row : law) EXPECT_NEAR(std::accumulate(row.begin(), row.end(), 0.0), 1.0, 1e-13);
  // Mean cover time from the law: sum over t of P(U_t > 0).
  const auto long_law = complete_graph_unvisited_law(6, 4000);
  double mean = 0.0;
  for (const auto& row : long_law) mean += 1.0 - row[0];
  EXPECT_NEAR(mean, complete_graph_cover_mean(6, true), 1e-9);
  const auto k5 = spec_graph("complete:n=5");
  EXPECT_NEAR(complete_graph_cover_mean(5, true), oracle::expected_cover_time(k5, 0, true), 1e-9);
  EXPECT_NEAR(complete_graph_cover_mean(5, false), 4.0 * (1 + 0.5 + 1.0 / 3 + 0.25), 1e-12);
}

TEST(Exchangeable, HandCases) {
  const std::vector<double> none{1.0, 0.0, 0.0, 0.0};
  EXPECT_NEAR(tv_exchangeable_exact(none, 3), 0.0, 1e-15);
  std::vector<double> all(11, 0.0);
  all[10] = 1.0;
  EXPECT_NEAR(tv_exchangeable_exact(all, 10), 1.0 - std::pow(2.0, -10), 1e-14);
  // n = 2, U uniform on {0, 2}: P(00) = 5/8, others 1/8.
  const std::vector<double> mix{0.5, 0.0, 0.5};
  EXPECT_NEAR(tv_exchangeable_exact(mix, 2), 3.0 / 8.0, 1e-15);
  EXPECT_THROW(tv_exchangeable_exact(std::vector<double>(20001, 0.0), 20000), CapacityError);
}

TEST(Sws, LampFrequenciesOnSingleEdge) {
  const auto g = spec_graph("path:n=2");
  const WalkKernel k(g, true);
  LamplighterState s;
  s.lamps.assign(2, 0);
  CounterRng rng(17);
  std::array<long, 2> on{0, 0};
  const long steps = 1000000;
  for (long i = 0; i < steps; ++i) {
    sws_step(k, s, rng);
    on[0] += s.lamps[0];
    on[1] += s.lamps[1];
  }
  EXPECT_NEAR(on[0] / double(steps), 0.5, 0.002);
  EXPECT_NEAR(on[1] / double(steps), 0.5, 0.002);
}

TEST(Collapsed, SmallCases) {
  const auto g = spec_graph("path:n=2");
  const WalkKernel k(g, true);
  CounterRng rng(1);
  const auto c0 = collapsed_sample(k, 0, 0, rng);
  EXPECT_EQ(c0.visited_count, 1u);
  EXPECT_FALSE(c0.switched);
  EXPECT_EQ(c0.unrandomized(), 2u);
  int both = 0;
  const int m = 100000;
  for (int i = 0; i < m; ++i) {
    CounterRng r = make_stream(5, i);
    const auto c = collapsed_sample(k, 0, 1, r);
    EXPECT_TRUE(c.switched);
    both += c.visited_count == 2 ? 1 : 0;
    EXPECT_EQ(c.visited_count == 2, c.position == 1);
  }
  EXPECT_NEAR(both / double(m), 0.5, 4 * std::sqrt(0.25 / m));
}

TEST(Collapsed, JointLawMatchesSwsChiSquare) {
  const auto g = spec_graph("path:n=2");
  const WalkKernel k(g, true);
  const std::vector<char> off{0, 0};
  for (const std::uint64_t t : {3u, 5u}) {
    std::map<int, long> a, b;
    const int m = 100000;
    for (int i = 0; i < m; ++i) {
      CounterRng r1 = make_stream(100 + t, i);
      LamplighterState s{off, 0};
      for (std::uint64_t j = 0; j < t; ++j) sws_step(k, s, r1);
      ++a[s.position * 4 + s.lamps[0] + 2 * s.lamps[1]];
      CounterRng r2 = make_stream(200 + t, i);
      const auto st = materialize(collapsed_sample(k, 0, t, r2), off, r2);
      ++b[st.position * 4 + st.lamps[0] + 2 * st.lamps[1]];
    }
    double chi2 = 0.0;
    int cells = 0;
    for (int c = 0; c < 8; ++c) {
      const double x = a[c], y = b[c];
      if (x + y == 0) continue;
      chi2 += (x - y) * (x - y) / (x + y);
      ++cells;
    }
    EXPECT_EQ(cells, 8);
    EXPECT_LT(chi2, 18.48) << "t = " << t;  // chi^2_7 at 0.01
  }
}

TEST(Collapsed, RunIsThreadInvariant) {
  const auto g = spec_graph("gasket:d=2,level=3");
  const WalkKernel k(g, true);
  const std::vector<std::uint64_t> grid{0, 10, 100, 1000};
  const auto a = collapsed_run(k, 0, grid, 300, 7, 1, 1);
  const auto b = collapsed_run(k, 0, grid, 300, 7, 1, 3);
  EXPECT_EQ(a.unrandomized, b.unrandomized);
  EXPECT_EQ(a.zero_ball, b.zero_ball);
  for (std::size_t i = 0; i < 300; ++i) EXPECT_EQ(a.unrandomized[0][i], g.vertex_count());
  for (std::size_t j = 1; j < grid.size(); ++j)
    for (std::size_t i = 0; i < 300; ++i) EXPECT_LE(a.unrandomized[j][i], a.unrandomized[j - 1][i]);
}

TEST(UpperBoundFormula, Arithmetic) {
  std::vector<std::uint64_t> times{100, 200, 300, 350, 380, 390, 400, 401, 500, 900};
  const auto s = CoverTimeSample::from_times(times, true);
  const auto b = tv_upper_bound(s, 100.0, 400);
  EXPECT_NEAR(b.tail, 0.3, 1e-15);
  EXPECT_NEAR(b.crude, 0.55, 1e-15);
  EXPECT_TRUE(std::isnan(b.sharp));
  EXPECT_NEAR(tv_upper_bound(s, 100.0, 400, 0.05).sharp, 0.35, 1e-15);
  EXPECT_NEAR(tv_upper_bound(s, 100.0, 400, std::nullopt, 0.1).tail, 0.4, 1e-15);
  // Past every sample and t >= S_N / (4 eps^2).
  const double eps = 0.1;
  EXPECT_LE(tv_upper_bound(s, 100.0, static_cast<std::uint64_t>(100.0 / (4 * eps * eps)) + 1).crude, eps);
  EXPECT_NEAR(dkw_epsilon(1000, 0.01), std::sqrt(std::log(200.0) / 2000.0), 1e-15);
}

TEST(UpperBoundFormula, DominatesExactOnSingleEdge) {
  const auto g = spec_graph("path:n=2");
  const WalkKernel k(g, true);
  const auto cover = cover_time_distribution(k, 0, 100000, 3);
  const LaplacianSystem sys(g);
  const double s_n = resistance_summary(sys).s_n;
  const auto exact = exact_tv_curve(k, 0, 0, 40);
  const auto walk = walk_tv_curve(k, 0, 40);
  const double infl = dkw_epsilon(cover.sorted.size());
  for (std::uint64_t t = 1; t <= 40; ++t) {
    const auto b = tv_upper_bound(cover, s_n, t, walk[t], infl);
    EXPECT_GE(b.crude, exact[t] - 1e-12);
    EXPECT_GE(b.sharp, exact[t] - 1e-12);
  }
}

TEST(LowerBoundStatistic, Extremes) {
  const std::vector<std::uint32_t> zero(1000, 0);
  EXPECT_EQ(tv_lower_bound_statistic(zero, 20).value, 0.0);
  const std::vector<std::uint32_t> full(1000, 20);
  const auto lb = tv_lower_bound_statistic(full, 20);
  EXPECT_NEAR(lb.raw, 1.0 - std::pow(2.0, -20), 1e-12);
  EXPECT_NEAR(lb.correction, dkw_epsilon(1000), 1e-15);
  EXPECT_NEAR(lb.value, lb.raw - lb.correction, 1e-15);
  // Exact plug-in against the binomial tail oracle at U = 5 of n = 12.
  const std::vector<std::uint32_t> five(5000, 5);
  const auto raw = tv_lower_bound_statistic(five, 12).raw;
  double best = 0.0;
  for (int a = 0; a <= 13; ++a)
    best = std::max(best, std::abs(oracle::binomial_tail(7, a - 5) - oracle::binomial_tail(12, a)));
  EXPECT_NEAR(raw, best, 1e-12);
}

TEST(LowerBoundStatistic, BelowExactTv) {
  const auto g = spec_graph("cycle:n=8");
  const WalkKernel k(g, true);
  const auto exact = exact_tv_curve(k, 0, 0, 120);
  const std::vector<std::uint64_t> grid{1, 5, 20, 40, 80, 120};
  const auto run = collapsed_run(k, 0, grid, 4000, 11);
  for (std::size_t j = 0; j < grid.size(); ++j)
    EXPECT_LE(tv_lower_bound_statistic(run.unrandomized[j], 8).value, exact[grid[j]] + 1e-12);
}

TEST(LowerBoundStatistic, CompleteGraphK64) {
  const auto g = spec_graph("complete:n=64");
  const WalkKernel k(g, true);
  const auto t = static_cast<std::uint64_t>(0.3 * complete_graph_cover_mean(64, false));
  const std::vector<std::uint64_t> grid{t};
  const auto run = collapsed_run(k, 0, grid, 2000, 5);
  EXPECT_GT(tv_lower_bound_statistic(run.unrandomized[0], 64).value, 0.9);
}

TEST(ZeroBall, RadiusAndTerms) {
  const auto c = spec_graph("cycle:n=16");
  // Every radius-1 ball on a cycle has 3 vertices.
  EXPECT_NEAR(zero_ball_union_term(c, 1), 16.0 / 8.0, 1e-15);
  EXPECT_EQ(zero_ball_radius_formula(1.0, 1.0, 1.0, 16), 8);
  const auto small = build_gasket({3, 2});
  try {
    zero_ball_radius_auto(small, 8);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("ball construction degenerate"), std::string::npos);
  }
  EXPECT_THROW(check_zero_ball_radius(4, 16), ValidationError);
  EXPECT_NO_THROW(check_zero_ball_radius(3, 16));
}

TEST(ZeroBall, GasketLevel6) {
  const auto g = build_gasket({6, 2});
  const WalkKernel k(g, true);
  const int r_n = 64;
  const int r = zero_ball_radius_auto(g, r_n);
  const double term = zero_ball_union_term(g, r);
  EXPECT_LE(term, 0.01);
  const auto t_n = static_cast<std::uint64_t>(std::pow(64.0, std::log(5.0) / std::log(2.0)));
  const std::vector<std::uint64_t> grid{0, t_n, 50 * t_n};
  const auto run = collapsed_run(k, 0, grid, 2000, 13, r);
  const auto at0 = tv_lower_bound_zeroball(run.zero_ball[0], term);
  EXPECT_NEAR(at0.raw, 1.0 - term, 1e-12);
  EXPECT_GT(tv_lower_bound_zeroball(run.zero_ball[1], term).value, 0.0);
  EXPECT_EQ(tv_lower_bound_zeroball(run.zero_ball[2], term).value, 0.0);
}

TEST(MixingProfile, EnvelopesAndBrackets) {
  const auto prof = make_tv_profile({0, 1, 2, 3, 4}, {}, {0.9, 0.65, 0.2, 0.25, 0.1},
                                    {1.0, 0.7, 0.8, 0.3, 0.2});
  EXPECT_EQ(prof.upper, (std::vector<double>{1.0, 0.7, 0.7, 0.3, 0.2}));
  EXPECT_EQ(prof.lower, (std::vector<double>{0.9, 0.65, 0.25, 0.25, 0.1}));
  const std::vector<double> eps{0.25, 0.5, 0.75};
  const auto b = mixing_profile(prof, eps);
  EXPECT_EQ(b[0].upper, std::optional<std::uint64_t>(4));
  EXPECT_EQ(b[0].lower, std::optional<std::uint64_t>(2));
  EXPECT_EQ(b[1].upper, std::optional<std::uint64_t>(3));
  EXPECT_EQ(b[1].lower, std::optional<std::uint64_t>(2));
  EXPECT_EQ(b[2].upper, std::optional<std::uint64_t>(1));
  EXPECT_EQ(b[2].lower, std::optional<std::uint64_t>(1));
  EXPECT_FALSE(b[0].exact);
  const std::vector<double> bad{1.0};
  EXPECT_THROW(mixing_profile(prof, bad), ValidationError);
  const std::vector<double> bad0{0.0};
  EXPECT_THROW(mixing_profile(prof, bad0), ValidationError);
}

TEST(MixingProfile, ExactSingleEdgeMonotoneInEps) {
  const auto g = spec_graph("path:n=2");
  const WalkKernel k(g, true);
  const auto prof = exact_tv_profile(k, 0, 0, 100);
  std::vector<double> eps;
  for (double e = 0.05; e < 1.0; e += 0.05) eps.push_back(e);
  const auto b = mixing_profile(prof, eps);
  for (std::size_t i = 1; i < b.size(); ++i) {
    ASSERT_TRUE(b[i].exact && b[i - 1].exact);
    EXPECT_LE(*b[i].exact, *b[i - 1].exact);
  }
  const auto r = cutoff_ratio(b[4], b[14]);  // eps = 1/4 against 3/4
  EXPECT_NEAR(r.exact, double(*b[4].exact) / double(*b[14].exact), 1e-15);
}

TEST(MixingProfile, CompleteGraphWindowsShrink) {
  std::vector<double> ratio;
  for (const std::size_t n : {64u, 128u, 256u, 512u}) {
    const auto t_max = static_cast<std::size_t>(2 * complete_graph_cover_mean(n, true));
    const auto tv = complete_graph_lamp_tv(n, t_max);
    std::vector<std::uint64_t> t(tv.size());
    std::iota(t.begin(), t.end(), std::uint64_t{0});
    const auto prof = make_tv_profile(t, tv, tv, tv);
    const std::vector<double> eps{0.25, 0.75};
    const auto b = mixing_profile(prof, eps);
    ratio.push_back(cutoff_ratio(b[0], b[1]).exact);
  }
  for (std::size_t i = 1; i < ratio.size(); ++i) EXPECT_LT(ratio[i], ratio[i - 1]);
  EXPECT_GT(ratio.back(), 1.0);
}
