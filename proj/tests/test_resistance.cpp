#include <gtest/gtest.h>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

#include "fractalmix/errors.hpp"
#include "fractalmix/fit.hpp"
#include "fractalmix/fractal.hpp"
#include "fractalmix/resistance.hpp"
#include "fractalmix/rng.hpp"
#include "oracles.hpp"

using namespace fractalmix;

namespace {

WeightedGraph spec_graph(const char* s) { return build_graph(parse_graph_spec(s)); }

const double kDwGasket = std::log(5.0) / std::log(2.0);
const double kDfGasket = std::log(3.0) / std::log(2.0);

std::vector<const char*> small_specs() {
  return {"path:n=7",           "cycle:n=10",          "complete:n=9",
          "torus:d=2,side=5",   "gasket:d=2,level=3",  "gasket:d=3,level=2",
          "carpet:L=3,b=1,d=2,level=1", "gasket:d=2,level=3,rough=4,wseed=11",
          "torus:d=3,side=3,rough=2,wseed=5"};
}

}  // namespace

TEST(Resistance, Examples) {
  const auto e = spec_graph("path:n=2");
  const LaplacianSystem se(e);
  EXPECT_NEAR(effective_resistance(se, 0, 1), 1.0, 1e-12);
  const auto p = spec_graph("path:n=11");
  const LaplacianSystem sp(p);
  EXPECT_NEAR(effective_resistance(sp, 0, 10), 10.0, 1e-10);
  const auto t = spec_graph("complete:n=3");
  const LaplacianSystem st(t);
  EXPECT_NEAR(effective_resistance(st, 0, 2), 2.0 / 3.0, 1e-12);
  const std::vector<Vertex> a{0, 1}, b{1, 2};
  EXPECT_THROW(effective_resistance(st, a, b), ValidationError);
}

TEST(Resistance, SetToSet) {
  // Ends of a path of 6 edges against the middle vertex: two length-3 arms in parallel.
  const auto p = spec_graph("path:n=7");
  const LaplacianSystem sys(p);
  const std::vector<Vertex> a{0, 6}, b{3};
  EXPECT_NEAR(effective_resistance(sys, a, b), 1.5, 1e-12);
}

TEST(Resistance, CgAgreesWithDense) {
  const auto g = spec_graph("gasket:d=2,level=5,rough=3,wseed=2");
  const LaplacianSystem sys(g);
  SolverOptions cg;
  cg.dense_cap = 0;
  SolveStats stats;
  for (const Vertex y : {Vertex(1), Vertex(100), Vertex(364)}) {
    const double dense = effective_resistance(sys, 0, y);
    const double iter = effective_resistance(sys, 0, y, cg, &stats);
    EXPECT_FALSE(stats.dense);
    EXPECT_LE(stats.residual, 1e-10);
    EXPECT_NEAR(iter, dense, 1e-8 * dense);
  }
  cg.cg_max_iter = 2;
  try {
    effective_resistance(sys, 0, 364, cg);
    FAIL();
  } catch (const NumericalError& e) {
    EXPECT_GT(e.residual(), 1e-10);
  }
}

TEST(Resistance, PairwiseMatchesPseudoinverse) {
  for (const char* s : small_specs()) {
    const auto g = spec_graph(s);
    const auto pinv = oracle::laplacian_pinv(g);
    const auto pr = pairwise_resistance(g);
    for (Vertex x = 0; x < g.vertex_count(); ++x)
      for (Vertex y = 0; y < g.vertex_count(); ++y) {
        const double r = oracle::resistance(pinv, x, y);
        EXPECT_NEAR(pr(x, y), r, 1e-9 * std::max(1.0, r)) << s;
      }
  }
  EXPECT_THROW(pairwise_resistance(spec_graph("path:n=50"), 10), CapacityError);
}

TEST(Resistance, IsAMetric) {
  for (const char* s : small_specs()) {
    const auto g = spec_graph(s);
    ASSERT_LE(g.vertex_count(), 60u);
    const auto pr = pairwise_resistance(g);
    const Vertex n = static_cast<Vertex>(g.vertex_count());
    for (Vertex x = 0; x < n; ++x)
      for (Vertex y = 0; y < n; ++y) {
        EXPECT_NEAR(pr(x, y), pr(y, x), 1e-12);
        if (x == y) EXPECT_EQ(pr(x, y), 0.0);
        else EXPECT_GT(pr(x, y), 0.0);
        for (Vertex z = 0; z < n; ++z) EXPECT_LE(pr(x, z), pr(x, y) + pr(y, z) + 1e-12);
      }
  }
}

TEST(Resistance, SeriesBoundAndRayleigh) {
  const auto g = spec_graph("torus:d=2,side=6,rough=4,wseed=8");
  const auto pr = pairwise_resistance(g);
  double max_inv = 0.0;
  for (const auto& e : g.edges()) max_inv = std::max(max_inv, 1.0 / e.mu);
  const auto d0 = bfs_distances(g, 0);
  for (Vertex y = 0; y < g.vertex_count(); ++y) EXPECT_LE(pr(0, y), d0[y] * max_inv + 1e-12);

  // Delete random edges; a torus stays connected after removing any one.
  auto edges = g.edges();
  CounterRng rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    auto cut = edges;
    cut.erase(cut.begin() + static_cast<std::ptrdiff_t>(rng.bounded(cut.size())));
    const auto h = WeightedGraph::from_edges(g.vertex_count(), cut);
    const auto ph = pairwise_resistance(h);
    for (Vertex x = 0; x < g.vertex_count(); x += 5)
      for (Vertex y = 0; y < g.vertex_count(); ++y) EXPECT_GE(ph(x, y), pr(x, y) - 1e-12);
  }
}

TEST(Resistance, SummaryExamples) {
  const auto p = spec_graph("path:n=9");
  const LaplacianSystem sp(p);
  const auto s = resistance_summary(sp);
  EXPECT_NEAR(s.r_max, 8.0, 1e-10);
  EXPECT_EQ(std::min(s.x, s.y), 0u);
  EXPECT_EQ(std::max(s.x, s.y), 8u);
  EXPECT_FALSE(s.lower_bound);
  for (const int n : {8, 12, 20}) {
    const auto c = build_baseline({BaselineKind::cycle, static_cast<std::size_t>(n)});
    const LaplacianSystem sc(c);
    EXPECT_NEAR(resistance_summary(sc).r_max, n / 4.0, 1e-10);
  }
  const auto t = spec_graph("complete:n=3");
  const LaplacianSystem st(t);
  const auto ts = resistance_summary(st);
  EXPECT_NEAR(ts.s_n, 4.0, 1e-12);
  EXPECT_NEAR(ts.s_n, t.total_weight() * ts.r_max, 1e-12);

  const auto big = spec_graph("gasket:d=2,level=4");
  const LaplacianSystem sb(big);
  ResistanceOptions capped;
  capped.pivot_cap = 10;
  EXPECT_THROW(resistance_summary(sb, capped), CapacityError);
  capped.allow_heuristic = true;
  const auto h = resistance_summary(sb, capped);
  EXPECT_TRUE(h.lower_bound);
  EXPECT_LE(h.r_max, resistance_summary(sb).r_max + 1e-9);
  EXPECT_GT(h.r_max, 0.0);
}

TEST(Resistance, SnOverTnIsBoundedOnGaskets) {
  std::vector<double> ratio;
  for (int level = 3; level <= 7; ++level) {
    const auto g = build_gasket({level, 2});
    const LaplacianSystem sys(g);
    ratio.push_back(resistance_summary(sys).s_n / std::pow(std::pow(2.0, level), kDwGasket));
  }
  const auto [lo, hi] = std::minmax_element(ratio.begin(), ratio.end());
  EXPECT_LT(*hi / *lo, 2.0);
}

TEST(HittingTime, Examples) {
  const auto e = spec_graph("path:n=2");
  const LaplacianSystem se(e);
  EXPECT_NEAR(hitting_time(se, 1)[0], 1.0, 1e-12);
  EXPECT_NEAR(hitting_time(se, 1, true)[0], 2.0, 1e-12);
  const auto t = spec_graph("complete:n=3");
  const LaplacianSystem st(t);
  EXPECT_NEAR(hitting_time(st, 0)[2] + hitting_time(st, 2)[0], 4.0, 1e-12);
  // Path on 3 vertices: R_eff(ends) = 2, mu(G) = 4.
  const auto p3 = spec_graph("path:n=3");
  const LaplacianSystem s3(p3);
  EXPECT_NEAR(hitting_time(s3, 0)[2] + hitting_time(s3, 2)[0], 8.0, 1e-12);
  const auto h = oracle::hitting_times(p3, 0, false);
  EXPECT_NEAR(h[2] + oracle::hitting_times(p3, 2, false)[0], 8.0, 1e-12);
}

TEST(HittingTime, MatchesFirstStepOracle) {
  for (const char* s : small_specs()) {
    const auto g = spec_graph(s);
    const LaplacianSystem sys(g);
    for (const bool lazy : {false, true}) {
      const auto lib = hitting_time(sys, 1, lazy);
      const auto ref = oracle::hitting_times(g, 1, lazy);
      for (Vertex z = 0; z < g.vertex_count(); ++z) EXPECT_NEAR(lib[z], ref[z], 1e-8 * std::max(1.0, ref[z])) << s;
    }
  }
}

TEST(HittingTime, CommuteIdentity) {
  for (const char* s : small_specs()) {
    const auto g = spec_graph(s);
    const LaplacianSystem sys(g);
    const auto pr = pairwise_resistance(g);
    for (Vertex x = 0; x < g.vertex_count(); x += 3) {
      const auto hx = hitting_time(sys, x);
      for (Vertex z = 0; z < g.vertex_count(); z += 2) {
        if (z == x) continue;
        const double commute = hx[z] + hitting_time(sys, z)[x];
        const double rhs = pr(x, z) * g.total_weight();
        EXPECT_LE(std::abs(commute - rhs) / rhs, 1e-8) << s;
      }
    }
  }
}

TEST(ResistanceBall, Examples) {
  const auto c = spec_graph("cycle:n=8");
  const LaplacianSystem sys(c);
  const auto s = resistance_summary(sys);
  EXPECT_EQ(resistance_ball(s, 3, 0.0), std::vector<Vertex>{3});
  EXPECT_EQ(resistance_ball(s, 3, 1.0).size(), 8u);
  // R(k) = k(8 - k)/8 and r(G) = 2: only k <= 1 lies within 1.
  EXPECT_EQ(resistance_ball(s, 0, 0.5), (std::vector<Vertex>{0, 1, 7}));
  // k = 2 enters at 12/8 / 2 = 0.75.
  EXPECT_EQ(resistance_ball(s, 0, 0.75), (std::vector<Vertex>{0, 1, 2, 6, 7}));
}

TEST(ResistanceFit, Exponents) {
  auto fit = [](const char* spec) {
    const auto g = spec_graph(spec);
    return resistance_exponent_fit(g, pairwise_resistance(g), 2000, 1).exponent;
  };
  EXPECT_NEAR(fit("path:n=512"), 1.0, 0.02);
  EXPECT_NEAR(fit("gasket:d=2,level=6"), kDwGasket - kDfGasket, 0.1);
  EXPECT_NEAR(fit("torus:d=3,side=8"), 0.0, 0.1);
}

TEST(TruncatedGreen, SmallCases) {
  const auto e = spec_graph("path:n=2");
  const WalkKernel k(e, true);
  const auto g0 = truncated_green(k, 0, 0);
  EXPECT_DOUBLE_EQ(g0[0], 1.0);
  EXPECT_DOUBLE_EQ(g0[1], 0.0);
  // P~_0 = 1, P~_1 = 1/2, P~_2 = 1/2 on the diagonal; 0, 1/2, 1/2 off it.
  const auto g2 = truncated_green(k, 0, 2);
  EXPECT_DOUBLE_EQ(g2[0], 2.0);
  EXPECT_DOUBLE_EQ(g2[1], 1.0);
}

TEST(TruncatedGreen, SymmetricAndMonotone) {
  const auto g = spec_graph("gasket:d=2,level=3,rough=4,wseed=6");
  const WalkKernel k(g, true);
  std::vector<std::vector<double>> rows;
  for (Vertex x = 0; x < g.vertex_count(); ++x) rows.push_back(truncated_green(k, x, 80));
  for (Vertex x = 0; x < g.vertex_count(); ++x)
    for (Vertex y = 0; y < g.vertex_count(); ++y) EXPECT_NEAR(rows[x][y], rows[y][x], 1e-9);
  const auto shorter = truncated_green(k, 4, 40);
  for (Vertex y = 0; y < g.vertex_count(); ++y) EXPECT_LE(shorter[y], rows[4][y] + 1e-15);
  // g(x, A) is the row sum over A.
  const std::vector<Vertex> a{1, 2, 9};
  const auto set = truncated_green_of_set(k, a, 80);
  for (Vertex x = 0; x < g.vertex_count(); ++x)
    EXPECT_NEAR(set[x], rows[x][1] + rows[x][2] + rows[x][9], 1e-9);
}

TEST(TruncatedGreen, DecaysWithDistanceOnTransientCarpet) {
  const auto g = spec_graph("carpet:L=3,b=1,d=3,level=2");
  const WalkKernel k(g, true);
  const auto horizon = uniform_mixing_time(k, 0.25);
  const Vertex x = 0;
  const auto row = truncated_green(k, x, horizon);
  const auto d = bfs_distances(g, x);
  const int r_n = diameter(g).value;
  std::vector<double> lx, ly;
  for (int r = 1; r <= r_n / 2; ++r) {
    double s = 0.0;
    int c = 0;
    for (Vertex y = 0; y < g.vertex_count(); ++y)
      if (d[y] == r) {
        s += row[y];
        ++c;
      }
    if (c == 0) continue;
    lx.push_back(std::log(r));
    ly.push_back(std::log(s / c));
  }
  EXPECT_LT(fit_line(lx, ly).slope, 0.0);
}

TEST(FaberKrahn, SingletonAndSegment) {
  const auto g = spec_graph("path:n=30");
  const std::vector<Vertex> one{7};
  EXPECT_NEAR(dirichlet_eigenvalue(g, one), 1.0, 1e-9);
  std::vector<Vertex> seg;
  for (Vertex v = 5; v < 17; ++v) seg.push_back(v);
  // Dense oracle: L restricted to S against D restricted to S.
  const auto l = oracle::laplacian(g);
  const auto k = static_cast<Eigen::Index>(seg.size());
  Eigen::MatrixXd a(k, k), b = Eigen::MatrixXd::Zero(k, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = 0; j < k; ++j) a(i, j) = l(seg[i], seg[j]);
    b(i, i) = g.vertex_weight(seg[i]);
  }
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(a, b);
  EXPECT_NEAR(dirichlet_eigenvalue(g, seg), es.eigenvalues().minCoeff(), 1e-8);
  std::vector<Vertex> all(30);
  for (Vertex v = 0; v < 30; ++v) all[v] = v;
  EXPECT_THROW(dirichlet_eigenvalue(g, all), ValidationError);
}

TEST(FaberKrahn, GasketProductIsPositive) {
  const auto g = spec_graph("gasket:d=2,level=4");
  const auto subsets = sample_connected_subsets(g, 200, g.vertex_count() / 2, 9);
  ASSERT_EQ(subsets.size(), 200u);
  for (const auto& s : subsets) {
    EXPECT_GE(s.size(), 1u);
    EXPECT_TRUE(std::is_sorted(s.begin(), s.end()));
  }
  const auto fk = faber_krahn_check(g, subsets, kDwGasket, kDfGasket);
  EXPECT_GT(fk.min_product, 0.0);
  ASSERT_EQ(fk.rows.size(), 200u);
  for (const auto& row : fk.rows)
    EXPECT_NEAR(row.product, row.lambda1 * std::pow(row.mu_s, kDwGasket / kDfGasket), 1e-9 * row.product);
}

TEST(UniformMixing, CompleteGraphByPowering) {
  const auto g = spec_graph("complete:n=4");
  const auto p = oracle::transition_matrix(g, true);
  auto brute = [&](double eps) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Identity(4, 4);
    for (std::uint64_t t = 0;; ++t) {
      if (((m.array() * 4.0) - 1.0).abs().maxCoeff() <= eps) return t;
      m = m * p;
    }
  };
  const WalkKernel k(g, true);
  for (const double eps : {1.0, 0.5, 0.1, 1e-3}) EXPECT_EQ(uniform_mixing_time(k, eps), brute(eps));
  const UniformDistance u(g);
  EXPECT_NEAR(u(0), 3.0, 1e-9);
  EXPECT_NEAR(u(1), 1.0, 1e-9);
}

TEST(UniformMixing, MonotoneAndCapped) {
  const auto g = spec_graph("gasket:d=2,level=3,rough=3,wseed=4");
  const UniformDistance u(g);
  std::uint64_t prev = 0;
  for (const double eps : {2.0, 1.0, 0.5, 0.25, 0.1, 0.01}) {
    const auto t = u.mixing_time(eps);
    EXPECT_GE(t, prev);
    prev = t;
  }
  for (std::uint64_t t = 1; t < 200; ++t) EXPECT_LE(u(t), u(t - 1) + 1e-12);
  EXPECT_THROW(UniformDistance(spec_graph("path:n=30"), 10), CapacityError);
}

TEST(UniformMixing, GasketRatioIsBounded) {
  std::vector<double> ratio;
  for (int level = 2; level <= 5; ++level) {
    const auto g = build_gasket({level, 2});
    const WalkKernel k(g, true);
    ratio.push_back(uniform_mixing_time(k, 0.25) / std::pow(std::pow(2.0, level), kDwGasket));
  }
  const auto [lo, hi] = std::minmax_element(ratio.begin(), ratio.end());
  EXPECT_LT(*hi / *lo, 3.0);
}

TEST(BallCover, Examples) {
  const auto c = spec_graph("cycle:n=8");
  EXPECT_EQ(ball_cover(c, 1.0, 4).size(), 1u);
  EXPECT_EQ(ball_cover(c, 0.5, 4), (std::vector<Vertex>{0, 3}));
  EXPECT_THROW(ball_cover(c, 0.0, 4), ValidationError);
  std::vector<std::size_t> sizes;
  for (int level = 3; level <= 6; ++level) {
    const auto g = build_gasket({level, 2});
    const auto centers = ball_cover(g, 0.25, 1 << level);
    // Union of the balls is V(G).
    std::vector<Vertex> srcs(centers.begin(), centers.end());
    const auto d = bfs_distances(g, srcs);
    for (const int v : d) EXPECT_LE(v, (1 << level) / 4);
    sizes.push_back(centers.size());
  }
  EXPECT_LE(*std::max_element(sizes.begin(), sizes.end()), 12u);
}

TEST(Modulus, CurveShape) {
  const auto g = spec_graph("gasket:d=2,level=4");
  const LaplacianSystem sys(g);
  const auto s = resistance_summary(sys);
  const double kappa = 0.05;
  std::vector<std::vector<Vertex>> close(g.vertex_count());
  for (Vertex x = 0; x < g.vertex_count(); ++x)
    for (const Vertex y : resistance_ball(s, x, kappa))
      if (y != x) close[x].push_back(y);
  std::vector<double> lambdas;
  for (double l = 0.0; l <= 40.0; l += 0.5) lambdas.push_back(l);
  const WalkKernel k(g, false);
  const auto curve = modulus_of_continuity_stat(k, close, s.r_max, kappa,
                                                static_cast<std::uint64_t>(s.s_n), 0, lambdas, 200, 3);
  EXPECT_DOUBLE_EQ(curve.probability.front(), 1.0);
  for (std::size_t i = 1; i < curve.probability.size(); ++i)
    EXPECT_LE(curve.probability[i], curve.probability[i - 1]);
  EXPECT_LT(curve.probability.back(), 0.1);
  EXPECT_NEAR(curve.phi, modulus_phi(kappa), 1e-15);
}
