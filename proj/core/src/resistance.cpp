#include "fractalmix/resistance.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "fractalmix/errors.hpp"
#include "fractalmix/fit.hpp"
#include "fractalmix/rng.hpp"

namespace fractalmix {

double effective_resistance(const LaplacianSystem& sys, std::span<const Vertex> a,
                            std::span<const Vertex> b, const SolverOptions& options,
                            SolveStats* stats) {
  const std::size_t n = sys.size();
  if (a.empty() || b.empty()) throw ValidationError("effective_resistance: empty terminal set");
  std::vector<char> boundary(n, 0);
  std::vector<double> values(n, 0.0);
  for (const Vertex v : a) {
    if (v >= n) throw ValidationError("effective_resistance: vertex out of range");
    boundary[v] = 1;
    values[v] = 1.0;
  }
  for (const Vertex v : b) {
    if (v >= n) throw ValidationError("effective_resistance: vertex out of range");
    if (boundary[v]) throw ValidationError("effective_resistance: A and B intersect");
    boundary[v] = 1;
  }
  const std::vector<double> rhs(n, 0.0);
  const auto u = solve_dirichlet(sys, boundary, values, rhs, options, stats);
  return 1.0 / sys.energy(u);
}

double effective_resistance(const LaplacianSystem& sys, Vertex x, Vertex y,
                            const SolverOptions& options, SolveStats* stats) {
  const Vertex a[] = {x};
  const Vertex b[] = {y};
  return effective_resistance(sys, a, b, options, stats);
}

PairwiseResistance pairwise_resistance(const WeightedGraph& g, std::size_t cap) {
  const std::size_t n = g.vertex_count();
  if (n > cap) throw CapacityError("pairwise resistance: vertex count exceeds pivot cap");
  const auto m = static_cast<Eigen::Index>(n - 1);
  Eigen::MatrixXd inv;
  {
    // Laplacian with vertex 0 grounded.
    Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(m, m);
    for (Vertex x = 1; x < n; ++x) {
      lap(x - 1, x - 1) = g.vertex_weight(x);
      const auto nb = g.neighbors(x);
      const auto mu = g.conductances(x);
      for (std::size_t k = 0; k < nb.size(); ++k)
        if (nb[k] != 0) lap(x - 1, nb[k] - 1) -= mu[k];
    }
    Eigen::LLT<Eigen::MatrixXd> llt(lap);
    if (llt.info() != Eigen::Success)
      throw NumericalError("pairwise resistance: factorization failed", 0.0);
    inv = llt.solve(Eigen::MatrixXd::Identity(m, m));
  }
  auto grounded = [&](Vertex x, Vertex y) -> double {
    return (x == 0 || y == 0) ? 0.0 : inv(x - 1, y - 1);
  };
  std::vector<double> values(n * n, 0.0);
  for (Vertex x = 0; x < n; ++x) {
    for (Vertex y = x + 1; y < n; ++y) {
      const double r = grounded(x, x) - 2.0 * grounded(x, y) + grounded(y, y);
      values[static_cast<std::size_t>(x) * n + y] = r;
      values[static_cast<std::size_t>(y) * n + x] = r;
    }
  }
  return PairwiseResistance(n, std::move(values));
}

ResistanceSummary resistance_summary(const LaplacianSystem& sys, const ResistanceOptions& options) {
  const auto& g = sys.graph();
  const std::size_t n = g.vertex_count();
  ResistanceSummary s;
  if (n <= options.pivot_cap) {
    auto pw = std::make_shared<const PairwiseResistance>(pairwise_resistance(g, options.pivot_cap));
    for (Vertex x = 0; x < n; ++x)
      for (Vertex y = x + 1; y < n; ++y)
        if ((*pw)(x, y) > s.r_max) {
          s.r_max = (*pw)(x, y);
          s.x = x;
          s.y = y;
        }
    s.pairwise = std::move(pw);
  } else {
    if (!options.allow_heuristic)
      throw CapacityError("resistance summary: vertex count exceeds pivot cap");
    // Candidate pairs from hop-distance double sweeps; the max over them is
    // only a lower bound on r(G).
    Vertex a = 0;
    for (std::size_t sweep = 0; sweep < std::max<std::size_t>(options.heuristic_sweeps, 1); ++sweep) {
      const auto d = bfs_distances(g, a);
      const Vertex b = static_cast<Vertex>(std::max_element(d.begin(), d.end()) - d.begin());
      if (a != b) {
        const double r = effective_resistance(sys, a, b, options.solver);
        if (r > s.r_max) {
          s.r_max = r;
          s.x = std::min(a, b);
          s.y = std::max(a, b);
        }
      }
      a = b;
    }
    s.lower_bound = true;
  }
  s.s_n = g.total_weight() * s.r_max;
  return s;
}

std::vector<double> hitting_time(const LaplacianSystem& sys, Vertex target, bool lazy,
                                 const SolverOptions& options) {
  const auto& g = sys.graph();
  const std::size_t n = g.vertex_count();
  if (target >= n) throw ValidationError("hitting_time: vertex out of range");
  std::vector<char> boundary(n, 0);
  boundary[target] = 1;
  const std::vector<double> values(n, 0.0);
  std::vector<double> rhs(g.vertex_weights().begin(), g.vertex_weights().end());
  auto u = solve_dirichlet(sys, boundary, values, rhs, options);
  if (lazy)
    for (auto& v : u) v *= 2.0;
  return u;
}

std::vector<Vertex> resistance_ball(const ResistanceSummary& summary, Vertex x, double kappa) {
  if (!summary.pairwise) throw ValidationError("resistance_ball: pairwise resistances unavailable");
  if (!(kappa >= 0.0 && kappa <= 1.0)) throw ValidationError("resistance_ball: kappa outside [0, 1]");
  std::vector<Vertex> out;
  const auto row = summary.pairwise->row(x);
  for (Vertex y = 0; y < row.size(); ++y)
    if (y == x || row[y] / summary.r_max <= kappa + 1e-12) out.push_back(y);
  return out;
}

ResistanceFit resistance_exponent_fit(const WeightedGraph& g, const PairwiseResistance& reff,
                                      std::size_t samples, std::uint64_t seed) {
  const std::size_t n = g.vertex_count();
  if (reff.size() != n) throw ValidationError("resistance_exponent_fit: size mismatch");
  const int d_max = diameter(g).value / 4;
  if (d_max < 2) throw ValidationError("resistance_exponent_fit: insufficient distance range");
  ResistanceFit out;
  std::vector<double> lx, ly;
  std::vector<Vertex> at;
  for (std::size_t i = 0; i < samples; ++i) {
    CounterRng rng = make_stream(seed, i);
    const auto x = static_cast<Vertex>(rng.bounded(n));
    const double u = rng.uniform();
    const int d = std::clamp(static_cast<int>(std::lround(std::exp(u * std::log(d_max)))), 1, d_max);
    const auto dist = bfs_distances(g, x);
    at.clear();
    for (Vertex y = 0; y < n; ++y)
      if (dist[y] == d) at.push_back(y);
    if (at.empty()) continue;
    const Vertex y = at[rng.bounded(at.size())];
    const double r = reff(x, y);
    out.pairs.push_back({x, y, d, r});
    lx.push_back(std::log(static_cast<double>(d)));
    ly.push_back(std::log(r));
  }
  if (lx.size() < 2) throw ValidationError("resistance_exponent_fit: insufficient distance range");
  const LineFit f = fit_line(lx, ly);
  out.exponent = f.slope;
  out.r2 = f.r2;
  return out;
}

namespace {
void check_green_budget(const WalkKernel& kernel, std::size_t horizon) {
  if (!kernel.lazy()) throw ValidationError("truncated_green: lazy kernel required");
  const auto& g = kernel.graph();
  if (static_cast<double>(horizon) * static_cast<double>(g.vertex_count() + g.adjacency().size()) >
      kHeatOpBudget)
    throw CapacityError("truncated_green: budget exceeded");
}
}  // namespace

std::vector<double> truncated_green(const WalkKernel& kernel, Vertex x, std::size_t horizon) {
  check_green_budget(kernel, horizon);
  const auto& g = kernel.graph();
  const std::size_t n = g.vertex_count();
  if (x >= n) throw ValidationError("truncated_green: vertex out of range");
  std::vector<double> cur(n, 0.0), next(n), acc(n, 0.0);
  cur[x] = 1.0;
  for (std::size_t t = 0;; ++t) {
    for (Vertex y = 0; y < n; ++y) acc[y] += cur[y];
    if (t == horizon) break;
    kernel.apply(cur, next);
    cur.swap(next);
  }
  for (Vertex y = 0; y < n; ++y) acc[y] /= g.vertex_weight(y);
  return acc;
}

std::vector<double> truncated_green_of_set(const WalkKernel& kernel, std::span<const Vertex> a,
                                           std::size_t horizon) {
  check_green_budget(kernel, horizon);
  const auto& g = kernel.graph();
  const std::size_t n = g.vertex_count();
  // sum_{y in A} P_t(x, y) / mu_y = (1_A P^t)(x) / mu_x by reversibility.
  std::vector<double> cur(n, 0.0), next(n), acc(n, 0.0);
  for (const Vertex v : a) {
    if (v >= n) throw ValidationError("truncated_green: vertex out of range");
    cur[v] = 1.0;
  }
  for (std::size_t t = 0;; ++t) {
    for (Vertex y = 0; y < n; ++y) acc[y] += cur[y];
    if (t == horizon) break;
    kernel.apply(cur, next);
    cur.swap(next);
  }
  for (Vertex y = 0; y < n; ++y) acc[y] /= g.vertex_weight(y);
  return acc;
}

std::vector<std::vector<Vertex>> sample_connected_subsets(const WeightedGraph& g,
                                                          std::size_t count, std::size_t max_size,
                                                          std::uint64_t seed) {
  const std::size_t n = g.vertex_count();
  if (n < 2) throw ValidationError("sample_connected_subsets: graph too small");
  max_size = std::clamp<std::size_t>(max_size, 1, n - 1);
  std::vector<std::vector<Vertex>> out;
  out.reserve(count);
  std::vector<char> state(n);  // 0 free, 1 frontier, 2 taken
  for (std::size_t i = 0; i < count; ++i) {
    CounterRng rng = make_stream(seed, i);
    const std::size_t target = 1 + rng.bounded(max_size);
    std::fill(state.begin(), state.end(), 0);
    std::vector<Vertex> taken, frontier{static_cast<Vertex>(rng.bounded(n))};
    state[frontier[0]] = 1;
    while (taken.size() < target && !frontier.empty()) {
      const std::size_t k = rng.bounded(frontier.size());
      const Vertex v = frontier[k];
      frontier[k] = frontier.back();
      frontier.pop_back();
      state[v] = 2;
      taken.push_back(v);
      for (const Vertex y : g.neighbors(v))
        if (state[y] == 0) {
          state[y] = 1;
          frontier.push_back(y);
        }
    }
    std::sort(taken.begin(), taken.end());
    out.push_back(std::move(taken));
  }
  return out;
}

double dirichlet_eigenvalue(const WeightedGraph& g, std::span<const Vertex> subset,
                            std::size_t cap) {
  const std::size_t n = g.vertex_count();
  const std::size_t m = subset.size();
  if (m == 0 || m >= n) throw ValidationError("faber_krahn: subset must be a nonempty proper subset");
  if (m > cap) throw CapacityError("faber_krahn: subset exceeds eigen cap");
  std::vector<std::size_t> local(n, m);
  for (std::size_t i = 0; i < m; ++i) {
    if (subset[i] >= n) throw ValidationError("faber_krahn: vertex out of range");
    if (local[subset[i]] != m) throw ValidationError("faber_krahn: duplicate vertex in subset");
    local[subset[i]] = i;
  }
  const auto mm = static_cast<Eigen::Index>(m);
  Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(mm, mm);
  Eigen::VectorXd w(mm);
  for (std::size_t i = 0; i < m; ++i) {
    const Vertex x = subset[i];
    const auto ii = static_cast<Eigen::Index>(i);
    w[ii] = g.vertex_weight(x);
    lap(ii, ii) = g.vertex_weight(x);
    const auto nb = g.neighbors(x);
    const auto mu = g.conductances(x);
    for (std::size_t k = 0; k < nb.size(); ++k)
      if (local[nb[k]] != m) lap(ii, static_cast<Eigen::Index>(local[nb[k]])) -= mu[k];
  }
  Eigen::LLT<Eigen::MatrixXd> llt(lap);
  if (llt.info() != Eigen::Success) throw NumericalError("faber_krahn: factorization failed", 0.0);
  // The ground state is positive, so the all-ones start has a nonzero overlap.
  Eigen::VectorXd f = Eigen::VectorXd::Ones(mm);
  double lambda = 0.0;
  constexpr std::size_t kMaxIter = 200'000;
  for (std::size_t it = 0; it < kMaxIter; ++it) {
    f = llt.solve(w.cwiseProduct(f));
    f /= std::sqrt(f.dot(w.cwiseProduct(f)));
    const double next = f.dot(lap * f);
    const bool done = it > 0 && std::abs(next - lambda) <= 1e-13 * next;
    lambda = next;
    if (done) {
      const double res = (lap * f - lambda * w.cwiseProduct(f)).norm() / (lambda * w.norm());
      if (res <= 1e-6) return lambda;
    }
  }
  throw NumericalError("faber_krahn: inverse iteration did not converge", lambda);
}

FkResult faber_krahn_check(const WeightedGraph& g, std::span<const std::vector<Vertex>> subsets,
                           double d_w, double d_f, std::size_t cap) {
  if (subsets.empty()) throw ValidationError("faber_krahn: no subsets");
  FkResult out;
  out.min_product = std::numeric_limits<double>::infinity();
  for (const auto& s : subsets) {
    FkRow row;
    row.size = s.size();
    row.mu_s = g.measure(s);
    row.lambda1 = dirichlet_eigenvalue(g, s, cap);
    row.product = row.lambda1 * std::pow(row.mu_s, d_w / d_f);
    out.min_product = std::min(out.min_product, row.product);
    out.rows.push_back(row);
  }
  return out;
}

UniformDistance::UniformDistance(const WeightedGraph& g, std::size_t cap) : n_(g.vertex_count()) {
  if (n_ > cap) throw CapacityError("uniform mixing: vertex count exceeds exact cap");
  const auto n = static_cast<Eigen::Index>(n_);
  // D^(1/2) P~ D^(-1/2) is symmetric with the spectrum of the lazy kernel.
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(n, n);
  for (Vertex x = 0; x < n_; ++x) {
    s(x, x) = 0.5;
    const auto nb = g.neighbors(x);
    const auto mu = g.conductances(x);
    for (std::size_t k = 0; k < nb.size(); ++k)
      s(x, nb[k]) = 0.5 * mu[k] / std::sqrt(g.vertex_weight(x) * g.vertex_weight(nb[k]));
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(s);
  if (eig.info() != Eigen::Success) throw NumericalError("uniform mixing: eigensolver failed", 0.0);
  const auto pi = invariant_measure(g);
  // Eigenvalues ascend; the last one is the stationary eigenvalue 1.
  lambda_.resize(n_ - 1);
  weight_.resize((n_ - 1) * n_);
  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    lambda_[static_cast<std::size_t>(i)] = std::clamp(eig.eigenvalues()[i], 0.0, 1.0);
    for (Eigen::Index x = 0; x < n; ++x) {
      const double phi = eig.eigenvectors()(x, i);
      weight_[static_cast<std::size_t>(i) * n_ + static_cast<std::size_t>(x)] =
          phi * phi / pi[static_cast<std::size_t>(x)];
    }
  }
}

double UniformDistance::operator()(std::uint64_t t) const {
  // The lazy kernel is positive semidefinite, so by Cauchy-Schwarz the sup of
  // |k_t(x, y) - 1| is attained on the diagonal, where
  // k_t(x, x) - 1 = sum_i lambda_i^t phi_i(x)^2 / pi(x) >= 0.
  std::vector<double> diag(n_, 0.0);
  const double td = static_cast<double>(t);
  for (std::size_t i = 0; i < lambda_.size(); ++i) {
    const double p = std::pow(lambda_[i], td);
    if (p == 0.0) continue;
    const double* w = weight_.data() + i * n_;
    for (std::size_t x = 0; x < n_; ++x) diag[x] += p * w[x];
  }
  return *std::max_element(diag.begin(), diag.end());
}

std::uint64_t UniformDistance::mixing_time(double eps) const {
  if (!(eps > 0.0)) throw ValidationError("uniform mixing: epsilon must be positive");
  // The spectral sum carries rounding of order n ulps; ties at exactly eps
  // (K_n at t = 1, eps = 1) must resolve as reached.
  eps *= 1.0 + 1e-12;
  if ((*this)(0) <= eps) return 0;
  std::uint64_t lo = 0, hi = 1;  // distance(lo) > eps
  while ((*this)(hi) > eps) {
    lo = hi;
    if (hi > (std::uint64_t{1} << 60)) throw NumericalError("uniform mixing: no convergence", 0.0);
    hi *= 2;
  }
  while (hi - lo > 1) {
    const std::uint64_t mid = lo + (hi - lo) / 2;
    ((*this)(mid) <= eps ? hi : lo) = mid;
  }
  return hi;
}

std::uint64_t uniform_mixing_time(const WalkKernel& kernel, double eps, std::size_t cap) {
  if (!kernel.lazy()) throw ValidationError("uniform mixing: lazy kernel required");
  return UniformDistance(kernel.graph(), cap).mixing_time(eps);
}

std::vector<Vertex> ball_cover(const WeightedGraph& g, double eta, int r_n) {
  if (!(eta > 0.0 && eta <= 1.0)) throw ValidationError("ball_cover: eta outside (0, 1]");
  const int radius = static_cast<int>(std::floor(eta * r_n));
  std::vector<char> covered(g.vertex_count(), 0);
  std::vector<Vertex> centers;
  for (Vertex v = 0; v < g.vertex_count(); ++v) {
    if (covered[v]) continue;
    centers.push_back(v);
    for (const Vertex y : ball(g, v, radius)) covered[y] = 1;
  }
  return centers;
}

}  // namespace fractalmix
