#include "fractalmix/linalg.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "fractalmix/errors.hpp"

namespace fractalmix {

void LaplacianSystem::apply(std::span<const double> f, std::span<double> out) const {
  const auto& g = *g_;
  for (Vertex x = 0; x < g.vertex_count(); ++x) {
    const auto nb = g.neighbors(x);
    const auto mu = g.conductances(x);
    double acc = g.vertex_weight(x) * f[x];
    for (std::size_t k = 0; k < nb.size(); ++k) acc -= mu[k] * f[nb[k]];
    out[x] = acc;
  }
}

double LaplacianSystem::energy(std::span<const double> f) const {
  double e = 0.0;
  for (const auto& edge : g_->edges()) {
    const double d = f[edge.u] - f[edge.v];
    e += edge.mu * d * d;
  }
  return e;
}

std::size_t default_cg_cap(std::size_t n) noexcept {
  // Fractal Laplacians have condition numbers growing like n^(d_w/d_f), well
  // beyond what 20 sqrt(n) iterations resolve; 4n + 100 is a safe ceiling.
  const auto sqrt_cap = static_cast<std::size_t>(20.0 * std::sqrt(static_cast<double>(n)));
  return std::max(sqrt_cap, 4 * n + 100);
}

std::vector<double> solve_dirichlet(const LaplacianSystem& sys, std::span<const char> boundary,
                                    std::span<const double> values, std::span<const double> rhs,
                                    const SolverOptions& options, SolveStats* stats) {
  const auto& g = sys.graph();
  const std::size_t n = g.vertex_count();
  if (boundary.size() != n || values.size() != n || rhs.size() != n)
    throw ValidationError("solve_dirichlet: size mismatch");

  std::vector<std::size_t> local(n, n);
  std::vector<Vertex> unknowns;
  for (Vertex x = 0; x < n; ++x) {
    if (!boundary[x]) {
      local[x] = unknowns.size();
      unknowns.push_back(x);
    }
  }
  if (unknowns.size() == n) throw ValidationError("solve_dirichlet: empty boundary");

  std::vector<double> u(values.begin(), values.end());
  for (const Vertex x : unknowns) u[x] = 0.0;
  const std::size_t m = unknowns.size();
  SolveStats st;
  st.unknowns = m;
  if (m == 0) {
    if (stats) *stats = st;
    return u;
  }

  // b = rhs - L_IB u_B on the unknowns.
  Eigen::VectorXd b(static_cast<Eigen::Index>(m));
  for (std::size_t i = 0; i < m; ++i) {
    const Vertex x = unknowns[i];
    double acc = rhs[x];
    const auto nb = g.neighbors(x);
    const auto mu = g.conductances(x);
    for (std::size_t k = 0; k < nb.size(); ++k)
      if (boundary[nb[k]]) acc += mu[k] * values[nb[k]];
    b[static_cast<Eigen::Index>(i)] = acc;
  }
  const double bnorm = b.norm();

  auto apply_local = [&](const Eigen::VectorXd& v, Eigen::VectorXd& out) {
    for (std::size_t i = 0; i < m; ++i) {
      const Vertex x = unknowns[i];
      double acc = g.vertex_weight(x) * v[static_cast<Eigen::Index>(i)];
      const auto nb = g.neighbors(x);
      const auto mu = g.conductances(x);
      for (std::size_t k = 0; k < nb.size(); ++k) {
        const std::size_t j = local[nb[k]];
        if (j != n) acc -= mu[k] * v[static_cast<Eigen::Index>(j)];
      }
      out[static_cast<Eigen::Index>(i)] = acc;
    }
  };

  Eigen::VectorXd sol(static_cast<Eigen::Index>(m));
  if (bnorm == 0.0) {
    sol.setZero();
  } else if (m <= options.dense_cap) {
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m),
                                              static_cast<Eigen::Index>(m));
    for (std::size_t i = 0; i < m; ++i) {
      const Vertex x = unknowns[i];
      const auto ii = static_cast<Eigen::Index>(i);
      a(ii, ii) = g.vertex_weight(x);
      const auto nb = g.neighbors(x);
      const auto mu = g.conductances(x);
      for (std::size_t k = 0; k < nb.size(); ++k) {
        const std::size_t j = local[nb[k]];
        if (j != n) a(ii, static_cast<Eigen::Index>(j)) -= mu[k];
      }
    }
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    if (llt.info() != Eigen::Success)
      throw NumericalError("solve_dirichlet: dense factorization failed", 0.0);
    sol = llt.solve(b);
    st.dense = true;
  } else {
    const std::size_t cap = options.cg_max_iter ? options.cg_max_iter : default_cg_cap(m);
    Eigen::VectorXd inv_diag(static_cast<Eigen::Index>(m));
    for (std::size_t i = 0; i < m; ++i)
      inv_diag[static_cast<Eigen::Index>(i)] = 1.0 / g.vertex_weight(unknowns[i]);
    sol.setZero();
    Eigen::VectorXd r = b;
    Eigen::VectorXd z = r.cwiseProduct(inv_diag);
    Eigen::VectorXd p = z;
    Eigen::VectorXd ap(static_cast<Eigen::Index>(m));
    double rz = r.dot(z);
    double rel = 1.0;
    std::size_t it = 0;
    while (it < cap) {
      apply_local(p, ap);
      const double alpha = rz / p.dot(ap);
      sol += alpha * p;
      r -= alpha * ap;
      ++it;
      rel = r.norm() / bnorm;
      if (rel <= options.cg_tol) break;
      z = r.cwiseProduct(inv_diag);
      const double rz_next = r.dot(z);
      p = z + (rz_next / rz) * p;
      rz = rz_next;
    }
    st.iterations = it;
    if (rel > options.cg_tol) {
      std::ostringstream msg;
      msg << "conjugate gradient did not converge after " << it
          << " iterations (relative residual " << rel << ")";
      throw NumericalError(msg.str(), rel);
    }
  }

  Eigen::VectorXd check(static_cast<Eigen::Index>(m));
  apply_local(sol, check);
  st.residual = bnorm == 0.0 ? 0.0 : (check - b).norm() / bnorm;
  for (std::size_t i = 0; i < m; ++i) u[unknowns[i]] = sol[static_cast<Eigen::Index>(i)];
  if (stats) *stats = st;
  return u;
}

}  // namespace fractalmix
