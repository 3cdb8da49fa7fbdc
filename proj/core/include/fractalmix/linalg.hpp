#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "fractalmix/graph.hpp"

namespace fractalmix {

/// Weighted graph Laplacian L = D - A, applied matrix-free from the graph's
/// CSR arrays. (Lf)(x) = sum_y mu_xy (f(x) - f(y)).
class LaplacianSystem {
 public:
  explicit LaplacianSystem(const WeightedGraph& g) : g_(&g) {}
  explicit LaplacianSystem(WeightedGraph&&) = delete;

  const WeightedGraph& graph() const noexcept { return *g_; }
  std::size_t size() const noexcept { return g_->vertex_count(); }

  void apply(std::span<const double> f, std::span<double> out) const;

  // E(f, f) = 1/2 sum_{x,y} (f(x) - f(y))^2 mu_xy.
  double energy(std::span<const double> f) const;

 private:
  const WeightedGraph* g_;
};

struct SolverOptions {
  double cg_tol = 1e-10;        // relative residual target
  std::size_t cg_max_iter = 0;  // 0: default_cg_cap(n)
  std::size_t dense_cap = 2000;  // exact dense elimination at or below this many unknowns
};

// Default CG iteration cap for n unknowns.
std::size_t default_cg_cap(std::size_t n) noexcept;

struct SolveStats {
  std::size_t unknowns = 0;
  std::size_t iterations = 0;
  double residual = 0.0;  // relative residual of the returned solution
  bool dense = false;
};

// Solves the Dirichlet problem (L u)(x) = rhs(x) for x off the boundary,
// u = values on the boundary. `boundary` is a 0/1 mask over vertices and must
// mark at least one vertex. Unknowns above dense_cap go through Jacobi-
// preconditioned CG; NumericalError is thrown if CG stalls at the cap.
std::vector<double> solve_dirichlet(const LaplacianSystem& sys, std::span<const char> boundary,
                                    std::span<const double> values, std::span<const double> rhs,
                                    const SolverOptions& options = {},
                                    SolveStats* stats = nullptr);

}  // namespace fractalmix
