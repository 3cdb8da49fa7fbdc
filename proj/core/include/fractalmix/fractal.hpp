#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "fractalmix/graph.hpp"

namespace fractalmix {

// Level-N Sierpinski gasket in dimension d (d + 1 corner simplex).
struct GasketSpec {
  int level = 0;
  int dim = 2;
};

using Cell = std::vector<int>;

// Generalized Sierpinski carpet: the unit cube is cut into base^dim cells of
// which `kept_cells` survive at every level.
struct CarpetSpec {
  int level = 0;
  int base = 3;
  int dim = 2;
  std::vector<Cell> kept_cells;
  // Side of the removed central block when built by central_hole(); 0 for a
  // full block, nullopt for arbitrary cell patterns.
  std::optional<int> hole;

  // Removes the central hole^dim block. Requires 1 <= hole <= base - 1 and
  // base - hole even; hole == 0 keeps every cell.
  static CarpetSpec central_hole(int base, int hole, int dim, int level);

  std::size_t kept_count() const noexcept { return kept_cells.size(); }
};

enum class BaselineKind { path, cycle, torus, complete };

struct BaselineSpec {
  BaselineKind kind = BaselineKind::path;
  std::size_t n = 2;     // path / cycle / complete size
  int dim = 2;           // torus dimension
  std::size_t side = 3;  // torus side
};

// Deterministic conductances drawn from {c_e^-1, c_e^-1/2, 1, c_e^1/2, c_e}.
struct RoughWeights {
  double c_e = 1.0;
  std::uint64_t seed = 0;
};

struct GraphSpec {
  std::variant<GasketSpec, CarpetSpec, BaselineSpec> family;
  std::optional<RoughWeights> rough;
  std::string text;  // canonical spec string
};

inline constexpr std::size_t kGeneratorBudget = 50'000'000;

// Throws ValidationError naming the first violated carpet condition
// ("symmetry", "connectedness", "non-diagonality", "borders included").
void validate_carpet(const CarpetSpec& spec);

WeightedGraph build_gasket(const GasketSpec& spec, std::size_t budget = kGeneratorBudget);
WeightedGraph build_carpet(const CarpetSpec& spec, std::size_t budget = kGeneratorBudget);
WeightedGraph build_baseline(const BaselineSpec& spec);

// Parses "gasket:d=2,level=6", "carpet:L=3,b=1,d=3,level=3",
// "torus:d=3,side=16", "cycle:n=8", "path:n=100", "complete:n=64".
// Any family accepts `rough=<c_e>` and `wseed=<int>`.
GraphSpec parse_graph_spec(std::string_view text);
WeightedGraph build_graph(const GraphSpec& spec);

enum class Regime { strongly_recurrent, transient, critical, unknown };

struct RegimeInfo {
  Regime regime = Regime::unknown;
  double d_f = 0.0;
  double d_w = 0.0;  // NaN when only a numerical fit can supply it
  std::string note;
};

RegimeInfo classify_regime(const GraphSpec& spec);
std::string to_string(Regime r);

}  // namespace fractalmix
