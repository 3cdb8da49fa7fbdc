#include "fractalmix/fractal.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include "fractalmix/errors.hpp"
#include "fractalmix/rng.hpp"

namespace fractalmix {

namespace {

using Point = std::vector<std::int64_t>;

// Sorts and deduplicates the collected corner points; vertex ids follow the
// lexicographic order of coordinates.
struct PointIndex {
  std::size_t dim;
  std::vector<std::int64_t> flat;  // sorted unique points, dim entries each

  std::size_t size() const { return flat.size() / dim; }

  std::size_t find(const std::int64_t* p) const {
    std::size_t lo = 0, hi = size();
    while (lo < hi) {
      const std::size_t mid = (lo + hi) / 2;
      const auto* q = flat.data() + mid * dim;
      if (std::lexicographical_compare(q, q + dim, p, p + dim))
        lo = mid + 1;
      else
        hi = mid;
    }
    return lo;
  }
};

PointIndex index_points(std::vector<std::int64_t> raw, std::size_t dim) {
  const std::size_t count = raw.size() / dim;
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::lexicographical_compare(raw.begin() + a * dim, raw.begin() + (a + 1) * dim,
                                        raw.begin() + b * dim, raw.begin() + (b + 1) * dim);
  });
  PointIndex idx{dim, {}};
  idx.flat.reserve(raw.size());
  for (std::size_t k = 0; k < count; ++k) {
    const auto* p = raw.data() + order[k] * dim;
    if (k > 0 && std::equal(p, p + dim, idx.flat.end() - static_cast<std::ptrdiff_t>(dim)))
      continue;
    idx.flat.insert(idx.flat.end(), p, p + dim);
  }
  return idx;
}

std::vector<Edge> dedup_edges(std::vector<Edge> edges) {
  for (auto& e : edges)
    if (e.u > e.v) std::swap(e.u, e.v);
  std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) {
    return a.u != b.u ? a.u < b.u : a.v < b.v;
  });
  edges.erase(std::unique(edges.begin(), edges.end(),
                          [](const Edge& a, const Edge& b) { return a.u == b.u && a.v == b.v; }),
              edges.end());
  return edges;
}

std::size_t checked_pow(std::size_t base, int exp, std::size_t budget, const char* what) {
  std::size_t r = 1;
  for (int i = 0; i < exp; ++i) {
    if (r > budget / base) throw CapacityError(std::string(what) + ": generator budget exceeded");
    r *= base;
  }
  return r;
}

std::int64_t ipow(std::int64_t b, int e) {
  std::int64_t r = 1;
  for (int i = 0; i < e; ++i) r *= b;
  return r;
}

}  // namespace

WeightedGraph build_gasket(const GasketSpec& spec, std::size_t budget) {
  if (spec.level < 0) throw ValidationError("gasket: level must be >= 0");
  if (spec.dim < 2) throw ValidationError("gasket: dimension must be >= 2");
  const std::size_t d = static_cast<std::size_t>(spec.dim);
  const std::size_t corners = d + 1;
  const std::size_t cells = checked_pow(corners, spec.level, budget / corners, "gasket");

  // Affine coordinates in the simplex basis: corner 0 is the origin, corner i
  // is e_i. A level-N cell sits at sum_k 2^k * corner(i_k).
  std::vector<std::int64_t> offsets(cells * d, 0);
  for (std::size_t c = 0; c < cells; ++c) {
    std::size_t code = c;
    for (int k = 0; k < spec.level; ++k) {
      const std::size_t i = code % corners;
      code /= corners;
      if (i > 0) offsets[c * d + (i - 1)] += ipow(2, k);
    }
  }
  std::vector<std::int64_t> raw;
  raw.reserve(cells * corners * d);
  for (std::size_t c = 0; c < cells; ++c) {
    for (std::size_t i = 0; i < corners; ++i) {
      for (std::size_t j = 0; j < d; ++j)
        raw.push_back(offsets[c * d + j] + (i > 0 && j == i - 1 ? 1 : 0));
    }
  }
  const PointIndex idx = index_points(raw, d);
  std::vector<Edge> edges;
  edges.reserve(cells * corners * d / 2);
  for (std::size_t c = 0; c < cells; ++c) {
    std::vector<Vertex> ids(corners);
    for (std::size_t i = 0; i < corners; ++i)
      ids[i] = static_cast<Vertex>(idx.find(raw.data() + (c * corners + i) * d));
    for (std::size_t i = 0; i < corners; ++i)
      for (std::size_t j = i + 1; j < corners; ++j) edges.push_back({ids[i], ids[j], 1.0});
  }
  const std::size_t n = idx.size();
  return WeightedGraph::from_edges(n, dedup_edges(std::move(edges)), idx.flat, d);
}

CarpetSpec CarpetSpec::central_hole(int base, int hole, int dim, int level) {
  if (base < 2) throw ValidationError("carpet: base L must be >= 2");
  if (dim < 2) throw ValidationError("carpet: dimension must be >= 2");
  if (hole < 0 || hole > base - 1)
    throw ValidationError("carpet: central hole b must satisfy 1 <= b <= L-1");
  if ((base - hole) % 2 != 0)
    throw ValidationError("carpet: invalid central hole parity (L - b must be even)");
  CarpetSpec spec;
  spec.level = level;
  spec.base = base;
  spec.dim = dim;
  spec.hole = hole;
  const int lo = (base - hole) / 2, hi = lo + hole;  // removed range [lo, hi)
  const std::size_t total = checked_pow(static_cast<std::size_t>(base), dim,
                                        std::numeric_limits<std::size_t>::max(), "carpet");
  for (std::size_t code = 0; code < total; ++code) {
    Cell c(static_cast<std::size_t>(dim));
    std::size_t rest = code;
    bool inside = hole > 0;
    for (int i = dim - 1; i >= 0; --i) {
      c[static_cast<std::size_t>(i)] = static_cast<int>(rest % static_cast<std::size_t>(base));
      rest /= static_cast<std::size_t>(base);
    }
    for (const int ci : c) inside = inside && ci >= lo && ci < hi;
    if (!inside) spec.kept_cells.push_back(std::move(c));
  }
  return spec;
}

namespace {

struct CellSet {
  int base;
  int dim;
  std::vector<char> kept;  // indexed by mixed-radix code

  std::size_t code(const Cell& c) const {
    std::size_t k = 0;
    for (const int ci : c) k = k * static_cast<std::size_t>(base) + static_cast<std::size_t>(ci);
    return k;
  }
  Cell decode(std::size_t k) const {
    Cell c(static_cast<std::size_t>(dim));
    for (int i = dim - 1; i >= 0; --i) {
      c[static_cast<std::size_t>(i)] = static_cast<int>(k % static_cast<std::size_t>(base));
      k /= static_cast<std::size_t>(base);
    }
    return c;
  }
  bool has(const Cell& c) const { return kept[code(c)] != 0; }
};

// Number of face-connected components among kept cells restricted to `mask`.
std::size_t face_components(const CellSet& cs, const std::vector<char>& mask) {
  std::vector<char> seen(mask.size(), 0);
  std::size_t comps = 0;
  for (std::size_t s = 0; s < mask.size(); ++s) {
    if (!mask[s] || seen[s]) continue;
    ++comps;
    std::vector<std::size_t> stack{s};
    seen[s] = 1;
    while (!stack.empty()) {
      const Cell c = cs.decode(stack.back());
      stack.pop_back();
      for (std::size_t i = 0; i < c.size(); ++i) {
        for (const int step : {-1, 1}) {
          Cell nb = c;
          nb[i] += step;
          if (nb[i] < 0 || nb[i] >= cs.base) continue;
          const std::size_t k = cs.code(nb);
          if (mask[k] && !seen[k]) {
            seen[k] = 1;
            stack.push_back(k);
          }
        }
      }
    }
  }
  return comps;
}

}  // namespace

void validate_carpet(const CarpetSpec& spec) {
  if (spec.base < 2) throw ValidationError("carpet: base L must be >= 2");
  if (spec.dim < 2) throw ValidationError("carpet: dimension must be >= 2");
  if (spec.level < 0) throw ValidationError("carpet: level must be >= 0");
  const std::size_t total = checked_pow(static_cast<std::size_t>(spec.base), spec.dim,
                                        std::size_t{1} << 40, "carpet");
  CellSet cs{spec.base, spec.dim, std::vector<char>(total, 0)};
  for (const auto& c : spec.kept_cells) {
    if (c.size() != static_cast<std::size_t>(spec.dim))
      throw ValidationError("carpet: kept cell has wrong dimension");
    for (const int ci : c)
      if (ci < 0 || ci >= spec.base) throw ValidationError("carpet: kept cell out of range");
    auto& slot = cs.kept[cs.code(c)];
    if (slot) throw ValidationError("carpet: duplicate kept cell");
    slot = 1;
  }
  const std::size_t k = spec.kept_cells.size();
  if (k < static_cast<std::size_t>(spec.base) || k > total)
    throw ValidationError("carpet: kept cell count K must lie in [L, L^d]");

  // (a) invariance under the hyperoctahedral group, via its generators.
  for (const auto& c : spec.kept_cells) {
    for (std::size_t i = 0; i < c.size(); ++i) {
      Cell r = c;
      r[i] = spec.base - 1 - r[i];
      if (!cs.has(r)) throw ValidationError("carpet: condition (a) symmetry violated");
      if (i + 1 < c.size()) {
        Cell t = c;
        std::swap(t[i], t[i + 1]);
        if (!cs.has(t)) throw ValidationError("carpet: condition (a) symmetry violated");
      }
    }
  }
  // (b) interior connectivity, and a crossing from x_1 = 0 to x_1 = 1.
  if (face_components(cs, cs.kept) != 1)
    throw ValidationError("carpet: condition (b) connectedness violated");
  bool low = false, high = false;
  for (const auto& c : spec.kept_cells) {
    low = low || c[0] == 0;
    high = high || c[0] == spec.base - 1;
  }
  if (!low || !high) throw ValidationError("carpet: condition (b) connectedness violated");
  // (c) every 2^d block of cells meets the kept set in a face-connected set.
  const std::size_t corner_blocks = checked_pow(static_cast<std::size_t>(spec.base - 1),
                                                spec.dim, std::size_t{1} << 40, "carpet");
  for (std::size_t b = 0; b < corner_blocks; ++b) {
    Cell origin(static_cast<std::size_t>(spec.dim));
    std::size_t rest = b;
    for (int i = spec.dim - 1; i >= 0; --i) {
      origin[static_cast<std::size_t>(i)] =
          static_cast<int>(rest % static_cast<std::size_t>(spec.base - 1));
      rest /= static_cast<std::size_t>(spec.base - 1);
    }
    std::vector<char> mask(total, 0);
    bool any = false;
    for (std::size_t corner = 0; corner < (std::size_t{1} << spec.dim); ++corner) {
      Cell c = origin;
      for (std::size_t i = 0; i < c.size(); ++i) c[i] += static_cast<int>((corner >> i) & 1U);
      if (cs.has(c)) {
        mask[cs.code(c)] = 1;
        any = true;
      }
    }
    if (any && face_components(cs, mask) != 1)
      throw ValidationError("carpet: condition (c) non-diagonality violated");
  }
  // (d) the bottom edge {(x_1, 0, ..., 0)} is kept.
  for (int i = 0; i < spec.base; ++i) {
    Cell c(static_cast<std::size_t>(spec.dim), 0);
    c[0] = i;
    if (!cs.has(c)) throw ValidationError("carpet: condition (d) borders included violated");
  }
}

WeightedGraph build_carpet(const CarpetSpec& spec, std::size_t budget) {
  validate_carpet(spec);
  const std::size_t d = static_cast<std::size_t>(spec.dim);
  const std::size_t corners = std::size_t{1} << d;
  const std::size_t K = spec.kept_cells.size();
  const std::size_t cells = checked_pow(K, spec.level, budget / corners, "carpet");

  std::vector<std::int64_t> origin(cells * d, 0);
  for (std::size_t c = 0; c < cells; ++c) {
    std::size_t code = c;
    for (int k = 0; k < spec.level; ++k) {
      const auto& kept = spec.kept_cells[code % K];
      code /= K;
      const std::int64_t scale = ipow(spec.base, k);
      for (std::size_t j = 0; j < d; ++j) origin[c * d + j] += scale * kept[j];
    }
  }
  std::vector<std::int64_t> raw;
  raw.reserve(cells * corners * d);
  for (std::size_t c = 0; c < cells; ++c)
    for (std::size_t m = 0; m < corners; ++m)
      for (std::size_t j = 0; j < d; ++j)
        raw.push_back(origin[c * d + j] + static_cast<std::int64_t>((m >> j) & 1U));
  const PointIndex idx = index_points(raw, d);
  std::vector<Edge> edges;
  edges.reserve(cells * d * corners / 2);
  std::vector<Vertex> ids(corners);
  for (std::size_t c = 0; c < cells; ++c) {
    for (std::size_t m = 0; m < corners; ++m)
      ids[m] = static_cast<Vertex>(idx.find(raw.data() + (c * corners + m) * d));
    for (std::size_t m = 0; m < corners; ++m)
      for (std::size_t j = 0; j < d; ++j)
        if (((m >> j) & 1U) == 0) edges.push_back({ids[m], ids[m | (std::size_t{1} << j)], 1.0});
  }
  return WeightedGraph::from_edges(idx.size(), dedup_edges(std::move(edges)), idx.flat, d);
}

WeightedGraph build_baseline(const BaselineSpec& spec) {
  std::vector<Edge> edges;
  std::vector<std::int64_t> coords;
  std::size_t n = spec.n, dim = 1;
  switch (spec.kind) {
    case BaselineKind::path:
      if (n < 2) throw ValidationError("path: n must be >= 2");
      for (std::size_t i = 0; i + 1 < n; ++i)
        edges.push_back({static_cast<Vertex>(i), static_cast<Vertex>(i + 1), 1.0});
      for (std::size_t i = 0; i < n; ++i) coords.push_back(static_cast<std::int64_t>(i));
      break;
    case BaselineKind::cycle:
      if (n < 3) throw ValidationError("cycle: n must be >= 3");
      for (std::size_t i = 0; i < n; ++i)
        edges.push_back({static_cast<Vertex>(i), static_cast<Vertex>((i + 1) % n), 1.0});
      for (std::size_t i = 0; i < n; ++i) coords.push_back(static_cast<std::int64_t>(i));
      break;
    case BaselineKind::complete:
      if (n < 2) throw ValidationError("complete: n must be >= 2");
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
          edges.push_back({static_cast<Vertex>(i), static_cast<Vertex>(j), 1.0});
      dim = 0;
      break;
    case BaselineKind::torus: {
      if (spec.dim < 1) throw ValidationError("torus: d must be >= 1");
      if (spec.side < 3) throw ValidationError("torus: side must be >= 3");
      dim = static_cast<std::size_t>(spec.dim);
      n = checked_pow(spec.side, spec.dim, std::size_t{1} << 31, "torus");
      std::size_t stride = 1;
      for (std::size_t j = 0; j < dim; ++j) {
        for (std::size_t x = 0; x < n; ++x) {
          const std::size_t cj = (x / stride) % spec.side;
          const std::size_t y = x - cj * stride + ((cj + 1) % spec.side) * stride;
          edges.push_back({static_cast<Vertex>(x), static_cast<Vertex>(y), 1.0});
        }
        stride *= spec.side;
      }
      // Coordinates in lexicographic order, most significant first.
      coords.resize(n * dim);
      for (std::size_t x = 0; x < n; ++x) {
        std::size_t rest = x;
        for (std::size_t j = 0; j < dim; ++j) {
          coords[x * dim + (dim - 1 - j)] = static_cast<std::int64_t>(rest % spec.side);
          rest /= spec.side;
        }
      }
      break;
    }
  }
  return WeightedGraph::from_edges(n, dedup_edges(std::move(edges)), std::move(coords), dim);
}

namespace {

std::map<std::string, std::string> parse_params(std::string_view body, std::string_view text) {
  std::map<std::string, std::string> out;
  while (!body.empty()) {
    const auto comma = body.find(',');
    const auto item = body.substr(0, comma);
    body = comma == std::string_view::npos ? std::string_view{} : body.substr(comma + 1);
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string_view::npos || eq == 0)
      throw ValidationError("graph spec '" + std::string(text) + "': expected key=value, got '" +
                            std::string(item) + "'");
    out[std::string(item.substr(0, eq))] = std::string(item.substr(eq + 1));
  }
  return out;
}

long long take_int(std::map<std::string, std::string>& p, const std::string& key,
                   std::optional<long long> fallback, std::string_view text) {
  const auto it = p.find(key);
  if (it == p.end()) {
    if (!fallback) throw ValidationError("graph spec '" + std::string(text) + "': missing " + key);
    return *fallback;
  }
  long long v = 0;
  const auto& s = it->second;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw ValidationError("graph spec '" + std::string(text) + "': " + key +
                          " must be an integer");
  p.erase(it);
  return v;
}

}  // namespace

GraphSpec parse_graph_spec(std::string_view text) {
  const auto colon = text.find(':');
  const std::string family(text.substr(0, colon));
  auto params = parse_params(colon == std::string_view::npos ? "" : text.substr(colon + 1), text);
  GraphSpec spec;
  std::ostringstream canon;
  if (family == "gasket") {
    GasketSpec g;
    g.dim = static_cast<int>(take_int(params, "d", 2, text));
    g.level = static_cast<int>(take_int(params, "level", std::nullopt, text));
    if (g.dim < 2 || g.level < 0) throw ValidationError("gasket: need d >= 2 and level >= 0");
    spec.family = g;
    canon << "gasket:d=" << g.dim << ",level=" << g.level;
  } else if (family == "carpet") {
    const int L = static_cast<int>(take_int(params, "L", std::nullopt, text));
    const int b = static_cast<int>(take_int(params, "b", std::nullopt, text));
    const int d = static_cast<int>(take_int(params, "d", 2, text));
    const int level = static_cast<int>(take_int(params, "level", std::nullopt, text));
    if (level < 0) throw ValidationError("carpet: level must be >= 0");
    spec.family = CarpetSpec::central_hole(L, b, d, level);
    canon << "carpet:L=" << L << ",b=" << b << ",d=" << d << ",level=" << level;
  } else if (family == "torus") {
    BaselineSpec s;
    s.kind = BaselineKind::torus;
    s.dim = static_cast<int>(take_int(params, "d", std::nullopt, text));
    const long long side = take_int(params, "side", std::nullopt, text);
    if (s.dim < 1 || side < 3) throw ValidationError("torus: need d >= 1 and side >= 3");
    s.side = static_cast<std::size_t>(side);
    spec.family = s;
    canon << "torus:d=" << s.dim << ",side=" << s.side;
  } else if (family == "cycle" || family == "path" || family == "complete") {
    BaselineSpec s;
    s.kind = family == "cycle"  ? BaselineKind::cycle
             : family == "path" ? BaselineKind::path
                                : BaselineKind::complete;
    const long long n = take_int(params, "n", std::nullopt, text);
    if (n < (s.kind == BaselineKind::cycle ? 3 : 2))
      throw ValidationError(family + ": n too small");
    s.n = static_cast<std::size_t>(n);
    spec.family = s;
    canon << family << ":n=" << s.n;
  } else {
    throw ValidationError("unknown graph family '" + family + "'");
  }
  if (auto it = params.find("rough"); it != params.end()) {
    RoughWeights w;
    try {
      std::size_t used = 0;
      w.c_e = std::stod(it->second, &used);
      if (used != it->second.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw ValidationError("graph spec: rough must be a number");
    }
    if (!(w.c_e >= 1.0)) throw ValidationError("graph spec: rough (c_e) must be >= 1");
    params.erase(it);
    w.seed = static_cast<std::uint64_t>(take_int(params, "wseed", 0, text));
    spec.rough = w;
    canon << ",rough=" << w.c_e << ",wseed=" << w.seed;
  }
  if (!params.empty())
    throw ValidationError("graph spec '" + std::string(text) + "': unknown key '" +
                          params.begin()->first + "'");
  spec.text = canon.str();
  return spec;
}

WeightedGraph build_graph(const GraphSpec& spec) {
  WeightedGraph g = std::visit(
      [](const auto& fam) -> WeightedGraph {
        using T = std::decay_t<decltype(fam)>;
        if constexpr (std::is_same_v<T, GasketSpec>)
          return build_gasket(fam);
        else if constexpr (std::is_same_v<T, CarpetSpec>)
          return build_carpet(fam);
        else
          return build_baseline(fam);
      },
      spec.family);
  if (!spec.rough || spec.rough->c_e == 1.0) return g;
  auto edges = g.edges();
  for (auto& e : edges) {
    const std::uint64_t h =
        mix64(spec.rough->seed ^ mix64((static_cast<std::uint64_t>(e.u) << 32) | e.v));
    const int k = static_cast<int>(h % 5) - 2;
    e.mu = std::pow(spec.rough->c_e, 0.5 * k);
  }
  std::vector<std::int64_t> coords;
  for (Vertex x = 0; x < g.vertex_count(); ++x) {
    const auto c = g.coord(x);
    coords.insert(coords.end(), c.begin(), c.end());
  }
  return WeightedGraph::from_edges(g.vertex_count(), std::move(edges), std::move(coords),
                                   g.coord_dim());
}

RegimeInfo classify_regime(const GraphSpec& spec) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  return std::visit(
      [nan](const auto& fam) -> RegimeInfo {
        using T = std::decay_t<decltype(fam)>;
        RegimeInfo info;
        if constexpr (std::is_same_v<T, GasketSpec>) {
          info.regime = Regime::strongly_recurrent;
          info.d_f = std::log(fam.dim + 1.0) / std::log(2.0);
          if (fam.dim == 2) {
            info.d_w = std::log(5.0) / std::log(2.0);
          } else {
            info.d_w = nan;
            info.note = "d_w of the higher-dimensional gasket must be fitted";
          }
        } else if constexpr (std::is_same_v<T, CarpetSpec>) {
          info.d_f = std::log(static_cast<double>(fam.kept_count())) / std::log(fam.base);
          info.d_w = nan;
          if (!fam.hole) {
            info.regime = Regime::unknown;
            info.note = "non-central carpet: regime from fitted d_w only";
          } else if (*fam.hole == 0) {
            info.d_w = 2.0;
            info.regime = fam.dim == 2 ? Regime::critical : Regime::transient;
            info.note = "full lattice block";
          } else if (fam.dim == 2) {
            info.regime = Regime::strongly_recurrent;
            info.note = "2D central-hole carpet (resistance factor > 1); d_w fitted";
          } else {
            const double b = *fam.hole, L = fam.base;
            const double lhs = std::pow(b, fam.dim - 1);
            const double rhs = std::pow(L, fam.dim - 1) - L;
            if (lhs < rhs) {
              info.regime = Regime::transient;
              info.note = "small central hole: b^(d-1) < L^(d-1) - L";
            } else {
              info.regime = Regime::unknown;
              info.note = "hole criterion not met; regime from fitted d_w only";
            }
          }
        } else {
          switch (fam.kind) {
            case BaselineKind::path:
            case BaselineKind::cycle:
              info.regime = Regime::strongly_recurrent;
              info.d_f = 1.0;
              info.d_w = 2.0;
              break;
            case BaselineKind::torus:
              info.d_f = fam.dim;
              info.d_w = 2.0;
              info.regime = fam.dim >= 3   ? Regime::transient
                            : fam.dim == 2 ? Regime::critical
                                           : Regime::strongly_recurrent;
              break;
            case BaselineKind::complete:
              info.regime = Regime::unknown;
              info.d_f = nan;
              info.d_w = nan;
              info.note = "mean-field baseline (unbounded degree)";
              break;
          }
        }
        return info;
      },
      spec.family);
}

std::string to_string(Regime r) {
  switch (r) {
    case Regime::strongly_recurrent:
      return "strongly_recurrent";
    case Regime::transient:
      return "transient";
    case Regime::critical:
      return "critical";
    case Regime::unknown:
      break;
  }
  return "unknown";
}

}  // namespace fractalmix
