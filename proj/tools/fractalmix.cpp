// fractalmix command-line front end.
#include <CLI11.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <nlohmann/json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "fractalmix/analysis.hpp"
#include "fractalmix/errors.hpp"
#include "fractalmix/fractal.hpp"
#include "fractalmix/graph.hpp"
#include "fractalmix/graph_io.hpp"
#include "fractalmix/lamplighter.hpp"
#include "fractalmix/output.hpp"
#include "fractalmix/parallel.hpp"
#include "fractalmix/resistance.hpp"
#include "fractalmix/walk.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace fractalmix;

namespace {

constexpr int kConfigVersion = 1;

struct Config {
  std::string graph;
  std::string experiment;
  std::uint64_t seed = 1;
  std::size_t samples = 1000;
  std::uint64_t horizon = 0;  // 0: pick per experiment
  std::size_t pivot_cap = kPivotCap;
  double cg_tol = 1e-10;
  std::size_t cg_maxiter = 0;
  std::size_t exact_cap = kExactStateCap;
  std::vector<double> eps_grid{0.02, 0.05, 0.1, 0.25, 0.5, 0.75, 0.9};
  std::string out = ".";
  std::size_t threads = 0;
  bool lazy = false;
  std::uint32_t start = 0;
  bool allow_partial = false;
  std::vector<std::string> levels;  // dichotomy: explicit spec list
  std::string family;               // dichotomy: default level set
  double d_f = std::numeric_limits<double>::quiet_NaN();
  double d_w = std::numeric_limits<double>::quiet_NaN();
  std::size_t subsets = 200;
  double no_cutoff_factor = 3.0;
  double bounded_spread = 4.0;
};

// Echoed into every artifact. Output location and worker count do not
// change results, so they stay out of the echo.
json echo(const Config& c) {
  return {{"config-version", kConfigVersion},
          {"graph", c.graph},
          {"experiment", c.experiment},
          {"seed", c.seed},
          {"samples", c.samples},
          {"horizon", c.horizon},
          {"pivot-cap", c.pivot_cap},
          {"cg-tol", c.cg_tol},
          {"cg-maxiter", c.cg_maxiter},
          {"exact-cap", c.exact_cap},
          {"epsilon-grid", c.eps_grid},
          {"lazy", c.lazy},
          {"start", c.start},
          {"allow-partial", c.allow_partial},
          {"levels", c.levels},
          {"family", c.family},
          {"d-f", std::isnan(c.d_f) ? json(nullptr) : json(c.d_f)},
          {"d-w", std::isnan(c.d_w) ? json(nullptr) : json(c.d_w)},
          {"subsets", c.subsets},
          {"no-cutoff-factor", c.no_cutoff_factor},
          {"bounded-spread", c.bounded_spread}};
}

template <class T>
void take(const json& file, const char* key, T& dst) {
  if (!file.contains(key) || file[key].is_null()) return;
  try {
    dst = file[key].get<T>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config: bad value for \"") + key + "\": " + e.what());
  }
}

void apply_file(const std::string& path, Config& c) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config " + path);
  json f;
  try {
    f = json::parse(in);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config parse error: ") + e.what());
  }
  if (!f.is_object() || !f.contains("config-version"))
    throw ValidationError("config: missing \"config-version\"");
  if (f["config-version"] != kConfigVersion)
    throw ValidationError("config: unsupported config-version");
  take(f, "graph", c.graph);
  take(f, "seed", c.seed);
  take(f, "samples", c.samples);
  take(f, "horizon", c.horizon);
  take(f, "pivot-cap", c.pivot_cap);
  take(f, "cg-tol", c.cg_tol);
  take(f, "cg-maxiter", c.cg_maxiter);
  take(f, "exact-cap", c.exact_cap);
  take(f, "epsilon-grid", c.eps_grid);
  take(f, "out", c.out);
  take(f, "threads", c.threads);
  take(f, "lazy", c.lazy);
  take(f, "start", c.start);
  take(f, "allow-partial", c.allow_partial);
  take(f, "levels", c.levels);
  take(f, "family", c.family);
  take(f, "d-f", c.d_f);
  take(f, "d-w", c.d_w);
  take(f, "subsets", c.subsets);
  take(f, "no-cutoff-factor", c.no_cutoff_factor);
  take(f, "bounded-spread", c.bounded_spread);
}

struct LoadedGraph {
  WeightedGraph g;
  std::optional<GraphSpec> spec;
};

bool looks_like_file(const std::string& s) {
  return s.find(':') == std::string::npos || fs::exists(s);
}

LoadedGraph load_graph(const std::string& text) {
  if (text.empty()) throw ValidationError("no graph given (--graph)");
  if (looks_like_file(text)) return {load_wg_json(text), std::nullopt};
  auto spec = parse_graph_spec(text);
  return {build_graph(spec), spec};
}

SolverOptions solver_options(const Config& c) {
  SolverOptions s;
  s.cg_tol = c.cg_tol;
  s.cg_max_iter = c.cg_maxiter;
  return s;
}

RunStamp stamp_of(const Config& c) { return {c.graph, c.seed, echo(c)}; }

std::string out_path(const Config& c, const std::string& name) {
  fs::create_directories(c.out);
  return (fs::path(c.out) / name).string();
}

void check_start(const Config& c, const WeightedGraph& g) {
  if (c.start >= g.vertex_count()) throw ValidationError("--start is not a vertex of the graph");
}

double nominal_d_f(const Config& c, const LoadedGraph& lg) {
  if (!std::isnan(c.d_f)) return c.d_f;
  if (lg.spec) return classify_regime(*lg.spec).d_f;
  return std::numeric_limits<double>::quiet_NaN();
}

double nominal_d_w(const Config& c, const LoadedGraph& lg) {
  if (!std::isnan(c.d_w)) return c.d_w;
  if (lg.spec) return classify_regime(*lg.spec).d_w;
  return std::numeric_limits<double>::quiet_NaN();
}

int cmd_gen(const std::string& spec_text, const std::string& output) {
  const auto spec = parse_graph_spec(spec_text);
  const auto g = build_graph(spec);
  if (output.empty() || output == "-") {
    write_wg_json(g, std::cout);
  } else {
    save_wg_json(g, output);
  }
  return 0;
}

int cmd_validate(const Config& c, const std::string& path) {
  LoadedGraph lg{load_wg_json(path), std::nullopt};
  double d_f = c.d_f;
  if (std::isnan(d_f)) {
    try {
      d_f = volume_growth_fit(lg.g, 64, c.seed).d_f;
    } catch (const ValidationError&) {
      d_f = 1.0;
    }
  }
  const auto rep = check_assumptions(lg.g, d_f);
  std::cout << to_json(rep).dump(2) << '\n';
  if (!rep.pass()) {
    std::cerr << "assumption check failed:";
    if (!rep.ellipticity_ok) std::cerr << " ellipticity";
    if (!rep.p0_ok) std::cerr << " p0";
    if (!rep.volume_ok) std::cerr << " volume";
    std::cerr << '\n';
    return 2;
  }
  return 0;
}

// Heat-kernel diagonal and exit-time scaling.
int cmd_walk(const Config& c) {
  const auto lg = load_graph(c.graph);
  check_start(c, lg.g);
  const auto& g = lg.g;
  const int r_n = diameter(g).value;
  const WalkKernel lazy(g, true), simple(g, c.lazy);
  const std::size_t t_max = c.horizon ? c.horizon
                                      : static_cast<std::size_t>(std::min(
                                            1e6, std::pow(std::max(r_n, 2), 2.4) * 4.0));
  const auto diag = heat_diagonal(lazy, c.start, t_max);
  std::vector<double> ts, ps;
  for (std::size_t t = 1; t <= t_max; t = std::max(t + 1, static_cast<std::size_t>(t * 1.05))) {
    ts.push_back(static_cast<double>(t));
    ps.push_back(diag[t] / g.vertex_weight(c.start));
  }
  const auto stamp = stamp_of(c);
  save_csv(out_path(c, "heatdiag.csv"), stamp, heatdiag_table(ts, ps));

  json sections;
  try {
    const auto fit = diagonal_decay_fit(lazy, c.start, std::max<std::size_t>(t_max / 64, 4), t_max);
    sections["heat"] = {{"ds_half", fit.ds_half}, {"r2", fit.r2}};
  } catch (const ValidationError& e) {
    sections["heat"] = {{"error", e.what()}};
  }
  std::vector<int> radii;
  for (int r = 1; 4 * r <= r_n; r *= 2) radii.push_back(r);
  if (radii.size() >= 2) {
    ExitOptions eo;
    eo.solver = solver_options(c);
    eo.exact_cap = c.exact_cap;
    eo.threads = c.threads;
    const Vertex centers[] = {c.start};
    const auto sc = exit_time_scaling(simple, centers, radii, c.samples, derive_seed(c.seed, "exit"), eo);
    save_csv(out_path(c, "exitscale.csv"), stamp, exitscale_table(sc));
    sections["exit"] = {{"d_w", sc.d_w}, {"r2", sc.r2}};
  } else {
    sections["exit"] = {{"error", "insufficient radius range"}};
  }
  save_json(out_path(c, "report.json"), make_report(stamp, sections));
  return 0;
}

int cmd_cover(const Config& c) {
  const auto lg = load_graph(c.graph);
  check_start(c, lg.g);
  const WalkKernel kernel(lg.g, c.lazy);
  const auto s = cover_time_distribution(kernel, c.start, c.samples, derive_seed(c.seed, "cover"),
                                         c.threads);
  const auto stamp = stamp_of(c);
  save_csv(out_path(c, "covertime.csv"), stamp, covertime_table(s));
  json sec = {{"samples", s.times.size()}, {"lazy", s.lazy}, {"mean", s.mean}, {"sd", s.sd}, {"cv", s.cv}};
  const auto d_w = nominal_d_w(c, lg);
  if (!std::isnan(d_w) && s.times.size() >= 1000) {
    const double t_n = std::pow(diameter(lg.g).value, d_w);
    try {
      const auto tf = tail_fit(s, t_n);
      sec["tail"] = {{"T_N", t_n}, {"c0", tf.c0}, {"slope", tf.slope}, {"r2", tf.r2}, {"points", tf.points}};
    } catch (const ValidationError& e) {
      sec["tail"] = {{"error", e.what()}};
    }
  }
  save_json(out_path(c, "report.json"), make_report(stamp, {{"cover", sec}}));
  return 0;
}

int cmd_resist(const Config& c) {
  const auto lg = load_graph(c.graph);
  const auto& g = lg.g;
  const auto stamp = stamp_of(c);
  const LaplacianSystem sys(g);
  ResistanceOptions ro;
  ro.pivot_cap = c.pivot_cap;
  ro.allow_heuristic = c.allow_partial;
  ro.solver = solver_options(c);
  const auto summary = resistance_summary(sys, ro);
  const int r_n = diameter(g).value;
  json sec = {{"r_G", summary.r_max}, {"S_N", summary.s_n}, {"S_N_lower_bound", summary.lower_bound},
              {"R_N", r_n}, {"vertices", g.vertex_count()}};
  if (summary.pairwise && r_n >= 4) {
    const auto fit = resistance_exponent_fit(g, *summary.pairwise, c.samples, derive_seed(c.seed, "reff"));
    save_csv(out_path(c, "resistance.csv"), stamp, resistance_table(fit));
    sec["exponent"] = fit.exponent;
    sec["exponent_r2"] = fit.r2;
  }
  const double d_f = nominal_d_f(c, lg), d_w = nominal_d_w(c, lg);
  if (!std::isnan(d_f) && !std::isnan(d_w)) {
    const std::size_t max_size = std::max<std::size_t>(1, std::min<std::size_t>(g.vertex_count() / 4, kEigenCap));
    const auto subsets = sample_connected_subsets(g, c.subsets, max_size, derive_seed(c.seed, "fk"));
    const auto fk = faber_krahn_check(g, subsets, d_w, d_f);
    save_csv(out_path(c, "fk.csv"), stamp, fk_table(fk));
    sec["fk_min_product"] = fk.min_product;
  }
  std::vector<std::pair<double, std::size_t>> covers;
  for (const double eta : {0.5, 0.25, 0.125, 0.0625})
    if (std::floor(eta * r_n) >= 1) covers.emplace_back(eta, ball_cover(g, eta, r_n).size());
  save_csv(out_path(c, "cover.csv"), stamp, cover_table(covers));
  save_json(out_path(c, "report.json"), make_report(stamp, {{"resistance", sec}}));
  return 0;
}

DichotomyOptions dichotomy_options(const Config& c) {
  DichotomyOptions o;
  o.eps_grid = c.eps_grid;
  o.cover_samples = c.samples;
  o.collapsed_samples = c.samples;
  o.pivot_cap = c.pivot_cap;
  o.seed = c.seed;
  o.threads = c.threads;
  o.no_cutoff_factor = c.no_cutoff_factor;
  o.bounded_spread = c.bounded_spread;
  return o;
}

void write_level(const Config& c, const RunStamp& stamp, const DichotomyLevel& lv,
                 const std::string& suffix) {
  save_csv(out_path(c, "tvprofile" + suffix + ".csv"), stamp, tvprofile_table(lv.profile));
  save_csv(out_path(c, "mixing" + suffix + ".csv"), stamp,
           mixing_table(lv.brackets, lv.half_cover, lv.cover_mean_lazy));
}

int cmd_mix(const Config& c) {
  auto lg = load_graph(c.graph);
  if (!lg.spec) throw ValidationError("mix needs a graph spec string");
  const auto stamp = stamp_of(c);
  const auto& g = lg.g;
  const std::size_t n = g.vertex_count();
  json sec;
  if (n < 40 && (n << n) <= c.exact_cap) {
    // Small enough for the full wreath-product chain.
    const WalkKernel lazy(g, true);
    const auto rough = cover_time_distribution(lazy, 0, 400, derive_seed(c.seed, "mix-horizon"), 1);
    const std::size_t t_max = c.horizon ? c.horizon : static_cast<std::size_t>(3.0 * static_cast<double>(rough.sorted.back()));
    auto prof = exact_tv_profile(lazy, 0, 0, t_max, c.exact_cap);
    prof = make_tv_profile(prof.t, prof.exact, prof.exact, prof.exact);
    const auto br = mixing_profile(prof, c.eps_grid);
    const double half = 0.5 * rough.mean;
    save_csv(out_path(c, "tvprofile.csv"), stamp, tvprofile_table(prof));
    save_csv(out_path(c, "mixing.csv"), stamp, mixing_table(br, half, rough.mean));
    json bj = json::array();
    for (const auto& b : br) bj.push_back(to_json(b));
    sec = {{"exact", true}, {"vertices", n}, {"brackets", bj}};
  } else {
    const auto lv = dichotomy_level(*lg.spec, dichotomy_options(c));
    write_level(c, stamp, lv, "");
    sec = to_json(lv);
    sec["exact"] = lv.exact_lamp_marginal;
  }
  save_json(out_path(c, "report.json"), make_report(stamp, {{"mixing", sec}}));
  return 0;
}

std::vector<std::string> default_levels(const std::string& family) {
  if (family == "complete") return {"complete:n=64", "complete:n=128", "complete:n=256", "complete:n=512"};
  if (family == "gasket")
    return {"gasket:d=2,level=3", "gasket:d=2,level=4", "gasket:d=2,level=5", "gasket:d=2,level=6"};
  if (family == "carpet")
    return {"carpet:L=3,b=1,d=2,level=2", "carpet:L=3,b=1,d=2,level=3", "carpet:L=3,b=1,d=2,level=4"};
  if (family == "carpet3d") return {"carpet:L=3,b=1,d=3,level=1", "carpet:L=3,b=1,d=3,level=2"};
  if (family == "torus") return {"torus:d=2,side=8", "torus:d=2,side=16", "torus:d=2,side=32"};
  throw ValidationError("unknown family \"" + family + "\" (use --level to list specs)");
}

int cmd_dichotomy(Config c) {
  if (c.levels.empty()) c.levels = default_levels(c.family.empty() ? "complete" : c.family);
  if (c.graph.empty()) c.graph = c.levels.front();
  const auto stamp = stamp_of(c);
  const auto opt = dichotomy_options(c);
  DichotomyReport rep;
  rep.options = opt;
  rep.family = c.family.empty() ? c.levels.front().substr(0, c.levels.front().find(':')) : c.family;
  json skipped = json::array();
  for (std::size_t i = 0; i < c.levels.size(); ++i) {
    const auto spec = parse_graph_spec(c.levels[i]);
    try {
      rep.levels.push_back(dichotomy_level(spec, opt));
    } catch (const CapacityError& e) {
      if (!c.allow_partial) throw;
      skipped.push_back({{"spec", c.levels[i]}, {"error", e.what()}});
      continue;
    }
    write_level(c, stamp, rep.levels.back(), "_" + std::to_string(i));
  }
  std::tie(rep.verdict, rep.reason) = dichotomy_verdict(rep.levels, opt);
  auto j = to_json(rep);
  j["skipped"] = skipped;
  save_json(out_path(c, "report.json"), make_report(stamp, {{"dichotomy", j}}));
  std::cout << rep.verdict << ": " << rep.reason << '\n';
  return 0;
}

// Re-derives the verdict from a stored report.json.
int cmd_report(const std::string& dir) {
  const auto path = fs::path(dir) / "report.json";
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("report parse error: ") + e.what());
  }
  if (!j.contains("dichotomy")) {
    std::cout << j.dump(2) << '\n';
    return 0;
  }
  const auto& d = j["dichotomy"];
  const auto opt = options_from_json(d.at("options"));
  std::vector<DichotomyLevel> levels;
  for (const auto& l : d.at("levels")) levels.push_back(level_from_json(l));
  const auto [verdict, reason] = dichotomy_verdict(levels, opt);
  std::cout << verdict << ": " << reason << '\n';
  if (verdict != d.at("verdict").get<std::string>() || reason != d.at("reason").get<std::string>()) {
    std::cerr << "stored verdict differs: " << d.at("verdict").get<std::string>() << '\n';
    return 2;
  }
  return 0;
}

std::size_t env_threads() {
  if (const char* t = std::getenv("THREADS")) {
    try {
      return static_cast<std::size_t>(std::stoul(t));
    } catch (const std::exception&) {
      throw ValidationError("THREADS must be a non-negative integer");
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fractalmix: random walks, resistance and lamplighter mixing on fractal graphs"};
  app.set_version_flag("--version", version_string());
  app.require_subcommand(1);
  app.fallthrough();

  // Every overridable option is bound to a staging variable; after parsing
  // the file config is applied first and explicit flags on top of it.
  Config cli;
  std::string config_path;
  std::vector<std::pair<CLI::Option*, std::function<void(Config&)>>> overrides;
  auto bind = [&](const std::string& name, auto Config::*field, const std::string& help) {
    auto* o = app.add_option(name, cli.*field, help);
    overrides.emplace_back(o, [field, &cli](Config& c) { c.*field = cli.*field; });
    return o;
  };
  app.add_option("--config", config_path, "JSON config file (needs \"config-version\")");
  bind("--graph", &Config::graph, "graph spec string or wg-json path");
  bind("--seed", &Config::seed, "64-bit seed");
  bind("--samples", &Config::samples, "Monte Carlo samples");
  bind("--horizon", &Config::horizon, "time horizon (0: automatic)");
  bind("--pivot-cap", &Config::pivot_cap, "max vertices for dense pairwise resistance");
  bind("--cg-tol", &Config::cg_tol, "relative residual tolerance of CG");
  bind("--cg-maxiter", &Config::cg_maxiter, "CG iteration cap (0: automatic)");
  bind("--exact-cap", &Config::exact_cap, "max states for exact computations");
  bind("--epsilon-grid", &Config::eps_grid, "TV thresholds")->delimiter(',');
  bind("--out", &Config::out, "output directory");
  bind("--threads", &Config::threads, "worker threads (default: THREADS or all cores)");
  bind("--start", &Config::start, "start vertex");
  bind("--lazy", &Config::lazy, "use the lazy walk");
  bind("--allow-partial", &Config::allow_partial, "continue past capacity errors");
  bind("--d-f", &Config::d_f, "volume exponent override");
  bind("--d-w", &Config::d_w, "walk exponent override");
  bind("--subsets", &Config::subsets, "Faber-Krahn subsets");
  bind("--family", &Config::family, "dichotomy level family (complete, gasket, carpet, carpet3d, torus)");
  bind("--level", &Config::levels, "dichotomy level spec (repeatable)");
  bind("--no-cutoff-factor", &Config::no_cutoff_factor, "verdict: lower(eps_min)/upper(1/2) threshold");
  bind("--bounded-spread", &Config::bounded_spread, "verdict: max/min of upper(1/2)/T_N");

  std::string gen_spec, gen_out, validate_path, report_dir;
  auto* gen = app.add_subcommand("gen", "write a generated graph as wg-json");
  gen->add_option("spec", gen_spec, "graph spec string")->required();
  gen->add_option("-o,--output", gen_out, "output file (default: stdout)");
  auto* validate = app.add_subcommand("validate", "check graph assumptions of a wg-json file");
  validate->add_option("path", validate_path, "wg-json file")->required();
  auto* walk = app.add_subcommand("walk", "heat-kernel diagonal and exit-time scaling");
  auto* cover = app.add_subcommand("cover", "cover-time distribution");
  auto* resist = app.add_subcommand("resist", "effective resistance, Faber-Krahn, ball covers");
  auto* mix = app.add_subcommand("mix", "lamplighter TV profile and mixing brackets");
  auto* dich = app.add_subcommand("dichotomy", "cutoff / no-cutoff evidence across levels");
  auto* report = app.add_subcommand("report", "re-derive the verdict of a stored report.json");
  report->add_option("dir", report_dir, "directory holding report.json")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    Config c;
    c.threads = env_threads();
    if (!config_path.empty()) apply_file(config_path, c);
    for (auto& [opt, set] : overrides)
      if (opt->count() > 0) set(c);
    c.threads = resolve_threads(c.threads);
    for (const double e : c.eps_grid)
      if (!(e > 0.0 && e < 1.0)) throw ValidationError("epsilon grid values must lie in (0, 1)");

    if (*gen) return cmd_gen(gen_spec, gen_out);
    if (*validate) return cmd_validate(c, validate_path);
    if (*report) return cmd_report(report_dir);
    for (auto* sub : {walk, cover, resist, mix, dich})
      if (*sub) c.experiment = sub->get_name();
    if (*walk) return cmd_walk(c);
    if (*cover) return cmd_cover(c);
    if (*resist) return cmd_resist(c);
    if (*mix) return cmd_mix(c);
    if (*dich) return cmd_dichotomy(c);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(e.exit_code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}
