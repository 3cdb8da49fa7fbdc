#include "fractalmix/output.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "fractalmix/errors.hpp"

#ifndef FRACTALMIX_VERSION
#define FRACTALMIX_VERSION "0.0.0"
#endif

namespace fractalmix {

std::string version_string() { return std::string("fractalmix ") + FRACTALMIX_VERSION; }

std::string stamp_line(const RunStamp& s) {
  std::ostringstream o;
  o << "# " << version_string() << " graph=" << s.graph << " seed=" << s.seed
    << " config=" << s.config.dump();
  return o.str();
}

std::string format_double(double v) {
  if (std::isnan(v)) return "";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  // Shortest of %.15g / %.17g that reads back to the same double.
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.15g", v);
  if (std::strtod(buf, nullptr) != v) std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string format_optional(const std::optional<std::uint64_t>& v) {
  return v ? std::to_string(*v) : std::string();
}

CsvTable covertime_table(const CoverTimeSample& s) {
  CsvTable t{schema::covertime, {}};
  t.rows.reserve(s.times.size());
  for (std::size_t i = 0; i < s.times.size(); ++i)
    t.rows.push_back({std::to_string(i), std::to_string(s.times[i]), s.lazy ? "1" : "0"});
  return t;
}

CsvTable heatdiag_table(std::span<const double> ts, std::span<const double> p) {
  if (ts.size() != p.size()) throw ValidationError("heatdiag_table: length mismatch");
  CsvTable t{schema::heatdiag, {}};
  for (std::size_t i = 0; i < ts.size(); ++i) t.rows.push_back({format_double(ts[i]), format_double(p[i])});
  return t;
}

CsvTable exitscale_table(const ExitScaling& s) {
  CsvTable t{schema::exitscale, {}};
  for (const auto& r : s.rows)
    t.rows.push_back({std::to_string(r.r), format_double(r.mean_exit), format_double(r.stderr_)});
  return t;
}

CsvTable resistance_table(const ResistanceFit& f) {
  CsvTable t{schema::resistance, {}};
  for (const auto& p : f.pairs)
    t.rows.push_back({std::to_string(p.x), std::to_string(p.y), std::to_string(p.d), format_double(p.reff)});
  return t;
}

CsvTable fk_table(const FkResult& fk) {
  CsvTable t{schema::fk, {}};
  for (std::size_t i = 0; i < fk.rows.size(); ++i) {
    const auto& r = fk.rows[i];
    t.rows.push_back({std::to_string(i), std::to_string(r.size), format_double(r.mu_s),
                      format_double(r.lambda1), format_double(r.product)});
  }
  return t;
}

CsvTable cover_table(std::span<const std::pair<double, std::size_t>> rows) {
  CsvTable t{schema::cover, {}};
  for (const auto& [eta, n] : rows) t.rows.push_back({format_double(eta), std::to_string(n)});
  return t;
}

CsvTable tvprofile_table(const TvProfile& p) {
  CsvTable t{schema::tvprofile, {}};
  auto at = [](const std::vector<double>& v, std::size_t i) {
    return i < v.size() ? format_double(v[i]) : std::string();
  };
  for (std::size_t i = 0; i < p.t.size(); ++i)
    t.rows.push_back({std::to_string(p.t[i]), at(p.exact, i), at(p.lower, i), at(p.upper, i)});
  return t;
}

CsvTable mixing_table(std::span<const MixingBracket> brackets, double half_cover,
                      double cover_mean) {
  CsvTable t{schema::mixing, {}};
  for (const auto& b : brackets)
    t.rows.push_back({format_double(b.eps), format_optional(b.lower), format_optional(b.upper),
                      format_optional(b.exact), format_double(half_cover),
                      format_double(cover_mean)});
  return t;
}

namespace {

void write_row(std::ostream& out, const std::vector<std::string>& row) {
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i) out << ',';
    out << row[i];
  }
  out << '\n';
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (const char c : line) {
    if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(std::move(cur));
  return out;
}

}  // namespace

void write_csv(std::ostream& out, const RunStamp& stamp, const CsvTable& t) {
  out << stamp_line(stamp) << '\n';
  write_row(out, t.header);
  for (const auto& r : t.rows) {
    if (r.size() != t.header.size()) throw ValidationError("write_csv: row width mismatch");
    write_row(out, r);
  }
}

void save_csv(const std::string& path, const RunStamp& stamp, const CsvTable& t) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot open " + path + " for writing");
  write_csv(out, stamp, t);
  if (!out) throw ValidationError("write failed: " + path);
}

CsvFile read_csv(std::istream& in, const std::vector<std::string>* expected) {
  CsvFile f;
  std::string line;
  if (!std::getline(in, line) || line.rfind("# ", 0) != 0)
    throw ValidationError("csv: missing stamp line");
  f.stamp = line.substr(2);
  if (!std::getline(in, line)) throw ValidationError("csv: missing header row");
  f.table.header = split(line);
  if (expected && f.table.header != *expected) throw ValidationError("csv: schema mismatch");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto row = split(line);
    if (row.size() != f.table.header.size()) throw ValidationError("csv: ragged row");
    f.table.rows.push_back(std::move(row));
  }
  return f;
}

CsvFile load_csv(const std::string& path, const std::vector<std::string>* expected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path);
  return read_csv(in, expected);
}

namespace {

nlohmann::json num(double v) {
  if (std::isnan(v) || std::isinf(v)) return nullptr;
  return v;
}

template <class T>
nlohmann::json opt(const std::optional<T>& v) {
  if (!v) return nullptr;
  return *v;
}

}  // namespace

nlohmann::json to_json(const MixingBracket& b) {
  return {{"epsilon", b.eps}, {"lower", opt(b.lower)}, {"upper", opt(b.upper)}, {"exact", opt(b.exact)}};
}

nlohmann::json to_json(const DichotomyLevel& lv) {
  nlohmann::json brackets = nlohmann::json::array();
  for (const auto& b : lv.brackets) brackets.push_back(to_json(b));
  return {{"spec", lv.spec},
          {"regime", lv.regime},
          {"vertices", lv.vertices},
          {"R_N", lv.r_n},
          {"d_w", num(lv.d_w)},
          {"T_N", num(lv.t_n)},
          {"S_N", num(lv.s_n)},
          {"S_N_lower_bound", lv.s_n_lower_bound},
          {"cover_mean_lazy", num(lv.cover_mean_lazy)},
          {"cover_cv_lazy", num(lv.cover_cv_lazy)},
          {"cover_mean", num(lv.cover_mean)},
          {"half_cover", num(lv.half_cover)},
          {"exact_lamp_marginal", lv.exact_lamp_marginal},
          {"zero_ball_radius", lv.zero_ball_radius},
          {"brackets", brackets},
          {"window", {{"lo", num(lv.window.lo)}, {"hi", num(lv.window.hi)}, {"exact", num(lv.window.exact)}}}};
}

nlohmann::json to_json(const DichotomyOptions& o) {
  return {{"eps_grid", o.eps_grid},
          {"cover_samples", o.cover_samples},
          {"collapsed_samples", o.collapsed_samples},
          {"grid_points", o.grid_points},
          {"alpha", o.alpha},
          {"no_cutoff_factor", o.no_cutoff_factor},
          {"bounded_spread", o.bounded_spread},
          {"cutoff_window_eps", o.cutoff_window_eps},
          {"exact_complete_max", o.exact_complete_max},
          {"pivot_cap", o.pivot_cap},
          {"seed", o.seed}};
}

nlohmann::json to_json(const DichotomyReport& r) {
  nlohmann::json levels = nlohmann::json::array();
  for (const auto& lv : r.levels) levels.push_back(to_json(lv));
  return {{"family", r.family},
          {"verdict", r.verdict},
          {"reason", r.reason},
          {"options", to_json(r.options)},
          {"levels", levels}};
}

nlohmann::json to_json(const AssumptionReport& a) {
  return {{"pass", a.pass()},
          {"c_e", num(a.c_e)},
          {"p_0", num(a.p_0)},
          {"c_v", num(a.c_v)},
          {"d_f", num(a.d_f)},
          {"max_degree", a.max_degree},
          {"weight_max", a.weight_max},
          {"weight_min", a.weight_min},
          {"delta", num(a.delta)},
          {"centers_checked", a.centers_checked},
          {"full_enumeration", a.full_enumeration},
          {"ellipticity_ok", a.ellipticity_ok},
          {"p0_ok", a.p0_ok},
          {"volume_ok", a.volume_ok}};
}

nlohmann::json to_json(const CvEstimate& c) {
  return {{"label", c.label}, {"vertices", c.vertices}, {"samples", c.samples}, {"mean", c.mean},
          {"sd", c.sd},       {"cv", c.cv},             {"ci_lo", c.ci_lo},     {"ci_hi", c.ci_hi}};
}

nlohmann::json to_json(const Mp12Report& r) {
  nlohmann::json shells = nlohmann::json::array();
  for (const auto& s : r.green)
    shells.push_back({{"distance", s.distance}, {"count", s.count}, {"mean_green", s.mean_green}});
  return {{"label", r.label},
          {"vertices", r.vertices},
          {"mu_G", r.mu_g},
          {"delta", r.delta},
          {"small_radius", r.small_radius},
          {"max_log_volume", r.max_log_volume},
          {"t_mix_u", r.t_mix_u},
          {"t_mix_proxy", r.t_mix_proxy},
          {"proxy_constant", r.proxy_constant},
          {"set_center", r.set_center},
          {"set_radius", r.set_radius},
          {"green_monotone", r.green_monotone},
          {"green", shells}};
}

namespace {

double num_or_nan(const nlohmann::json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

std::optional<std::uint64_t> opt_u64(const nlohmann::json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<std::uint64_t>();
}

}  // namespace

MixingBracket bracket_from_json(const nlohmann::json& j) {
  MixingBracket b;
  b.eps = j.at("epsilon").get<double>();
  b.lower = opt_u64(j.at("lower"));
  b.upper = opt_u64(j.at("upper"));
  b.exact = opt_u64(j.at("exact"));
  return b;
}

DichotomyLevel level_from_json(const nlohmann::json& j) {
  try {
    DichotomyLevel lv;
    lv.spec = j.at("spec").get<std::string>();
    lv.regime = j.at("regime").get<std::string>();
    lv.vertices = j.at("vertices").get<std::size_t>();
    lv.r_n = j.at("R_N").get<int>();
    lv.d_w = num_or_nan(j.at("d_w"));
    lv.t_n = num_or_nan(j.at("T_N"));
    lv.s_n = num_or_nan(j.at("S_N"));
    lv.s_n_lower_bound = j.at("S_N_lower_bound").get<bool>();
    lv.cover_mean_lazy = num_or_nan(j.at("cover_mean_lazy"));
    lv.cover_cv_lazy = num_or_nan(j.at("cover_cv_lazy"));
    lv.cover_mean = num_or_nan(j.at("cover_mean"));
    lv.half_cover = num_or_nan(j.at("half_cover"));
    lv.exact_lamp_marginal = j.at("exact_lamp_marginal").get<bool>();
    lv.zero_ball_radius = j.at("zero_ball_radius").get<int>();
    for (const auto& b : j.at("brackets")) lv.brackets.push_back(bracket_from_json(b));
    const auto& w = j.at("window");
    lv.window.lo = num_or_nan(w.at("lo"));
    lv.window.hi = num_or_nan(w.at("hi"));
    lv.window.exact = num_or_nan(w.at("exact"));
    return lv;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("report level: ") + e.what());
  }
}

DichotomyOptions options_from_json(const nlohmann::json& j) {
  try {
    DichotomyOptions o;
    o.eps_grid = j.at("eps_grid").get<std::vector<double>>();
    o.cover_samples = j.at("cover_samples").get<std::size_t>();
    o.collapsed_samples = j.at("collapsed_samples").get<std::size_t>();
    o.grid_points = j.at("grid_points").get<std::size_t>();
    o.alpha = j.at("alpha").get<double>();
    o.no_cutoff_factor = j.at("no_cutoff_factor").get<double>();
    o.bounded_spread = j.at("bounded_spread").get<double>();
    o.cutoff_window_eps = j.at("cutoff_window_eps").get<double>();
    o.exact_complete_max = j.at("exact_complete_max").get<std::size_t>();
    o.pivot_cap = j.at("pivot_cap").get<std::size_t>();
    o.seed = j.at("seed").get<std::uint64_t>();
    return o;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("report options: ") + e.what());
  }
}

nlohmann::json make_report(const RunStamp& stamp, nlohmann::json sections) {
  nlohmann::json j = {{"version", version_string()},
                      {"graph", stamp.graph},
                      {"seed", stamp.seed},
                      {"config", stamp.config}};
  for (auto& [k, v] : sections.items()) j[k] = v;
  return j;
}

void save_json(const std::string& path, const nlohmann::json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot open " + path + " for writing");
  out << j.dump(2) << '\n';
}

}  // namespace fractalmix
