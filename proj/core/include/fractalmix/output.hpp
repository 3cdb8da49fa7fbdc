#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fractalmix/analysis.hpp"
#include "fractalmix/lamplighter.hpp"
#include "fractalmix/resistance.hpp"
#include "fractalmix/walk.hpp"

namespace fractalmix {

std::string version_string();  // "fractalmix <major.minor.patch>"

// What every artifact echoes: graph spec, seed and the full config.
struct RunStamp {
  std::string graph;
  std::uint64_t seed = 0;
  nlohmann::json config = nlohmann::json::object();
};

// "# fractalmix 0.3.0 graph=<spec> seed=<seed> config=<compact json>"
std::string stamp_line(const RunStamp& stamp);

// Round-trippable decimal ("%.17g"); NaN and missing values become "".
std::string format_double(double v);
std::string format_optional(const std::optional<std::uint64_t>& v);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

namespace schema {
inline const std::vector<std::string> covertime{"sample_id", "tau_cov", "lazy_flag"};
inline const std::vector<std::string> heatdiag{"t", "p_tt"};
inline const std::vector<std::string> exitscale{"r", "mean_exit", "stderr"};
inline const std::vector<std::string> resistance{"x", "y", "d_xy", "reff"};
inline const std::vector<std::string> fk{"subset_id", "size", "mu_S", "lambda1", "product"};
inline const std::vector<std::string> cover{"eta", "n_centers"};
inline const std::vector<std::string> tvprofile{"t", "tv_exact", "tv_lower", "tv_upper"};
inline const std::vector<std::string> mixing{"epsilon",    "tmix_lower", "tmix_upper",
                                             "tmix_exact", "half_cover", "cover_mean"};
}  // namespace schema

CsvTable covertime_table(const CoverTimeSample& sample);
CsvTable heatdiag_table(std::span<const double> t, std::span<const double> p);
CsvTable exitscale_table(const ExitScaling& scaling);
CsvTable resistance_table(const ResistanceFit& fit);
CsvTable fk_table(const FkResult& fk);
CsvTable cover_table(std::span<const std::pair<double, std::size_t>> rows);
CsvTable tvprofile_table(const TvProfile& profile);
CsvTable mixing_table(std::span<const MixingBracket> brackets, double half_cover,
                      double cover_mean);

void write_csv(std::ostream& out, const RunStamp& stamp, const CsvTable& table);
void save_csv(const std::string& path, const RunStamp& stamp, const CsvTable& table);

struct CsvFile {
  std::string stamp;  // the leading comment line, without "# "
  CsvTable table;
};

// Parses a file written by write_csv. Throws ValidationError on a missing
// stamp, ragged rows, or (when given) a header other than `expected`.
CsvFile read_csv(std::istream& in, const std::vector<std::string>* expected = nullptr);
CsvFile load_csv(const std::string& path, const std::vector<std::string>* expected = nullptr);

nlohmann::json to_json(const MixingBracket& b);
nlohmann::json to_json(const DichotomyLevel& level);
nlohmann::json to_json(const DichotomyReport& report);
nlohmann::json to_json(const DichotomyOptions& options);
nlohmann::json to_json(const AssumptionReport& report);
nlohmann::json to_json(const CvEstimate& cv);
nlohmann::json to_json(const Mp12Report& report);

// Inverses for the fields the verdict depends on, so a stored report.json
// can be re-judged.
MixingBracket bracket_from_json(const nlohmann::json& j);
DichotomyLevel level_from_json(const nlohmann::json& j);
DichotomyOptions options_from_json(const nlohmann::json& j);

// report.json: {"version", "graph", "seed", "config", <sections>...}
nlohmann::json make_report(const RunStamp& stamp, nlohmann::json sections);
void save_json(const std::string& path, const nlohmann::json& j);

}  // namespace fractalmix
