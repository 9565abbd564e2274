#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "nilwalk/errors.hpp"
#include "nilwalk/spectral.hpp"

namespace nilwalk {

inline constexpr const char* kToolVersion = "nilwalk 0.1.0";

/// Invalid command line or config file; maps to exit code 2.
class UsageError : public Error {
 public:
  using Error::Error;
};

enum class Subcommand { Exact, Spectral, Mc, VerifyTheorem1, VerifyLemmas, ProfileCutoff };
std::string to_string(Subcommand c);

enum class OutputFormat { Csv, Json };

/// "start:stop:points[:log|:linear]".
struct TimeGrid {
  double start = 0.0;
  double stop = 0.0;
  std::size_t points = 1;
  bool log = false;

  static TimeGrid parse(const std::string& text);
  std::vector<double> values() const;
  std::string str() const;
};

struct ExperimentConfig {
  Subcommand command = Subcommand::Exact;
  /// U_n(p) unless a Cayley-table file is given.
  std::size_t n = 3;
  std::uint64_t p = 3;
  std::optional<std::filesystem::path> table;
  /// "a", "b" or "custom:<file>".
  std::string walk = "a";
  std::optional<std::uint64_t> magnitude;
  std::vector<double> eps{0.25};
  std::optional<TimeGrid> grid;
  std::size_t samples = 100'000;
  std::size_t pairs = 100'000;
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> out;
  /// Unset: csv for profiles, json for verify subcommands.
  std::optional<OutputFormat> format;
  double time_tol = 0.0;
  std::size_t limit = kDefaultEnumerationLimit;
  std::vector<double> c_list{0.8, 1.0, 1.2};
  BoundEngine engine = BoundEngine::Auto;
  std::size_t trials = 10'000;

  OutputFormat output_format() const;
  nlohmann::json to_json() const;
};

/// Usage text for the command line.
std::string usage_text();

/// Builds a config from argv (without the program name), after applying the
/// flat JSON object named by --config; flags given on the command line win.
/// Warnings (duplicate flags) go to `warn`. Throws UsageError or ParseError.
ExperimentConfig parse_config(const std::vector<std::string>& args, std::ostream& warn);

/// One row of the long-format report.
struct ReportRow {
  std::string quantity;
  std::optional<double> t;
  double value = 0.0;
  std::optional<double> std_error;
  std::string source;
};

/// Row of a heat-kernel distance profile.
struct ProfileRow {
  double t = 0.0;
  double d_tv = 0.0;
  double d_l2 = 0.0;
};

struct RunReport {
  nlohmann::json config;
  std::string version = kToolVersion;
  std::vector<ReportRow> rows;
  std::vector<ProfileRow> profile;
  nlohmann::json details = nlohmann::json::object();
  std::vector<std::string> flags;
  /// False when a verification failed; `failure` names the failing row.
  bool pass = true;
  std::string failure;
  double wall_clock_seconds = 0.0;

  /// Rendered report. Numbers use 17 significant digits; lines end in LF.
  std::string render(OutputFormat format) const;
};

RunReport run(const ExperimentConfig& config);

/// Writes `content` to `path` through a temporary file and a rename.
void write_atomically(const std::filesystem::path& path, const std::string& content);

/// Entry point: 0 pass, 1 verification failure, 2 usage, 3 capacity/precision/divergence.
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace nilwalk
