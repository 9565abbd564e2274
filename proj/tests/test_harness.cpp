#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>

#include <json.hpp>

#include "nilwalk/harness.hpp"

using namespace nilwalk;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli_main(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("nilwalk_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string strip_wall_clock(const std::string& text) {
  return std::regex_replace(text, std::regex("\"wall_clock_seconds\": [^\\n]*"), "");
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

}  // namespace

// ------------------------------------------------------------ examples

TEST(Cli, ExactProfileOnU32) {
  const auto r = cli({"exact", "--group", "u3", "--p", "2", "--walk", "a", "--t-grid", "0:10:5"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto lines = lines_of(r.out);
  ASSERT_EQ(lines.size(), 6u);
  EXPECT_EQ(lines[0], "t,d_tv,d_l2");
  EXPECT_EQ(lines[1].substr(0, 2), "0,");
  std::istringstream row(lines[1]);
  std::string t, tv;
  std::getline(row, t, ',');
  std::getline(row, tv, ',');
  EXPECT_EQ(std::stod(tv), 1.0 - 1.0 / 8.0);
  EXPECT_EQ(r.out.find('\r'), std::string::npos);
}

TEST(Cli, SpectralReportsCutoffTime) {
  const auto r = cli({"spectral", "--walk", "a", "--n", "101", "--p", "6", "--eps", "0.25"});
  ASSERT_EQ(r.code, 0) << r.err;
  const std::regex cutoff("cutoff_time,,([^,]+),,cor2a");
  std::smatch m;
  ASSERT_TRUE(std::regex_search(r.out, m, cutoff)) << r.out;
  EXPECT_NEAR(std::stod(m[1]), 460.517, 1e-3);
  // Every bound row names its source formula.
  for (const auto& line : lines_of(r.out)) {
    if (line.rfind("quantity", 0) == 0) continue;
    const auto source = line.substr(line.rfind(',') + 1);
    EXPECT_TRUE(std::regex_match(source, std::regex("eq1|eq2|eq6|eq19|eq20|cor2a|cor2b|exact|mc"))) << line;
  }
}

TEST(Cli, VerifySandwichOnU33) {
  const auto r = cli({"verify", "theorem1", "--group", "u3", "--p", "3", "--walk", "a", "--eps", "0.25", "--seed", "7"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_TRUE(j["pass"].get<bool>());
  double lower = -1, exact = -1, upper = -1;
  for (const auto& row : j["rows"]) {
    const auto q = row["quantity"].get<std::string>();
    if (q == "lower_time[eps=0.25]") lower = row["value"];
    if (q == "exact_time[eps=0.25]") exact = row["value"];
    if (q == "upper_time[eps=0.25]") upper = row["value"];
  }
  ASSERT_GT(lower, 0.0) << r.out;
  ASSERT_GT(exact, 0.0) << r.out;
  EXPECT_LE(lower, exact);
  EXPECT_LE(exact, upper);
  EXPECT_EQ(j["version"], kToolVersion);
}

TEST(Cli, VerifyLemmasPasses) {
  const auto r = cli({"verify", "lemmas", "--group", "u3", "--p", "3", "--seed", "1", "--trials", "500"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(nlohmann::json::parse(r.out)["pass"].get<bool>());
}

TEST(Cli, McAndProfileCarryStandardErrors) {
  for (const auto& args : std::vector<std::vector<std::string>>{
           {"mc", "--group", "u3", "--p", "3", "--t-grid", "0.5:2:3", "--pairs", "2000", "--samples", "2000", "--seed",
            "5"},
           {"profile", "cutoff", "--walk", "a", "--n", "17", "--p", "6", "--samples", "2000", "--seed", "5"}}) {
    const auto r = cli(args);
    ASSERT_EQ(r.code, 0) << r.err;
    for (const auto& line : lines_of(r.out)) {
      if (line.find(",mc") == std::string::npos) continue;
      std::vector<std::string> cells;
      std::istringstream in(line);
      for (std::string c; std::getline(in, c, ',');) cells.push_back(c);
      ASSERT_EQ(cells.size(), 5u) << line;
      EXPECT_FALSE(cells[3].empty()) << line;
    }
  }
}

// ------------------------------------------------------------ usage and exit codes

TEST(Cli, EmptyArgumentsPrintUsage) {
  const auto r = cli({});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("exact"), std::string::npos);
  EXPECT_EQ(cli({"--help"}).code, 0);
  EXPECT_EQ(cli({"--version"}).out, std::string(kToolVersion) + "\n");
}

TEST(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(cli({"exact", "--walk", "z"}).code, 2);
  EXPECT_EQ(cli({"exact", "--eps", "1.5"}).code, 2);
  EXPECT_EQ(cli({"exact", "--bogus", "1"}).code, 2);
  EXPECT_EQ(cli({"frobnicate"}).code, 2);
  EXPECT_EQ(cli({"exact", "--group", "u4", "--n", "3"}).code, 2);
  EXPECT_EQ(cli({"exact", "--t-grid", "0:1"}).code, 2);
  EXPECT_EQ(cli({"spectral", "--walk", "a", "--n", "1", "--p", "6"}).code, 2);
}

TEST(Cli, StochasticSubcommandsNeedSeed) {
  const auto r = cli({"mc", "--group", "u3", "--p", "3"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("--seed"), std::string::npos);
  EXPECT_EQ(cli({"profile", "cutoff", "--n", "17", "--p", "6"}).code, 2);
}

TEST(Cli, CapacityErrorsExitThree) {
  const auto r = cli({"exact", "--group", "u5", "--p", "5", "--limit", "1000"});
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("1000"), std::string::npos);
}

// ------------------------------------------------------------ config files

TEST(Config, FlagOverridesFileValue) {
  const auto dir = scratch_dir("config");
  const auto path = dir / "cfg.json";
  std::ofstream(path) << R"({"n": 4, "p": 2, "walk": "a", "eps": [0.1, 0.25], "seed": 3})";
  std::ostringstream warn;
  const auto cfg = parse_config({"spectral", "--config", path.string(), "--p", "5"}, warn);
  EXPECT_EQ(cfg.n, 4u);
  EXPECT_EQ(cfg.p, 5u);
  EXPECT_EQ(cfg.eps, (std::vector<double>{0.1, 0.25}));
  EXPECT_EQ(cfg.seed, std::optional<std::uint64_t>(3));
}

TEST(Config, DuplicateFlagLastWinsWithWarning) {
  std::ostringstream warn;
  const auto cfg = parse_config({"spectral", "--p", "5", "--p", "7"}, warn);
  EXPECT_EQ(cfg.p, 7u);
  EXPECT_NE(warn.str().find("warning"), std::string::npos);
  EXPECT_NE(warn.str().find("--p"), std::string::npos);
}

TEST(Config, UnknownKeyIsRejected) {
  const auto dir = scratch_dir("config_unknown");
  const auto path = dir / "cfg.json";
  std::ofstream(path) << R"({"n": 4, "colour": "blue"})";
  const auto r = cli({"spectral", "--config", path.string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("colour"), std::string::npos);
  std::ostringstream warn;
  EXPECT_THROW(parse_config({"spectral", "--config", path.string()}, warn), UsageError);
}

TEST(Config, MalformedFileReportsLocation) {
  const auto dir = scratch_dir("config_bad");
  const auto path = dir / "cfg.json";
  std::ofstream(path) << "{\n  \"n\": 4,\n  \"p\": ,\n}\n";
  std::ostringstream warn;
  try {
    parse_config({"spectral", "--config", path.string()}, warn);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
    EXPECT_GT(e.column(), 0u);
  }
  EXPECT_EQ(cli({"spectral", "--config", path.string()}).code, 2);
}

TEST(Config, TimeGridParsing) {
  const auto g = TimeGrid::parse("1:100:3:log");
  const auto v = g.values();
  ASSERT_EQ(v.size(), 3u);
  EXPECT_NEAR(v[1], 10.0, 1e-12);
  EXPECT_EQ(v.back(), 100.0);
  const auto lin = TimeGrid::parse("0:10:5").values();
  EXPECT_EQ(lin, (std::vector<double>{0.0, 2.5, 5.0, 7.5, 10.0}));
  EXPECT_THROW(TimeGrid::parse("0:10:3:log"), UsageError);
  EXPECT_THROW(TimeGrid::parse("5:1:3"), UsageError);
  EXPECT_THROW(TimeGrid::parse("0:1:0"), UsageError);
}

// ------------------------------------------------------------ reproducibility and output

TEST(Output, ReportsAreByteIdenticalApartFromWallClock) {
  const std::vector<std::string> args{"mc", "--group", "u3", "--p", "3", "--t-grid", "1:1:1", "--pairs", "5000",
                                      "--samples", "5000", "--seed", "11", "--format", "json"};
  const auto a = cli(args), b = cli(args);
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(strip_wall_clock(a.out), strip_wall_clock(b.out));
  const auto c = cli({"profile", "cutoff", "--n", "33", "--p", "17", "--walk", "b", "--samples", "3000", "--seed", "4"});
  const auto d = cli({"profile", "cutoff", "--n", "33", "--p", "17", "--walk", "b", "--samples", "3000", "--seed", "4"});
  ASSERT_EQ(c.code, 0) << c.err;
  EXPECT_EQ(c.out, d.out);
}

TEST(Output, AtomicWriteAndOutputDirectory) {
  const auto dir = scratch_dir("out");
  write_atomically(dir / "a" / "b.txt", "hello\n");
  EXPECT_EQ(read_file(dir / "a" / "b.txt"), "hello\n");
  EXPECT_FALSE(fs::exists(dir / "a" / "b.txt.tmp"));

  ::setenv("NILWALK_OUTPUT_DIR", dir.c_str(), 1);
  const auto r = cli({"exact", "--group", "u3", "--p", "2", "--t-grid", "0:1:2"});
  const auto named = cli({"spectral", "--n", "5", "--p", "7", "--out", "spec.json", "--format", "json"});
  ::unsetenv("NILWALK_OUTPUT_DIR");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(r.out.empty());
  EXPECT_EQ(lines_of(read_file(dir / "exact.csv")).size(), 3u);
  ASSERT_EQ(named.code, 0) << named.err;
  EXPECT_NO_THROW(nlohmann::json::parse(read_file(dir / "spec.json")));
}

TEST(Output, ConfigEchoRoundTrips) {
  std::ostringstream warn;
  const auto cfg = parse_config({"spectral", "--n", "9", "--p", "11", "--walk", "b", "--eps", "0.1,0.2"}, warn);
  const auto j = cfg.to_json();
  EXPECT_EQ(j["n"], 9);
  EXPECT_EQ(j["p"], 11);
  EXPECT_EQ(j["walk"], "b");
  EXPECT_EQ(cfg.output_format(), OutputFormat::Csv);
  const auto v = parse_config({"verify", "theorem1", "--n", "3", "--p", "3"}, warn);
  EXPECT_EQ(v.output_format(), OutputFormat::Json);
}
