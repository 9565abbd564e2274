#include "nilwalk/harness.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <new>
#include <sstream>

#include "json_util.hpp"
#include "nilwalk/estimators.hpp"
#include "nilwalk/exact.hpp"
#include "nilwalk/structure.hpp"

namespace nilwalk {

namespace fs = std::filesystem;
using nlohmann::json;

std::string to_string(Subcommand c) {
  switch (c) {
    case Subcommand::Exact: return "exact";
    case Subcommand::Spectral: return "spectral";
    case Subcommand::Mc: return "mc";
    case Subcommand::VerifyTheorem1: return "verify theorem1";
    case Subcommand::VerifyLemmas: return "verify lemmas";
    case Subcommand::ProfileCutoff: return "profile cutoff";
  }
  return "?";
}

// ------------------------------------------------------------------ values

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t");
  return s.substr(a, b - a + 1);
}

std::uint64_t parse_u64(const std::string& text, const std::string& name) {
  const std::string t = trim(text);
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size())
    throw UsageError("--" + name + ": expected a non-negative integer, got '" + text + "'");
  return v;
}

double parse_double(const std::string& text, const std::string& name) {
  const std::string t = trim(text);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size() || !std::isfinite(v))
    throw UsageError("--" + name + ": expected a number, got '" + text + "'");
  return v;
}

std::vector<double> parse_list(const std::string& text, const std::string& name) {
  std::vector<double> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) out.push_back(parse_double(item, name));
  if (out.empty()) throw UsageError("--" + name + ": empty list");
  return out;
}

std::string format_number(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

TimeGrid TimeGrid::parse(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ':');) parts.push_back(item);
  if (parts.size() < 3 || parts.size() > 4)
    throw UsageError("--t-grid: expected start:stop:points[:log], got '" + text + "'");
  TimeGrid g;
  g.start = parse_double(parts[0], "t-grid");
  g.stop = parse_double(parts[1], "t-grid");
  g.points = parse_u64(parts[2], "t-grid");
  if (parts.size() == 4) {
    const auto mode = trim(parts[3]);
    if (mode == "log")
      g.log = true;
    else if (mode != "linear" && mode != "lin")
      throw UsageError("--t-grid: unknown spacing '" + mode + "'");
  }
  if (g.points == 0) throw UsageError("--t-grid: the grid must have at least one point");
  if (g.start < 0.0 || g.stop < g.start) throw UsageError("--t-grid: need 0 <= start <= stop");
  if (g.log && !(g.start > 0.0)) throw UsageError("--t-grid: a log grid needs start > 0");
  return g;
}

std::vector<double> TimeGrid::values() const {
  std::vector<double> out(points);
  for (std::size_t i = 0; i < points; ++i) {
    const double f = points == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(points - 1);
    out[i] = log ? start * std::pow(stop / start, f) : start + (stop - start) * f;
  }
  if (points > 1) out.back() = stop;
  return out;
}

std::string TimeGrid::str() const {
  return format_number(start) + ":" + format_number(stop) + ":" + std::to_string(points) + (log ? ":log" : "");
}

OutputFormat ExperimentConfig::output_format() const {
  if (format) return *format;
  return (command == Subcommand::VerifyTheorem1 || command == Subcommand::VerifyLemmas) ? OutputFormat::Json
                                                                                         : OutputFormat::Csv;
}

json ExperimentConfig::to_json() const {
  json j;
  j["subcommand"] = to_string(command);
  j["group"] = table ? "table:" + table->string() : "u" + std::to_string(n);
  j["n"] = n;
  j["p"] = p;
  j["walk"] = walk;
  j["magnitude"] = magnitude ? json(*magnitude) : json(nullptr);
  j["eps"] = eps;
  j["t_grid"] = grid ? json(grid->str()) : json(nullptr);
  j["samples"] = samples;
  j["pairs"] = pairs;
  j["seed"] = seed ? json(*seed) : json(nullptr);
  j["format"] = output_format() == OutputFormat::Csv ? "csv" : "json";
  j["time_tol"] = time_tol;
  j["limit"] = limit;
  j["c_list"] = c_list;
  j["engine"] = engine == BoundEngine::Auto ? "auto" : engine == BoundEngine::Exact ? "exact" : "spectral";
  j["trials"] = trials;
  return j;
}

// ------------------------------------------------------------------ parsing

namespace {

struct FlagSpec {
  const char* name;
  const char* help;
};

constexpr FlagSpec kFlags[] = {
    {"group", "uN (U_N(p)) or table:<file> (Cayley table)"},
    {"n", "matrix dimension of U_n(p)"},
    {"p", "modulus"},
    {"walk", "a | b | custom:<file>"},
    {"magnitude", "jump magnitude of walk b (default floor(sqrt a))"},
    {"eps", "comma-separated levels in (0,1)"},
    {"t-grid", "start:stop:points[:log]"},
    {"samples", "Monte Carlo samples for TV estimates"},
    {"pairs", "sample pairs for the collision estimator"},
    {"seed", "master seed (required by mc and profile cutoff)"},
    {"out", "output file (relative to NILWALK_OUTPUT_DIR when set)"},
    {"format", "csv | json"},
    {"config", "flat JSON object of flag values; command-line flags win"},
    {"time-tol", "bisection width for mixing times (0 = default rule)"},
    {"limit", "largest group order that may be enumerated"},
    {"c-list", "comma-separated multiples of the cutoff time"},
    {"engine", "auto | exact | spectral"},
    {"trials", "random trials for the bilinearity check on large groups"},
};

struct Cli {
  CLI::App app{"Random walks on finite nilpotent groups: mixing profiles, bounds and verification.", "nilwalk"};
  std::map<CLI::App*, Subcommand> leaves;
  std::map<CLI::App*, std::map<std::string, std::string>> values;

  Cli() {
    app.require_subcommand(1);
    app.set_version_flag("--version", kToolVersion);
    auto leaf = [&](CLI::App* parent, const char* name, const char* help, Subcommand cmd) {
      auto* sub = parent->add_subcommand(name, help);
      leaves[sub] = cmd;
      auto& slot = values[sub];
      for (const auto& f : kFlags) {
        sub->add_option(std::string("--") + f.name, slot[f.name], f.help)
            ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
      }
    };
    leaf(&app, "exact", "heat-kernel distance profile t,d_tv,d_l2", Subcommand::Exact);
    leaf(&app, "spectral", "product-chain profile, cutoff time and bounds", Subcommand::Spectral);
    leaf(&app, "mc", "collision and TV Monte Carlo estimates", Subcommand::Mc);
    auto* verify = app.add_subcommand("verify", "exact verification");
    verify->require_subcommand(1);
    leaf(verify, "theorem1", "mixing-time sandwich through the abelianization", Subcommand::VerifyTheorem1);
    leaf(verify, "lemmas", "exact counting checks of the commutator lemmas", Subcommand::VerifyLemmas);
    auto* profile = app.add_subcommand("profile", "cutoff profiles");
    profile->require_subcommand(1);
    leaf(profile, "cutoff", "estimated TV at multiples of the cutoff time", Subcommand::ProfileCutoff);
  }
};

std::string json_scalar_to_text(const json& v, const std::string& key) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_unsigned()) return std::to_string(v.get<std::uint64_t>());
  if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
  if (v.is_number_float()) return format_number(v.get<double>());
  if (v.is_array()) {
    std::string out;
    for (const auto& e : v) {
      if (!out.empty()) out += ",";
      if (e.is_array() || e.is_object()) throw UsageError("config key '" + key + "': nested values are not allowed");
      out += json_scalar_to_text(e, key);
    }
    return out;
  }
  throw UsageError("config key '" + key + "': unsupported value " + v.dump());
}

std::map<std::string, std::string> read_config_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  const json j = detail::parse_json(ss.str());
  if (!j.is_object()) throw ParseError("config file must hold a JSON object", 1, 1);
  std::map<std::string, std::string> out;
  for (const auto& [key, value] : j.items()) {
    bool known = false;
    for (const auto& f : kFlags) known = known || key == f.name;
    if (!known || key == "config") throw UsageError("config file " + path.string() + ": unknown key '" + key + "'");
    out[key] = json_scalar_to_text(value, key);
  }
  return out;
}

}  // namespace

std::string usage_text() {
  Cli cli;
  return cli.app.help();
}

ExperimentConfig parse_config(const std::vector<std::string>& args, std::ostream& warn) {
  if (args.empty()) throw UsageError("no subcommand given");
  Cli cli;
  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    cli.app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    throw UsageError(e.what());
  }
  CLI::App* leaf = nullptr;
  for (auto& [sub, cmd] : cli.leaves)
    if (sub->parsed()) leaf = sub;
  if (!leaf) throw UsageError("no subcommand given");

  std::map<std::string, std::string> raw;
  std::map<std::string, bool> from_cli;
  for (const auto& f : kFlags) {
    const auto* opt = leaf->get_option(std::string("--") + f.name);
    if (opt->count() > 1)
      warn << "warning: --" << f.name << " given " << opt->count() << " times; using the last value\n";
    if (opt->count() > 0) {
      raw[f.name] = cli.values[leaf][f.name];
      from_cli[f.name] = true;
    }
  }
  if (raw.count("config")) {
    for (const auto& [key, value] : read_config_file(raw["config"]))
      if (!from_cli.count(key)) raw[key] = value;
  }

  ExperimentConfig cfg;
  cfg.command = cli.leaves[leaf];
  auto has = [&](const char* k) { return raw.count(k) > 0; };

  if (has("n")) cfg.n = parse_u64(raw["n"], "n");
  if (has("group")) {
    const std::string g = trim(raw["group"]);
    if (g.rfind("table:", 0) == 0) {
      cfg.table = g.substr(6);
      if (cfg.table->empty()) throw UsageError("--group table: needs a file name");
    } else if (g.size() >= 2 && (g[0] == 'u' || g[0] == 'U')) {
      if (g.substr(1) != "n" && g.substr(1) != "N") {
        const auto dim = parse_u64(g.substr(1), "group");
        if (has("n") && dim != cfg.n) throw UsageError("--group " + g + " conflicts with --n " + raw["n"]);
        cfg.n = dim;
      }
    } else {
      throw UsageError("--group: expected uN or table:<file>, got '" + g + "'");
    }
  }
  if (!cfg.table && cfg.n < 2) throw UsageError("--n must be >= 2");
  if (has("p")) cfg.p = parse_u64(raw["p"], "p");
  if (!cfg.table && (cfg.p < 2 || cfg.p >= (std::uint64_t{1} << 32))) throw UsageError("--p must lie in [2, 2^32)");
  if (has("walk")) {
    cfg.walk = trim(raw["walk"]);
    if (cfg.walk != "a" && cfg.walk != "b" && cfg.walk.rfind("custom:", 0) != 0)
      throw UsageError("--walk: expected a, b or custom:<file>, got '" + cfg.walk + "'");
    if (cfg.walk == "custom:") throw UsageError("--walk custom: needs a file name");
  }
  if (has("magnitude")) cfg.magnitude = parse_u64(raw["magnitude"], "magnitude");
  if (has("eps")) cfg.eps = parse_list(raw["eps"], "eps");
  for (double e : cfg.eps)
    if (!(e > 0.0 && e < 1.0)) throw UsageError("--eps: every level must lie in (0,1), got " + format_number(e));
  if (has("t-grid")) cfg.grid = TimeGrid::parse(raw["t-grid"]);
  if (has("samples")) cfg.samples = parse_u64(raw["samples"], "samples");
  if (has("pairs")) cfg.pairs = parse_u64(raw["pairs"], "pairs");
  if (cfg.samples == 0 || cfg.pairs == 0) throw UsageError("--samples and --pairs must be >= 1");
  if (has("seed")) cfg.seed = parse_u64(raw["seed"], "seed");
  if (has("out")) cfg.out = fs::path(raw["out"]);
  if (has("format")) {
    const auto f = trim(raw["format"]);
    if (f == "csv")
      cfg.format = OutputFormat::Csv;
    else if (f == "json")
      cfg.format = OutputFormat::Json;
    else
      throw UsageError("--format: expected csv or json, got '" + f + "'");
  }
  if (has("time-tol")) {
    cfg.time_tol = parse_double(raw["time-tol"], "time-tol");
    if (cfg.time_tol < 0.0) throw UsageError("--time-tol must be >= 0");
  }
  if (has("limit")) cfg.limit = parse_u64(raw["limit"], "limit");
  if (has("c-list")) cfg.c_list = parse_list(raw["c-list"], "c-list");
  for (double c : cfg.c_list)
    if (!(c > 0.0)) throw UsageError("--c-list: multiples must be > 0");
  if (has("engine")) {
    const auto e = trim(raw["engine"]);
    if (e == "auto")
      cfg.engine = BoundEngine::Auto;
    else if (e == "exact")
      cfg.engine = BoundEngine::Exact;
    else if (e == "spectral")
      cfg.engine = BoundEngine::Spectral;
    else
      throw UsageError("--engine: expected auto, exact or spectral, got '" + e + "'");
  }
  if (has("trials")) cfg.trials = parse_u64(raw["trials"], "trials");

  const bool stochastic = cfg.command == Subcommand::Mc || cfg.command == Subcommand::ProfileCutoff;
  if (stochastic && !cfg.seed) throw UsageError("--seed is required by " + to_string(cfg.command));
  return cfg;
}

// ------------------------------------------------------------------ running

namespace {

std::string eps_tag(const std::string& quantity, double eps) { return quantity + "[eps=" + format_number(eps) + "]"; }

JumpDistribution build_walk(const ExperimentConfig& cfg) {
  const bool custom = cfg.walk.rfind("custom:", 0) == 0;
  if (cfg.table) {
    if (!custom) throw UsageError("walks a and b live on U_n(p); a table group needs --walk custom:<file>");
    auto group = std::make_shared<const SmallGroup>(SmallGroup::load(*cfg.table));
    return custom_group_walk(group, load_jump_law(cfg.walk.substr(7)), cfg.limit);
  }
  if (cfg.walk == "a") return build_superclass_walk(cfg.n, cfg.p);
  if (cfg.walk == "b") return build_nestoridi_walk(cfg.n, cfg.p, cfg.magnitude);
  return custom_matrix_walk(cfg.n, cfg.p, load_jump_law(cfg.walk.substr(7)), cfg.limit);
}

std::string walk_source(const JumpDistribution& jd) {
  switch (jd.kind()) {
    case WalkKind::Superclass: return "eq1";
    case WalkKind::Nestoridi: return "eq2";
    case WalkKind::Custom: return "custom";
  }
  return "custom";
}

std::string cutoff_source(const JumpDistribution& jd) { return jd.kind() == WalkKind::Nestoridi ? "cor2b" : "cor2a"; }

std::vector<double> grid_or_default(const ExperimentConfig& cfg) {
  return (cfg.grid ? *cfg.grid : TimeGrid{0.0, 10.0, 11, false}).values();
}

void add_walk_rows(RunReport& r, const JumpDistribution& jd) {
  r.rows.push_back({"k", std::nullopt, static_cast<double>(jd.k()), std::nullopt, walk_source(jd)});
  r.rows.push_back({"mu_star", std::nullopt, jd.mu_star(), std::nullopt, walk_source(jd)});
  for (const auto& f : jd.flags()) r.flags.push_back(f);
}

void run_exact(const ExperimentConfig& cfg, RunReport& r) {
  const auto jd = build_walk(cfg);
  for (const auto& f : jd.flags()) r.flags.push_back(f);
  const auto g = enumerate_group(jd, cfg.limit);
  TransitionKernel kernel(*g, element_law(jd, *g, cfg.limit), cfg.limit);
  HeatKernelEvaluator eval(kernel);
  double prev_tv = INFINITY, prev_l2 = INFINITY, prev_t = -1.0;
  bool monotone = true;
  for (double t : grid_or_default(cfg)) {
    const auto d = eval.at(t);
    ProfileRow row{t, tv_to_uniform(d), l2_to_uniform(d)};
    if (t >= prev_t && (row.d_tv > prev_tv + 1e-9 || row.d_l2 > prev_l2 + 1e-9)) monotone = false;
    prev_t = t;
    prev_tv = row.d_tv;
    prev_l2 = row.d_l2;
    r.profile.push_back(row);
  }
  if (!monotone) r.flags.push_back("nonmonotone_profile");
  r.details["group_order"] = g->order();
  r.details["kernel_exact"] = kernel.exact();
}

BoundOptions bound_options(const ExperimentConfig& cfg) {
  BoundOptions o;
  o.engine = cfg.engine;
  o.limit = cfg.limit;
  o.search.time_tol = cfg.time_tol;
  o.mc_samples = cfg.samples;
  o.seed = cfg.seed.value_or(0);
  return o;
}

void add_bound_rows(RunReport& r, const BoundReport& b, const JumpDistribution& jd) {
  const double e = b.epsilon;
  r.rows.push_back({eps_tag("lower_time", e), std::nullopt, b.lower.time, std::nullopt, "eq6"});
  r.rows.push_back({eps_tag("upper_l2_time", e), std::nullopt, b.upper_l2.time, std::nullopt, "eq6"});
  r.rows.push_back({eps_tag("plumbing_time", e), std::nullopt, b.plumbing_time, std::nullopt, "eq6"});
  r.rows.push_back({eps_tag("upper_time", e), std::nullopt, b.upper_time, std::nullopt, "eq6"});
  if (b.exact) r.rows.push_back({eps_tag("exact_time", e), std::nullopt, b.exact->time, std::nullopt, "exact"});
  if (b.eq19_time) r.rows.push_back({eps_tag("eq19_time", e), std::nullopt, *b.eq19_time, std::nullopt, "eq19"});
  (void)jd;
}

void run_spectral(const ExperimentConfig& cfg, RunReport& r) {
  const auto jd = build_walk(cfg);
  const auto proj = project_walk(jd);
  const auto spec = coordinate_eigenvalues(proj.steps);
  const std::size_t n = jd.dim();
  add_walk_rows(r, jd);
  r.rows.push_back({"gap", std::nullopt, spec.gap, std::nullopt, "eq20"});
  if (n >= 3 && jd.kind() != WalkKind::Custom) {
    const auto mag = jd.nestoridi() ? std::optional<std::uint64_t>(jd.nestoridi()->magnitude) : std::nullopt;
    r.rows.push_back({"cutoff_time", std::nullopt, cutoff_time(jd.kind(), n, jd.modulus().value(), mag),
                      std::nullopt, cutoff_source(jd)});
  }
  auto opts = bound_options(cfg);
  if (cfg.engine == BoundEngine::Auto) opts.engine = BoundEngine::Spectral;
  json reports = json::array();
  for (double e : cfg.eps) {
    const auto b = theorem1_bounds(jd, e, opts);
    add_bound_rows(r, b, jd);
    for (const auto& f : b.flags)
      if (std::find(r.flags.begin(), r.flags.end(), f) == r.flags.end()) r.flags.push_back(f);
    reports.push_back(b.to_json());
  }
  r.details["bounds"] = reports;
  if (cfg.grid)
    for (double t : cfg.grid->values()) r.rows.push_back({"d_l2_ab", t, product_l2(n, spec, t), std::nullopt, "eq20"});
}

void run_mc(const ExperimentConfig& cfg, RunReport& r) {
  const auto jd = build_walk(cfg);
  for (const auto& f : jd.flags()) r.flags.push_back(f);
  std::optional<CoordinateSpectrum> spec;
  if (jd.on_matrices()) {
    try {
      spec = coordinate_eigenvalues(project_walk(jd).steps);
    } catch (const UnsupportedProjectionError&) {
    }
  }
  const std::uint64_t seed = *cfg.seed;
  for (double t : grid_or_default(cfg)) {
    const auto c = collision_l2(jd, t, cfg.pairs, seed);
    r.rows.push_back({"collision_l2_sq", t, c.estimate, c.std_error, "mc"});
    if (spec && t > 0.0) {
      const auto e = product_tv_estimate(jd.dim(), *spec, t, cfg.samples, seed);
      r.rows.push_back({"tv_ab_estimate", t, e.estimate, e.std_error, "mc"});
    }
  }
}

void run_theorem1(const ExperimentConfig& cfg, RunReport& r) {
  const auto jd = build_walk(cfg);
  add_walk_rows(r, jd);
  auto opts = bound_options(cfg);
  opts.full_group_time = jd.group_order() <= static_cast<double>(cfg.limit);
  if (!opts.full_group_time) r.flags.push_back("exact_time_unavailable");
  json reports = json::array();
  for (double e : cfg.eps) {
    const auto b = theorem1_bounds(jd, e, opts);
    add_bound_rows(r, b, jd);
    reports.push_back(b.to_json());
    const bool ok = b.sandwich_holds().value_or(b.lower.lower_bracket <= b.upper_time);
    if (!ok && r.pass) {
      r.pass = false;
      r.failure = eps_tag(b.exact ? "sandwich" : "lower_vs_upper", e) + " fails";
    }
    for (const auto& f : b.flags)
      if (std::find(r.flags.begin(), r.flags.end(), f) == r.flags.end()) r.flags.push_back(f);
  }
  r.details["bounds"] = reports;
  if (const auto ct = reports.empty() ? json() : reports.front()["cutoff_time"]; !ct.is_null())
    r.rows.push_back({"cutoff_time", std::nullopt, ct.get<double>(), std::nullopt, cutoff_source(jd)});
}

void run_lemmas(const ExperimentConfig& cfg, RunReport& r) {
  GroupPtr g;
  std::vector<Index> gens;
  if (cfg.table) {
    g = std::make_shared<const SmallGroup>(SmallGroup::load(*cfg.table));
  } else {
    auto eg = std::make_shared<const EnumeratedUnitriangular>(cfg.n, Modulus(cfg.p), cfg.limit);
    for (std::size_t i = 0; i + 1 < cfg.n; ++i) gens.push_back(eg->index_of(UnitriangularMatrix::elementary(cfg.n, Modulus(cfg.p), i, 1)));
    g = eg;
  }
  const auto series = LowerCentralSeries::compute(g, cfg.limit);
  if (cfg.table) gens.assign(series.group_generators().begin(), series.group_generators().end());

  std::vector<UniformityVerdict> verdicts;
  std::vector<std::string> names;
  verdicts.push_back(verify_lemma4(series));
  names.push_back("lemma4");
  for (Index s : gens) {
    for (std::size_t l = 2; l <= series.nilpotency_class(); ++l) {
      verdicts.push_back(verify_lemma5i(series, s, l));
      names.push_back("lemma5i[s=" + std::to_string(s) + ",l=" + std::to_string(l) + "]");
    }
  }
  const std::uint64_t seed = cfg.seed.value_or(0);
  auto sweep = verify_lemma5ii_sweep(7, 3, 3, seed);
  for (std::size_t i = 0; i < sweep.size(); ++i) {
    names.push_back("lemma5ii[p=" + sweep[i].params["p"].dump() + ",m=" + sweep[i].params["m"].dump() + ",#" +
                    std::to_string(i % 3) + "]");
    verdicts.push_back(std::move(sweep[i]));
  }
  Rng rng = stream_rng(seed, 0x70);
  verdicts.push_back(verify_prop3(series, cfg.trials, rng));
  names.push_back("prop3");

  json out = json::array();
  for (std::size_t i = 0; i < verdicts.size(); ++i) {
    r.rows.push_back({names[i], std::nullopt, verdicts[i].pass ? 1.0 : 0.0, std::nullopt, "exact"});
    out.push_back(verdicts[i].to_json());
    if (!verdicts[i].pass && r.pass) {
      r.pass = false;
      r.failure = names[i] + ": " + verdicts[i].failure;
    }
  }
  r.details["nilpotency_class"] = series.nilpotency_class();
  r.details["verdicts"] = out;
}

void run_profile_cutoff(const ExperimentConfig& cfg, RunReport& r) {
  if (cfg.table || (cfg.walk != "a" && cfg.walk != "b"))
    throw UsageError("profile cutoff needs walk a or b on U_n(p)");
  const auto jd = build_walk(cfg);
  for (const auto& f : jd.flags()) r.flags.push_back(f);
  const auto spec = coordinate_eigenvalues(project_walk(jd).steps);
  const auto mag = jd.nestoridi() ? std::optional<std::uint64_t>(jd.nestoridi()->magnitude) : std::nullopt;
  const double tn = cutoff_time(jd.kind(), cfg.n, cfg.p, mag);
  r.rows.push_back({"cutoff_time", std::nullopt, tn, std::nullopt, cutoff_source(jd)});
  for (double c : cfg.c_list) {
    const auto e = product_tv_estimate(cfg.n, spec, c * tn, cfg.samples, *cfg.seed);
    r.rows.push_back({"tv_ab_estimate[c=" + format_number(c) + "]", c * tn, e.estimate, e.std_error, "mc"});
  }
}

json number_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

}  // namespace

RunReport run(const ExperimentConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  RunReport r;
  r.config = config.to_json();
  switch (config.command) {
    case Subcommand::Exact: run_exact(config, r); break;
    case Subcommand::Spectral: run_spectral(config, r); break;
    case Subcommand::Mc: run_mc(config, r); break;
    case Subcommand::VerifyTheorem1: run_theorem1(config, r); break;
    case Subcommand::VerifyLemmas: run_lemmas(config, r); break;
    case Subcommand::ProfileCutoff: run_profile_cutoff(config, r); break;
  }
  r.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

std::string RunReport::render(OutputFormat format) const {
  std::string out;
  if (format == OutputFormat::Csv) {
    if (!profile.empty()) {
      out = "t,d_tv,d_l2\n";
      for (const auto& p : profile) out += format_number(p.t) + "," + format_number(p.d_tv) + "," + format_number(p.d_l2) + "\n";
      return out;
    }
    out = "quantity,t,value,std_error,source\n";
    for (const auto& row : rows) {
      out += row.quantity + "," + (row.t ? format_number(*row.t) : "") + "," + format_number(row.value) + "," +
             (row.std_error ? format_number(*row.std_error) : "") + "," + row.source + "\n";
    }
    return out;
  }
  json j;
  j["version"] = version;
  j["config"] = config;
  json rows_json = json::array();
  if (!profile.empty()) {
    for (const auto& p : profile)
      rows_json.push_back({{"t", number_or_null(p.t)}, {"d_tv", number_or_null(p.d_tv)}, {"d_l2", number_or_null(p.d_l2)}});
  } else {
    for (const auto& row : rows) {
      json e;
      e["quantity"] = row.quantity;
      e["t"] = row.t ? number_or_null(*row.t) : json(nullptr);
      e["value"] = number_or_null(row.value);
      e["std_error"] = row.std_error ? number_or_null(*row.std_error) : json(nullptr);
      e["source"] = row.source;
      rows_json.push_back(e);
    }
  }
  j["rows"] = rows_json;
  j["flags"] = flags;
  j["pass"] = pass;
  if (!failure.empty()) j["failure"] = failure;
  j["details"] = details;
  j["wall_clock_seconds"] = wall_clock_seconds;
  return j.dump(2) + "\n";
}

void write_atomically(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot write " + tmp.string());
    f << content;
    f.flush();
    if (!f) throw Error("cannot write " + tmp.string());
  }
  fs::rename(tmp, path);
}

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  if (args.empty()) {
    err << usage_text();
    return 2;
  }
  for (const auto& a : args) {
    if (a == "--help" || a == "-h" || a == "--version") {
      Cli cli;
      std::vector<std::string> reversed(args.rbegin(), args.rend());
      try {
        cli.app.parse(reversed);
      } catch (const CLI::CallForHelp&) {
        out << cli.app.help();
        return 0;
      } catch (const CLI::CallForVersion&) {
        out << kToolVersion << "\n";
        return 0;
      } catch (const CLI::ParseError& e) {
        // Help requested on a subcommand.
        if (e.get_exit_code() == 0) {
          CLI::App* target = &cli.app;
          for (const auto& s : args) {
            if (s.rfind("-", 0) == 0) break;
            try {
              target = target->get_subcommand(s);
            } catch (const CLI::OptionNotFound&) {
              break;
            }
          }
          out << target->help();
          return 0;
        }
        err << e.what() << "\n";
        return 2;
      }
    }
  }

  ExperimentConfig cfg;
  try {
    cfg = parse_config(args, err);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n\n" << usage_text();
    return 2;
  }

  try {
    const auto report = run(cfg);
    const auto format = cfg.output_format();
    const std::string text = report.render(format);
    std::optional<fs::path> dest = cfg.out;
    const char* dir = std::getenv("NILWALK_OUTPUT_DIR");
    if (dir && *dir) {
      std::string name = to_string(cfg.command);
      std::replace(name.begin(), name.end(), ' ', '_');
      if (!dest) dest = fs::path(name + (format == OutputFormat::Csv ? ".csv" : ".json"));
      if (dest->is_relative()) dest = fs::path(dir) / *dest;
    }
    if (dest) {
      write_atomically(*dest, text);
      err << "wrote " << dest->string() << "\n";
    } else {
      out << text;
    }
    if (!report.pass) {
      err << "verification failed: " << report.failure << "\n";
      return 1;
    }
    return 0;
  } catch (const CapacityError& e) {
    err << "capacity error: " << e.what() << "\n";
    return 3;
  } catch (const PrecisionError& e) {
    err << "precision error: " << e.what() << "\n";
    return 3;
  } catch (const DivergenceError& e) {
    err << "divergence error: " << e.what() << "\n";
    return 3;
  } catch (const std::bad_alloc&) {
    err << "capacity error: out of memory\n";
    return 3;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace nilwalk
