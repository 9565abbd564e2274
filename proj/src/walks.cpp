#include "nilwalk/walks.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "json_util.hpp"
#include "nilwalk/errors.hpp"

namespace nilwalk {

namespace {

std::uint64_t isqrt(std::uint64_t x) {
  auto r = static_cast<std::uint64_t>(std::sqrt(static_cast<double>(x)));
  while (r * r > x) --r;
  while ((r + 1) * (r + 1) <= x) ++r;
  return r;
}

void validate_weights(const std::vector<Weight>& weights) {
  if (weights.empty()) throw DomainError("empty jump law");
  double total = 0.0;
  for (const auto& w : weights) {
    if (!(w.value > 0.0)) throw DomainError("jump-law weights must be positive");
    total += w.value;
  }
  if (std::abs(total - 1.0) > 1e-12) throw DomainError("jump-law weights sum to " + std::to_string(total) + ", not 1");
}

}  // namespace

NestoridiParams nestoridi_params(std::uint64_t p, std::optional<std::uint64_t> magnitude_override) {
  if (p < 2) throw DomainError("modulus must be >= 2");
  NestoridiParams np;
  np.p = p;
  const std::uint64_t r = isqrt(p);
  np.a = r + (r % 2 == 0 ? 1 : 0);
  np.b = isqrt(np.a);
  np.magnitude = magnitude_override.value_or(np.b);
  const std::uint64_t m = np.magnitude % p;
  np.degenerate = np.b <= 1 || m == 1 || m == p - 1 || m == 0;
  return np;
}

std::optional<std::uint64_t> superdiagonal_class_size(std::size_t n, std::uint64_t p, std::uint64_t c) {
  const std::uint64_t base = p / std::gcd(c % p, p);
  std::uint64_t out = 1;
  for (std::size_t k = 2; k < n; ++k) {
    if (out > std::numeric_limits<std::uint64_t>::max() / base) return std::nullopt;
    out *= base;
  }
  return out;
}

// ------------------------------------------------------------ JumpDistribution

const Modulus& JumpDistribution::modulus() const {
  if (!modulus_) throw DomainError("jump law is not defined on U_n(p)");
  return *modulus_;
}

bool JumpDistribution::has_flag(const std::string& f) const {
  return std::find(flags_.begin(), flags_.end(), f) != flags_.end();
}

bool JumpDistribution::superdiagonal_form() const {
  if (!on_matrices()) return false;
  return std::all_of(classes_.begin(), classes_.end(), [](const auto& c) { return c.generator.has_value(); });
}

double JumpDistribution::group_order() const {
  if (on_matrices())
    return std::pow(static_cast<double>(modulus_->value()),
                    static_cast<double>(UnitriangularMatrix::entry_count(matrix_dim_)));
  return static_cast<double>(table_group_->order());
}

std::string JumpDistribution::group_name() const {
  if (on_matrices()) return "U" + std::to_string(matrix_dim_) + "(" + std::to_string(modulus_->value()) + ")";
  return table_group_->name();
}

std::size_t JumpDistribution::sample_class(Rng& rng) const {
  if (classes_.size() == 1) return 0;
  std::uniform_real_distribution<double> u(0.0, cumulative_.back());
  const double x = u(rng);
  auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), x);
  return std::min<std::size_t>(static_cast<std::size_t>(it - cumulative_.begin()), classes_.size() - 1);
}

void JumpDistribution::finalize() {
  std::sort(classes_.begin(), classes_.end(), [](const JumpClass& a, const JumpClass& b) {
    if (a.representative.index() != b.representative.index()) return a.representative.index() < b.representative.index();
    if (auto* ma = std::get_if<UnitriangularMatrix>(&a.representative))
      return *ma < std::get<UnitriangularMatrix>(b.representative);
    return std::get<Index>(a.representative) < std::get<Index>(b.representative);
  });
  cumulative_.clear();
  double acc = 0.0;
  mu_star_ = classes_.front().weight.value;
  for (const auto& c : classes_) {
    acc += c.weight.value;
    cumulative_.push_back(acc);
    mu_star_ = std::min(mu_star_, c.weight.value);
  }
}

JumpDistribution make_matrix_walk(WalkKind kind, std::size_t n, Modulus p, std::vector<JumpClass> classes,
                                  std::size_t limit) {
  if (n < 2) throw DomainError("matrix dimension must be >= 2, got " + std::to_string(n));
  std::vector<Weight> weights;
  for (auto& c : classes) {
    auto* m = std::get_if<UnitriangularMatrix>(&c.representative);
    if (!m) throw DomainError("matrix walk needs matrix representatives");
    if (m->dim() != n || !(m->modulus() == p)) throw DomainError("representative " + m->str() + " is not in U_n(p)");
    c.generator = as_superdiagonal_generator(*m);
    weights.push_back(c.weight);
  }
  validate_weights(weights);

  JumpDistribution jd;
  jd.kind_ = kind;
  jd.matrix_dim_ = n;
  jd.modulus_ = p;

  const bool symbolic = std::all_of(classes.begin(), classes.end(), [](const auto& c) { return c.generator.has_value(); });
  if (symbolic) {
    // Classes of I + c E_{i,i+1} are distinct exactly when (i, c mod p) differ:
    // conjugation fixes the superdiagonal.
    std::map<std::pair<std::size_t, std::uint32_t>, JumpClass> merged;
    for (auto& c : classes) {
      auto key = std::make_pair(c.generator->index, c.generator->step);
      auto [it, inserted] = merged.emplace(key, c);
      if (!inserted) it->second.weight = it->second.weight + c.weight;
    }
    std::vector<std::uint64_t> coordinate_gcd(n - 1, p.value());
    for (auto& [key, c] : merged) {
      c.size = superdiagonal_class_size(n, p.value(), key.second);
      coordinate_gcd[key.first] = std::gcd(coordinate_gcd[key.first], std::uint64_t{key.second});
      jd.classes_.push_back(std::move(c));
    }
    for (std::size_t i = 0; i + 1 < n; ++i)
      if (coordinate_gcd[i] != 1)
        throw ReducibleWalkError("reducible walk: superdiagonal coordinate " + std::to_string(i + 1) +
                                 " is not generated by the support");
  } else {
    auto g = std::make_shared<const EnumeratedUnitriangular>(n, p, limit);
    std::vector<ClassRecord> records;
    for (const auto& c : classes) records.push_back({g->index_of(std::get<UnitriangularMatrix>(c.representative)), c.weight});
    auto d = decompose_classes(*g, records, nullptr, limit);
    for (const auto& dc : d.classes) {
      JumpClass jc{g->element(dc.representative), dc.weight, std::nullopt, dc.size};
      jc.generator = as_superdiagonal_generator(std::get<UnitriangularMatrix>(jc.representative));
      jd.classes_.push_back(std::move(jc));
    }
  }
  jd.finalize();
  return jd;
}

JumpDistribution make_group_walk(GroupPtr group, std::vector<ClassRecord> records, std::size_t limit) {
  if (!group) throw DomainError("null group");
  auto d = decompose_classes(*group, records, nullptr, limit);
  JumpDistribution jd;
  jd.kind_ = WalkKind::Custom;
  jd.table_group_ = std::move(group);
  for (const auto& dc : d.classes) jd.classes_.push_back({dc.representative, dc.weight, std::nullopt, dc.size});
  jd.finalize();
  return jd;
}

JumpDistribution build_superclass_walk(std::size_t n, std::uint64_t p) {
  if (n < 2) throw DomainError("n must be >= 2, got " + std::to_string(n));
  Modulus mod(p);
  const Rational w(1, 2 * static_cast<std::int64_t>(n - 1));
  std::vector<JumpClass> classes;
  for (std::size_t i = 0; i + 1 < n; ++i)
    for (std::int64_t c : {std::int64_t{1}, std::int64_t{-1}})
      classes.push_back({UnitriangularMatrix::elementary(n, mod, i, c), Weight::of(w), std::nullopt, std::nullopt});
  auto jd = make_matrix_walk(WalkKind::Superclass, n, mod, std::move(classes));
  if (p < 6) jd.flags_.push_back("p_below_6");
  return jd;
}

JumpDistribution build_nestoridi_walk(std::size_t n, std::uint64_t p, std::optional<std::uint64_t> magnitude_override) {
  if (n < 2) throw DomainError("n must be >= 2, got " + std::to_string(n));
  Modulus mod(p);
  auto params = nestoridi_params(p, magnitude_override);
  if (params.magnitude % p == 0) throw DomainError("jump magnitude must be nonzero mod p");
  const Rational w(1, 4 * static_cast<std::int64_t>(n - 1));
  const auto m = static_cast<std::int64_t>(params.magnitude % p);
  std::vector<JumpClass> classes;
  for (std::size_t i = 0; i + 1 < n; ++i)
    for (std::int64_t c : {std::int64_t{1}, std::int64_t{-1}, m, -m})
      classes.push_back({UnitriangularMatrix::elementary(n, mod, i, c), Weight::of(w), std::nullopt, std::nullopt});
  auto jd = make_matrix_walk(WalkKind::Nestoridi, n, mod, std::move(classes));
  jd.nestoridi_ = params;
  if (params.degenerate) jd.flags_.push_back("degenerate_b");
  if (p < 6) jd.flags_.push_back("p_below_6");
  return jd;
}

// ------------------------------------------------------------- jump-law files

std::vector<JumpLawRecord> parse_jump_law(std::istream& in) {
  std::stringstream buf;
  buf << in.rdbuf();
  const auto doc = detail::parse_json(buf.str());
  const nlohmann::json* list = &doc;
  if (doc.is_object()) {
    for (auto it = doc.begin(); it != doc.end(); ++it)
      if (it.key() != "records") throw ParseError("unknown key '" + it.key() + "' in jump-law file", 0, 0);
    if (!doc.contains("records")) throw ParseError("jump-law file needs a 'records' array", 0, 0);
    list = &doc.at("records");
  }
  if (!list->is_array()) throw ParseError("jump-law records must be an array", 0, 0);

  std::vector<JumpLawRecord> out;
  std::vector<Weight> weights;
  std::size_t idx = 0;
  for (const auto& rec : *list) {
    const std::string where = "record " + std::to_string(idx++);
    if (!rec.is_object()) throw ParseError(where + " is not an object", 0, 0);
    for (auto it = rec.begin(); it != rec.end(); ++it)
      if (it.key() != "representative" && it.key() != "weight")
        throw ParseError(where + ": unknown key '" + it.key() + "'", 0, 0);
    if (!rec.contains("representative") || !rec.contains("weight"))
      throw ParseError(where + " needs 'representative' and 'weight'", 0, 0);
    JumpLawRecord r;
    const auto& rep = rec.at("representative");
    if (rep.is_array()) {
      std::vector<std::int64_t> entries;
      for (const auto& e : rep) {
        if (!e.is_number_integer()) throw ParseError(where + ": matrix entries must be integers", 0, 0);
        entries.push_back(e.get<std::int64_t>());
      }
      r.representative = std::move(entries);
    } else if (rep.is_number_unsigned()) {
      r.representative = rep.get<Index>();
    } else {
      throw ParseError(where + ": representative must be an entry list or an element index", 0, 0);
    }
    const auto& w = rec.at("weight");
    try {
      if (w.is_string()) {
        r.weight = parse_weight(w.get<std::string>());
      } else if (w.is_number_integer()) {
        r.weight = Weight::of(Rational(w.get<std::int64_t>()));
      } else if (w.is_number()) {
        r.weight = parse_weight(w.dump());
      } else {
        throw DomainError("weight must be a number or a \"num/den\" string");
      }
    } catch (const DomainError& e) {
      throw ParseError(where + ": " + e.what(), 0, 0);
    }
    weights.push_back(r.weight);
    out.push_back(std::move(r));
  }
  try {
    validate_weights(weights);
  } catch (const DomainError& e) {
    throw ParseError(e.what(), 0, 0);
  }
  return out;
}

std::vector<JumpLawRecord> load_jump_law(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot open jump-law file " + path.string());
  return parse_jump_law(in);
}

JumpDistribution custom_matrix_walk(std::size_t n, std::uint64_t p, const std::vector<JumpLawRecord>& records,
                                    std::size_t limit) {
  Modulus mod(p);
  std::vector<JumpClass> classes;
  for (const auto& r : records) {
    auto* entries = std::get_if<std::vector<std::int64_t>>(&r.representative);
    if (!entries) throw DomainError("U_n(p) walks need matrix entry-list representatives");
    classes.push_back({UnitriangularMatrix::from_entries(n, mod, *entries), r.weight, std::nullopt, std::nullopt});
  }
  return make_matrix_walk(WalkKind::Custom, n, mod, std::move(classes), limit);
}

JumpDistribution custom_group_walk(GroupPtr group, const std::vector<JumpLawRecord>& records, std::size_t limit) {
  std::vector<ClassRecord> out;
  for (const auto& r : records) {
    auto* idx = std::get_if<Index>(&r.representative);
    if (!idx) throw DomainError("table-group walks need element-index representatives");
    out.push_back({*idx, r.weight});
  }
  return make_group_walk(std::move(group), std::move(out), limit);
}

// ------------------------------------------------------------------ enumeration

SupportDecomposition decomposition_on(const JumpDistribution& jd, const EnumeratedUnitriangular& g,
                                      const LowerCentralSeries* series) {
  std::vector<ClassRecord> records;
  for (const auto& c : jd.classes()) records.push_back({g.index_of(std::get<UnitriangularMatrix>(c.representative)), c.weight});
  return decompose_classes(g, records, series, g.order());
}

GroupPtr enumerate_group(const JumpDistribution& jd, std::size_t limit) {
  if (jd.on_matrices()) return std::make_shared<const EnumeratedUnitriangular>(jd.dim(), jd.modulus(), limit);
  if (jd.table_group()->order() > limit)
    throw CapacityError(jd.group_name() + " exceeds the enumeration limit of " + std::to_string(limit));
  return jd.table_group();
}

std::vector<ElementWeight> element_law(const JumpDistribution& jd, const FiniteGroup& g, std::size_t limit) {
  SupportDecomposition d;
  if (jd.on_matrices()) {
    auto* eg = dynamic_cast<const EnumeratedUnitriangular*>(&g);
    if (!eg || eg->dim() != jd.dim() || !(eg->modulus() == jd.modulus()))
      throw DomainError("jump law does not live on " + g.name());
    d = decomposition_on(jd, *eg);
  } else {
    if (&g != jd.table_group().get()) throw DomainError("jump law does not live on " + g.name());
    for (const auto& c : jd.classes())
      d.classes.push_back({std::get<Index>(c.representative), c.weight, c.size.value_or(0)});
  }
  return element_law(g, d, limit);
}

// ----------------------------------------------------------------- sampling

MatrixJump sample_matrix_jump(const JumpDistribution& jd, Rng& rng) {
  if (!jd.on_matrices()) throw DomainError("sample_matrix_jump on a table-group walk");
  const std::size_t a = jd.sample_class(rng);
  const auto& cls = jd.classes()[a];
  const auto u = uniform_matrix(jd.dim(), jd.modulus(), rng);
  if (cls.generator) return {a, RankOneConjugate(u, cls.generator->index, cls.generator->step).to_matrix()};
  const auto& s = std::get<UnitriangularMatrix>(cls.representative);
  return {a, multiply(multiply(inverse(u), s), u)};
}

IndexJump sample_index_jump(const JumpDistribution& jd, Rng& rng) {
  if (jd.on_matrices()) throw DomainError("sample_index_jump on a matrix walk");
  const std::size_t a = jd.sample_class(rng);
  const auto& g = *jd.table_group();
  const Index u = uniform_element(g, rng);
  return {a, g.conjugate(std::get<Index>(jd.classes()[a].representative), u)};
}

WalkTrajectory simulate(const JumpDistribution& jd, double t, Rng& rng, bool record) {
  if (!(t >= 0.0)) throw DomainError("simulation time must be >= 0");
  WalkTrajectory tr;
  tr.time = t;
  if (t > 0.0) tr.jump_count = std::poisson_distribution<std::size_t>(t)(rng);
  if (record) {
    std::uniform_real_distribution<double> u(0.0, t);
    tr.jump_times.resize(tr.jump_count);
    for (auto& s : tr.jump_times) s = u(rng);
    std::sort(tr.jump_times.begin(), tr.jump_times.end());
  }

  if (jd.on_matrices()) {
    UnitriangularMatrix state(jd.dim(), jd.modulus());
    for (std::size_t k = 0; k < tr.jump_count; ++k) {
      const std::size_t a = jd.sample_class(rng);
      const auto& cls = jd.classes()[a];
      const auto u = uniform_matrix(jd.dim(), jd.modulus(), rng);
      if (cls.generator) {
        RankOneConjugate jump(u, cls.generator->index, cls.generator->step);
        jump.apply_right(state);
        if (record) tr.jumps.emplace_back(jump.to_matrix());
      } else {
        auto jump = multiply(multiply(inverse(u), std::get<UnitriangularMatrix>(cls.representative)), u);
        state = multiply(state, jump);
        if (record) tr.jumps.emplace_back(std::move(jump));
      }
      if (record) tr.jump_classes.push_back(a);
    }
    tr.state = std::move(state);
  } else {
    const auto& g = *jd.table_group();
    Index state = FiniteGroup::identity();
    for (std::size_t k = 0; k < tr.jump_count; ++k) {
      auto jump = sample_index_jump(jd, rng);
      state = g.multiply(state, jump.value);
      if (record) {
        tr.jumps.emplace_back(jump.value);
        tr.jump_classes.push_back(jump.class_index);
      }
    }
    tr.state = state;
  }
  return tr;
}

// ---------------------------------------------------------------- projection

StepLaw StepLaw::uniform(std::uint64_t p, const std::vector<std::int64_t>& jumps) {
  if (p < 2) throw DomainError("modulus must be >= 2");
  if (jumps.empty()) throw DomainError("empty jump set");
  Modulus mod(p);
  std::map<std::uint32_t, double> acc;
  for (auto j : jumps) acc[mod.reduce(j)] += 1.0 / static_cast<double>(jumps.size());
  StepLaw law;
  law.p = p;
  law.steps.assign(acc.begin(), acc.end());
  return law;
}

std::vector<std::uint32_t> StepLaw::support() const {
  std::vector<std::uint32_t> out;
  for (const auto& [r, q] : steps) out.push_back(r);
  return out;
}

bool StepLaw::symmetric(double tol) const {
  auto mass = [&](std::uint32_t r) {
    for (const auto& [s, q] : steps)
      if (s == r) return q;
    return 0.0;
  };
  for (const auto& [r, q] : steps)
    if (std::abs(mass(static_cast<std::uint32_t>((p - r) % p)) - q) > tol) return false;
  return true;
}

AbelianWalkSpec project_walk(const JumpDistribution& jd) {
  if (!jd.superdiagonal_form())
    throw UnsupportedProjectionError("walk on " + jd.group_name() +
                                     " is not built from superdiagonal generators; no product-chain projection");
  const std::size_t coords = jd.dim() - 1;
  const std::uint64_t p = jd.modulus().value();
  std::vector<std::map<std::uint32_t, double>> per(coords);
  std::vector<double> rate(coords, 0.0);
  for (const auto& c : jd.classes()) {
    per[c.generator->index][c.generator->step] += c.weight.value;
    rate[c.generator->index] += c.weight.value;
  }
  AbelianWalkSpec spec;
  spec.coordinates = coords;
  spec.p = p;
  spec.coordinate_rate = rate[0];
  spec.steps.p = p;
  for (const auto& [r, w] : per[0]) spec.steps.steps.emplace_back(r, w / rate[0]);
  for (std::size_t i = 1; i < coords; ++i) {
    if (std::abs(rate[i] - rate[0]) > 1e-12)
      throw UnsupportedProjectionError("coordinates carry different rates; not a product of identical chains");
    if (per[i].size() != per[0].size())
      throw UnsupportedProjectionError("coordinates carry different step laws");
    auto it = per[0].begin();
    for (const auto& [r, w] : per[i]) {
      if (r != it->first || std::abs(w / rate[i] - it->second / rate[0]) > 1e-12)
        throw UnsupportedProjectionError("coordinates carry different step laws");
      ++it;
    }
  }
  if (!spec.steps.symmetric(1e-12))
    throw UnsupportedProjectionError("coordinate step law is not symmetric");
  return spec;
}

}  // namespace nilwalk
