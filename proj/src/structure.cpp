#include "nilwalk/structure.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "nilwalk/errors.hpp"

namespace nilwalk {

namespace {

void require_enumerable(const FiniteGroup& g, std::size_t limit) {
  if (g.order() > limit)
    throw CapacityError(g.name() + " has order " + std::to_string(g.order()) + ", above the enumeration limit of " +
                        std::to_string(limit));
}

Subgroup make_subgroup(std::size_t order, std::vector<Index> elements, std::vector<Index> generators) {
  Subgroup h;
  h.member.assign(order, false);
  for (auto x : elements) h.member[x] = true;
  std::sort(elements.begin(), elements.end());
  h.elements = std::move(elements);
  h.generators = std::move(generators);
  return h;
}

}  // namespace

Subgroup subgroup_closure(const FiniteGroup& g, std::span<const Index> generators) {
  std::vector<bool> seen(g.order(), false);
  std::vector<Index> elements{FiniteGroup::identity()};
  seen[FiniteGroup::identity()] = true;
  std::vector<Index> gens;
  for (auto s : generators)
    if (s != FiniteGroup::identity()) gens.push_back(s);
  for (std::size_t head = 0; head < elements.size(); ++head) {
    const Index x = elements[head];
    for (auto s : gens) {
      const Index y = g.multiply(x, s);
      if (!seen[y]) {
        seen[y] = true;
        elements.push_back(y);
      }
    }
  }
  return make_subgroup(g.order(), std::move(elements), std::move(gens));
}

Subgroup normal_closure(const FiniteGroup& g, std::span<const Index> seeds, std::span<const Index> group_generators) {
  std::vector<Index> gens;
  for (auto s : seeds)
    if (s != FiniteGroup::identity()) gens.push_back(s);
  Subgroup h = subgroup_closure(g, gens);
  for (std::size_t k = 0; k < gens.size(); ++k) {
    for (auto y : group_generators) {
      const Index c = g.conjugate(gens[k], y);
      if (!h.contains(c)) {
        gens.push_back(c);
        h = subgroup_closure(g, gens);
      }
    }
  }
  h.generators = generating_set(g, h.generators);
  return h;
}

std::vector<Index> generating_set(const FiniteGroup& g, std::span<const Index> elements) {
  std::vector<Index> gens;
  Subgroup h = subgroup_closure(g, gens);
  for (auto x : elements) {
    if (h.contains(x)) continue;
    gens.push_back(x);
    h = subgroup_closure(g, gens);
  }
  return gens;
}

bool is_normal(const FiniteGroup& g, const Subgroup& h, std::span<const Index> group_generators) {
  for (auto x : h.generators)
    for (auto y : group_generators)
      if (!h.contains(g.conjugate(x, y))) return false;
  return true;
}

ConjugacyClass conjugacy_class(const FiniteGroup& g, Index s, std::size_t limit) {
  require_enumerable(g, limit);
  std::vector<bool> seen(g.order(), false);
  std::vector<Index> members;
  for (std::size_t x = 0; x < g.order(); ++x) {
    const Index c = g.conjugate(s, static_cast<Index>(x));
    if (!seen[c]) {
      seen[c] = true;
      members.push_back(c);
    }
  }
  std::sort(members.begin(), members.end());
  return {members.front(), std::move(members)};
}

std::vector<ConjugacyClass> conjugacy_classes(const FiniteGroup& g, std::size_t limit) {
  require_enumerable(g, limit);
  std::vector<bool> covered(g.order(), false);
  std::vector<ConjugacyClass> out;
  for (std::size_t x = 0; x < g.order(); ++x) {
    if (covered[x]) continue;
    auto cls = conjugacy_class(g, static_cast<Index>(x), limit);
    for (auto m : cls.members) covered[m] = true;
    out.push_back(std::move(cls));
  }
  return out;
}

// --------------------------------------------------------- LowerCentralSeries

LowerCentralSeries LowerCentralSeries::compute(GroupPtr g, std::size_t limit) {
  if (!g) throw DomainError("null group");
  require_enumerable(*g, limit);
  const FiniteGroup& grp = *g;
  LowerCentralSeries s;
  s.group_ = g;

  std::vector<Index> all(grp.order());
  for (std::size_t x = 0; x < all.size(); ++x) all[x] = static_cast<Index>(x);
  const std::vector<Index> group_gens = generating_set(grp, all);
  s.terms_.push_back(make_subgroup(grp.order(), all, group_gens));

  while (s.terms_.back().size() > 1) {
    const Subgroup& current = s.terms_.back();
    // [G_k, G] is the normal closure of commutators of generators.
    std::vector<Index> seeds;
    for (auto x : current.generators)
      for (auto y : group_gens) seeds.push_back(grp.commutator(x, y));
    Subgroup next = normal_closure(grp, seeds, group_gens);
    if (!is_normal(grp, next, group_gens))
      throw Error("internal: commutator subgroup failed the normality check");
    if (next.size() == current.size())
      throw NotNilpotentError(grp.name() + " is not nilpotent: lower central series stabilizes at a subgroup of order " +
                              std::to_string(next.size()));
    s.terms_.push_back(std::move(next));
  }

  const std::size_t L = s.terms_.size() - 1;
  s.reps_.resize(L);
  s.coset_of_.resize(L);
  constexpr Index kNone = static_cast<Index>(-1);
  for (std::size_t l = 1; l <= L; ++l) {
    const Subgroup& upper = s.terms_[l - 1];
    const Subgroup& lower = s.terms_[l];
    auto& coset = s.coset_of_[l - 1];
    auto& reps = s.reps_[l - 1];
    coset.assign(grp.order(), kNone);
    for (auto x : upper.elements) {
      if (coset[x] != kNone) continue;
      const Index id = static_cast<Index>(reps.size());
      reps.push_back(x);
      for (auto h : lower.elements) coset[grp.multiply(h, x)] = id;
    }
  }
  return s;
}

const Subgroup& LowerCentralSeries::term(std::size_t k) const {
  if (k < 1 || k > terms_.size())
    throw DomainError("series term " + std::to_string(k) + " outside [1, " + std::to_string(terms_.size()) + "]");
  return terms_[k - 1];
}

std::span<const Index> LowerCentralSeries::representatives(std::size_t l) const {
  if (l < 1 || l > reps_.size())
    throw DomainError("representative level " + std::to_string(l) + " outside [1, " + std::to_string(reps_.size()) +
                      "]");
  return reps_[l - 1];
}

Index LowerCentralSeries::coset_index(std::size_t l, Index x) const {
  representatives(l);
  const Index c = coset_of_[l - 1][x];
  if (c == static_cast<Index>(-1))
    throw DomainError("element " + group_->format(x) + " is not in G_" + std::to_string(l));
  return c;
}

bool LowerCentralSeries::same_coset(std::size_t l, Index a, Index b) const {
  return term(l + 1).contains(group_->multiply(a, group_->inverse(b)));
}

std::vector<Index> coset_representatives(const LowerCentralSeries& series, std::size_t l) {
  auto r = series.representatives(l);
  return {r.begin(), r.end()};
}

// ------------------------------------------------------------- QuotientGroup

QuotientGroup::QuotientGroup(GroupPtr parent, const Subgroup& normal) : parent_(std::move(parent)) {
  constexpr Index kNone = static_cast<Index>(-1);
  image_.assign(parent_->order(), kNone);
  for (std::size_t x = 0; x < parent_->order(); ++x) {
    if (image_[x] != kNone) continue;
    const Index id = static_cast<Index>(reps_.size());
    reps_.push_back(static_cast<Index>(x));
    for (auto h : normal.elements) image_[parent_->multiply(h, static_cast<Index>(x))] = id;
  }
}

Abelianization Abelianization::from_series(const LowerCentralSeries& series) {
  const Subgroup& g2 = series.nilpotency_class() >= 1 ? series.term(2) : series.term(1);
  auto q = std::make_shared<const QuotientGroup>(series.group_ptr(), g2);
  Abelianization ab;
  ab.image_.assign(q->images().begin(), q->images().end());
  ab.quotient_ = std::move(q);
  return ab;
}

Abelianization Abelianization::superdiagonal(std::shared_ptr<const EnumeratedUnitriangular> g) {
  auto q = std::make_shared<const CyclicProduct>(g->modulus().value(), g->dim() - 1);
  Abelianization ab;
  ab.image_.resize(g->order());
  for (std::size_t x = 0; x < g->order(); ++x)
    ab.image_[x] = q->encode(g->element(static_cast<Index>(x)).superdiagonal());
  ab.quotient_ = std::move(q);
  return ab;
}

// -------------------------------------------------------------- Decomposition

std::vector<Index> SupportDecomposition::representatives() const {
  std::vector<Index> out;
  for (const auto& c : classes) out.push_back(c.representative);
  return out;
}

bool generates(const FiniteGroup& g, std::span<const Index> s) { return subgroup_closure(g, s).size() == g.order(); }

bool generates_abelianization(const Abelianization& ab, std::span<const Index> s) {
  std::vector<Index> images;
  for (auto x : s) images.push_back(ab.image(x));
  return generates(*ab.quotient(), images);
}

namespace {

void validate_total(const std::vector<Weight>& weights) {
  double total = 0.0;
  for (const auto& w : weights) {
    if (!(w.value > 0.0)) throw DomainError("jump-law weights must be positive");
    total += w.value;
  }
  if (std::abs(total - 1.0) > 1e-12)
    throw DomainError("jump-law weights sum to " + std::to_string(total) + ", not 1");
}

bool weights_equal(const Weight& a, const Weight& b) {
  if (a.exact && b.exact) return *a.exact == *b.exact;
  return std::abs(a.value - b.value) <= 1e-12 * std::max(1.0, std::abs(a.value));
}

void check_irreducible(const FiniteGroup& g, const SupportDecomposition& d, const LowerCentralSeries* series) {
  auto reps = d.representatives();
  const bool full = generates(g, reps);
  if (series) {
    const bool ab = generates_abelianization(Abelianization::from_series(*series), reps);
    if (full != ab)
      throw Error("internal: generation of G and of G_ab disagree for " + g.name());
  }
  if (!full) throw ReducibleWalkError("reducible walk: support classes do not generate " + g.name());
}

SupportDecomposition finish(std::vector<DecomposedClass> classes) {
  SupportDecomposition d;
  d.classes = std::move(classes);
  std::sort(d.classes.begin(), d.classes.end(),
            [](const auto& a, const auto& b) { return a.representative < b.representative; });
  d.mu_star = d.classes.front().weight.value;
  for (const auto& c : d.classes) d.mu_star = std::min(d.mu_star, c.weight.value);
  return d;
}

}  // namespace

SupportDecomposition decompose_support(const FiniteGroup& g, std::span<const ElementWeight> law,
                                       const LowerCentralSeries* series, std::size_t limit) {
  require_enumerable(g, limit);
  if (law.empty()) throw DomainError("empty jump law");
  std::map<Index, Weight> mass;
  std::vector<Weight> raw;
  for (const auto& e : law) {
    if (e.element >= g.order()) throw DomainError("jump-law element out of range");
    raw.push_back(e.weight);
    auto [it, inserted] = mass.emplace(e.element, e.weight);
    if (!inserted) it->second = it->second + e.weight;
  }
  validate_total(raw);

  std::vector<bool> covered(g.order(), false);
  std::vector<DecomposedClass> classes;
  for (const auto& [x, w] : mass) {
    if (covered[x]) continue;
    auto cls = conjugacy_class(g, x, limit);
    Weight total{};
    total.exact = Rational(0);
    for (auto m : cls.members) {
      auto it = mass.find(m);
      if (it == mass.end() || !weights_equal(it->second, w))
        throw NotConjugacyInvariantError("jump law is not conjugacy-invariant: " + g.format(x) + " and its conjugate " +
                                         g.format(m) + " carry different weights");
      covered[m] = true;
      total = total + it->second;
    }
    classes.push_back({cls.representative, total, cls.members.size()});
  }
  auto d = finish(std::move(classes));
  check_irreducible(g, d, series);
  return d;
}

SupportDecomposition decompose_classes(const FiniteGroup& g, std::span<const ClassRecord> records,
                                       const LowerCentralSeries* series, std::size_t limit) {
  require_enumerable(g, limit);
  if (records.empty()) throw DomainError("empty jump law");
  std::vector<Weight> raw;
  std::map<Index, DecomposedClass> merged;
  for (const auto& r : records) {
    if (r.representative >= g.order()) throw DomainError("class representative out of range");
    raw.push_back(r.weight);
    auto cls = conjugacy_class(g, r.representative, limit);
    auto [it, inserted] = merged.emplace(cls.representative, DecomposedClass{cls.representative, r.weight, cls.members.size()});
    if (!inserted) it->second.weight = it->second.weight + r.weight;
  }
  validate_total(raw);
  std::vector<DecomposedClass> classes;
  for (auto& [rep, c] : merged) classes.push_back(c);
  auto d = finish(std::move(classes));
  check_irreducible(g, d, series);
  return d;
}

std::vector<ElementWeight> element_law(const FiniteGroup& g, const SupportDecomposition& d, std::size_t limit) {
  std::vector<ElementWeight> out;
  for (const auto& c : d.classes) {
    auto cls = conjugacy_class(g, c.representative, limit);
    const Weight each = c.weight.divided_by(cls.members.size());
    for (auto m : cls.members) out.push_back({m, each});
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.element < b.element; });
  return out;
}

std::optional<std::string> check_strong_centrality(const LowerCentralSeries& series, Rng& rng, std::size_t trials,
                                                   std::size_t exhaustive_limit) {
  const FiniteGroup& g = series.group();
  const std::size_t L = series.nilpotency_class();
  const bool exhaustive = g.order() <= exhaustive_limit;
  for (std::size_t i = 1; i <= L; ++i) {
    for (std::size_t j = 1; i + j <= L + 1; ++j) {
      const auto& gi = series.term(i).elements;
      const auto& gj = series.term(j).elements;
      const Subgroup& target = series.term(i + j);
      auto check = [&](Index x, Index y) -> std::optional<std::string> {
        if (target.contains(g.commutator(x, y))) return std::nullopt;
        return "[" + g.format(x) + "," + g.format(y) + "] not in G_" + std::to_string(i + j);
      };
      if (exhaustive) {
        for (auto x : gi)
          for (auto y : gj)
            if (auto f = check(x, y)) return f;
      } else {
        std::uniform_int_distribution<std::size_t> pi(0, gi.size() - 1), pj(0, gj.size() - 1);
        for (std::size_t t = 0; t < trials; ++t)
          if (auto f = check(gi[pi(rng)], gj[pj(rng)])) return f;
      }
    }
  }
  return std::nullopt;
}

}  // namespace nilwalk
