#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nilwalk/finite_group.hpp"
#include "nilwalk/rational.hpp"

namespace nilwalk {

/// Subgroup of an enumerated group as a sorted element list plus membership mask.
struct Subgroup {
  std::vector<Index> elements;
  std::vector<Index> generators;
  std::vector<bool> member;

  std::size_t size() const { return elements.size(); }
  bool contains(Index x) const { return member[x]; }
};

/// <generators>, by breadth-first right multiplication until stable.
Subgroup subgroup_closure(const FiniteGroup& g, std::span<const Index> generators);

/// Smallest normal subgroup of g containing `seeds`; `group_generators` must generate g.
Subgroup normal_closure(const FiniteGroup& g, std::span<const Index> seeds, std::span<const Index> group_generators);

/// Greedy generating set: scans `elements` in order, keeping those not yet generated.
std::vector<Index> generating_set(const FiniteGroup& g, std::span<const Index> elements);

bool is_normal(const FiniteGroup& g, const Subgroup& h, std::span<const Index> group_generators);

struct ConjugacyClass {
  Index representative;         // least member
  std::vector<Index> members;   // sorted
};

/// {x^{-1} s x : x in G}. Throws CapacityError above `limit`.
ConjugacyClass conjugacy_class(const FiniteGroup& g, Index s, std::size_t limit = kDefaultEnumerationLimit);
/// All classes, ordered by representative.
std::vector<ConjugacyClass> conjugacy_classes(const FiniteGroup& g, std::size_t limit = kDefaultEnumerationLimit);

/// G = G_1 > G_2 > ... > G_{L+1} = {id} with G_{k+1} = [G_k, G], together with
/// least-element coset representatives R_l of G_l / G_{l+1}.
class LowerCentralSeries {
 public:
  /// Throws NotNilpotentError when the series stabilizes above {id}.
  static LowerCentralSeries compute(GroupPtr g, std::size_t limit = kDefaultEnumerationLimit);

  const FiniteGroup& group() const { return *group_; }
  const GroupPtr& group_ptr() const { return group_; }

  /// L.
  std::size_t nilpotency_class() const { return terms_.size() - 1; }
  /// G_k for 1 <= k <= L+1.
  const Subgroup& term(std::size_t k) const;
  std::span<const Index> group_generators() const { return terms_.front().generators; }

  /// R_l for 1 <= l <= L.
  std::span<const Index> representatives(std::size_t l) const;
  /// Position in R_l of the coset G_{l+1} x, for x in G_l.
  Index coset_index(std::size_t l, Index x) const;
  /// G_{l+1} a == G_{l+1} b.
  bool same_coset(std::size_t l, Index a, Index b) const;

 private:
  GroupPtr group_;
  std::vector<Subgroup> terms_;
  std::vector<std::vector<Index>> reps_;
  std::vector<std::vector<Index>> coset_of_;
};

/// R_l as a fresh list. Throws DomainError when l is outside [1, L].
std::vector<Index> coset_representatives(const LowerCentralSeries& series, std::size_t l);

/// G / N for a normal subgroup N; coset k is the one with the k-th smallest least element.
class QuotientGroup final : public FiniteGroup {
 public:
  QuotientGroup(GroupPtr parent, const Subgroup& normal);

  std::size_t order() const override { return reps_.size(); }
  Index multiply(Index a, Index b) const override { return image_[parent_->multiply(reps_[a], reps_[b])]; }
  Index inverse(Index a) const override { return image_[parent_->inverse(reps_[a])]; }
  std::string name() const override { return parent_->name() + "/N"; }
  std::string format(Index a) const override { return "N" + parent_->format(reps_[a]); }

  Index image(Index x) const { return image_[x]; }
  std::span<const Index> images() const { return image_; }
  std::span<const Index> representatives() const { return reps_; }

 private:
  GroupPtr parent_;
  std::vector<Index> reps_;
  std::vector<Index> image_;
};

/// The map G -> G_ab = G / G_2 on an enumerated group.
class Abelianization {
 public:
  /// Coset map onto G / G_2 from the computed series.
  static Abelianization from_series(const LowerCentralSeries& series);
  /// Superdiagonal map U_n(p) -> Z_p^{n-1}.
  static Abelianization superdiagonal(std::shared_ptr<const EnumeratedUnitriangular> g);

  const GroupPtr& quotient() const { return quotient_; }
  Index image(Index x) const { return image_[x]; }
  std::span<const Index> images() const { return image_; }

 private:
  GroupPtr quotient_;
  std::vector<Index> image_;
};

/// Superdiagonal (x_{0,1}, ..., x_{n-2,n-1}) of a U_n(p) element.
inline std::vector<std::uint32_t> abelianize(const UnitriangularMatrix& x) { return x.superdiagonal(); }

struct ElementWeight {
  Index element;
  Weight weight;
};

struct ClassRecord {
  Index representative;
  Weight weight;  // mu(Cl(representative))
};

struct DecomposedClass {
  Index representative;
  Weight weight;
  std::size_t size;
};

/// supp(mu) = disjoint union of Cl(s_a), a in [k].
struct SupportDecomposition {
  std::vector<DecomposedClass> classes;
  double mu_star = 0.0;

  std::size_t k() const { return classes.size(); }
  std::vector<Index> representatives() const;
};

/// From an element-level law. Checks class-constancy and irreducibility
/// (<S> = G, and G_2 S generating G_ab when a series is supplied).
SupportDecomposition decompose_support(const FiniteGroup& g, std::span<const ElementWeight> law,
                                       const LowerCentralSeries* series = nullptr,
                                       std::size_t limit = kDefaultEnumerationLimit);

/// From class-level records; records naming the same class are merged.
SupportDecomposition decompose_classes(const FiniteGroup& g, std::span<const ClassRecord> records,
                                       const LowerCentralSeries* series = nullptr,
                                       std::size_t limit = kDefaultEnumerationLimit);

/// Expands a decomposition to element weights mu(x) = mu(Cl) / |Cl|.
std::vector<ElementWeight> element_law(const FiniteGroup& g, const SupportDecomposition& d,
                                       std::size_t limit = kDefaultEnumerationLimit);

bool generates(const FiniteGroup& g, std::span<const Index> s);
/// Whether the images G_2 s generate G_ab.
bool generates_abelianization(const Abelianization& ab, std::span<const Index> s);

/// Failure description, or nullopt when [x,y] lies in G_{i+j} for every checked
/// x in G_i, y in G_j. Exhaustive when |G| <= exhaustive_limit, else `trials`
/// random pairs per (i,j).
std::optional<std::string> check_strong_centrality(const LowerCentralSeries& series, Rng& rng,
                                                   std::size_t trials = 10'000,
                                                   std::size_t exhaustive_limit = 256);

}  // namespace nilwalk
