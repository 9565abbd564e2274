#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "nilwalk/random.hpp"
#include "nilwalk/unitriangular.hpp"

namespace nilwalk {

using Index = std::uint32_t;

inline constexpr std::size_t kDefaultEnumerationLimit = 200'000;

/// A finite group whose elements are numbered 0..order()-1, with 0 the
/// identity. Index order is the element order used for every tie-break.
class FiniteGroup {
 public:
  virtual ~FiniteGroup() = default;

  virtual std::size_t order() const = 0;
  virtual Index multiply(Index a, Index b) const = 0;
  virtual Index inverse(Index a) const = 0;
  virtual std::string name() const = 0;
  virtual std::string format(Index a) const { return std::to_string(a); }

  static constexpr Index identity() { return 0; }

  /// [x,y] = x^{-1} y^{-1} x y.
  Index commutator(Index x, Index y) const {
    return multiply(multiply(inverse(x), inverse(y)), multiply(x, y));
  }
  /// u^{-1} s u.
  Index conjugate(Index s, Index u) const { return multiply(multiply(inverse(u), s), u); }
  /// x^k for any integer k.
  Index power(Index x, std::int64_t k) const;
};

using GroupPtr = std::shared_ptr<const FiniteGroup>;

/// Group given by an explicit Cayley table.
class SmallGroup final : public FiniteGroup {
 public:
  /// `table[i * m + j]` is the index of element_i * element_j. Identity,
  /// inverses and entry ranges are checked eagerly; associativity exhaustively
  /// for m <= 64 and on 10^4 random triples above.
  SmallGroup(std::size_t m, std::vector<Index> table, std::string name = "table");

  static SmallGroup cyclic(std::size_t m);
  /// Text format: line 1 = m, then m lines of m 0-based indices.
  static SmallGroup parse(std::istream& in, std::string name = "table");
  static SmallGroup load(const std::filesystem::path& path);

  std::size_t order() const override { return m_; }
  Index multiply(Index a, Index b) const override { return table_[std::size_t{a} * m_ + b]; }
  Index inverse(Index a) const override { return inverse_[a]; }
  std::string name() const override { return name_; }

  std::span<const Index> table() const { return table_; }

 private:
  std::size_t m_;
  std::vector<Index> table_;
  std::vector<Index> inverse_;
  std::string name_;
};

/// U_n(p) with every element numbered. The index is the base-p number whose
/// digits are the strict-upper entries (first entry most significant), so
/// index order coincides with the lexicographic matrix order.
class EnumeratedUnitriangular final : public FiniteGroup {
 public:
  /// Throws CapacityError when p^{n(n-1)/2} exceeds `limit`.
  EnumeratedUnitriangular(std::size_t n, Modulus p, std::size_t limit = kDefaultEnumerationLimit);

  std::size_t order() const override { return order_; }
  Index multiply(Index a, Index b) const override;
  Index inverse(Index a) const override;
  std::string name() const override;
  std::string format(Index a) const override { return element(a).str(); }

  std::size_t dim() const { return n_; }
  const Modulus& modulus() const { return mod_; }
  UnitriangularMatrix element(Index a) const;
  Index index_of(const UnitriangularMatrix& x) const;

 private:
  std::size_t n_;
  Modulus mod_;
  std::size_t order_;
};

/// Z_p^m with componentwise addition; index = base-p digits, first coordinate
/// most significant.
class CyclicProduct final : public FiniteGroup {
 public:
  CyclicProduct(std::uint64_t p, std::size_t m, std::size_t limit = kDefaultEnumerationLimit);

  std::size_t order() const override { return order_; }
  Index multiply(Index a, Index b) const override;
  Index inverse(Index a) const override;
  std::string name() const override;
  std::string format(Index a) const override;

  std::uint64_t modulus() const { return p_; }
  std::size_t rank() const { return m_; }
  Index encode(std::span<const std::uint32_t> coords) const;
  std::vector<std::uint32_t> decode(Index a) const;

 private:
  std::uint64_t p_;
  std::size_t m_;
  std::size_t order_;
};

/// Materializes the Cayley table of `g` (order at most `limit`).
std::shared_ptr<const SmallGroup> tabulate(const FiniteGroup& g, std::size_t limit = 4096);

/// An index tagged with its parent group. Binary operations require both
/// operands to share the parent and throw DomainError otherwise.
struct GroupElement {
  GroupPtr group;
  Index index = 0;

  friend bool operator==(const GroupElement& a, const GroupElement& b) {
    return a.group == b.group && a.index == b.index;
  }
};

GroupElement multiply(const GroupElement& x, const GroupElement& y);
GroupElement inverse(const GroupElement& x);
GroupElement commutator(const GroupElement& x, const GroupElement& y);
GroupElement conjugate(const GroupElement& s, const GroupElement& u);

Index uniform_element(const FiniteGroup& g, Rng& rng);

}  // namespace nilwalk
