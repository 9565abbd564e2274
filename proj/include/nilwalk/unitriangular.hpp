#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nilwalk/random.hpp"

namespace nilwalk {

/// The ring Z_p for any integer 2 <= p < 2^32.
class Modulus {
 public:
  explicit Modulus(std::uint64_t p);

  std::uint64_t value() const { return p_; }

  std::uint32_t reduce(std::int64_t x) const {
    std::int64_t r = x % static_cast<std::int64_t>(p_);
    return static_cast<std::uint32_t>(r < 0 ? r + static_cast<std::int64_t>(p_) : r);
  }
  std::uint32_t add(std::uint32_t a, std::uint32_t b) const {
    std::uint64_t s = std::uint64_t{a} + b;
    return static_cast<std::uint32_t>(s >= p_ ? s - p_ : s);
  }
  std::uint32_t sub(std::uint32_t a, std::uint32_t b) const {
    return a >= b ? a - b : static_cast<std::uint32_t>(a + p_ - b);
  }
  std::uint32_t neg(std::uint32_t a) const { return a == 0 ? 0 : static_cast<std::uint32_t>(p_ - a); }
  std::uint32_t mul(std::uint32_t a, std::uint32_t b) const {
    return static_cast<std::uint32_t>((std::uint64_t{a} * b) % p_);
  }

  friend bool operator==(const Modulus&, const Modulus&) = default;

 private:
  std::uint64_t p_;
};

/// Element of U_n(p): unit diagonal, strictly upper entries in [0, p).
///
/// Entries are stored row-major over the strict upper triangle, i.e. in the
/// order (0,1), (0,2), ..., (0,n-1), (1,2), ... . Indices are 0-based
/// throughout; the 1-based generator E_{i,i+1} is `elementary(n, p, i-1, c)`.
/// Ordering is lexicographic on that entry vector.
class UnitriangularMatrix {
 public:
  /// Identity of U_n(p).
  UnitriangularMatrix(std::size_t n, Modulus p);

  /// Builds from a strict-upper entry list (length n(n-1)/2); values are reduced mod p.
  static UnitriangularMatrix from_entries(std::size_t n, Modulus p, std::span<const std::int64_t> entries);

  /// I + c * E_{row,col} for row < col.
  static UnitriangularMatrix unit(std::size_t n, Modulus p, std::size_t row, std::size_t col, std::int64_t c);

  /// I + c * E_{i,i+1}.
  static UnitriangularMatrix elementary(std::size_t n, Modulus p, std::size_t i, std::int64_t c) {
    return unit(n, p, i, i + 1, c);
  }

  std::size_t dim() const { return n_; }
  const Modulus& modulus() const { return mod_; }
  std::span<const std::uint32_t> entries() const { return entries_; }

  /// Entry (row, col) including the implicit diagonal and lower zeros.
  std::uint32_t at(std::size_t row, std::size_t col) const;
  void set(std::size_t row, std::size_t col, std::int64_t value);

  bool is_identity() const;
  /// (x_{0,1}, x_{1,2}, ..., x_{n-2,n-1}).
  std::vector<std::uint32_t> superdiagonal() const;
  std::string str() const;

  static std::size_t entry_count(std::size_t n) { return n * (n - 1) / 2; }
  std::size_t offset(std::size_t row, std::size_t col) const {
    return row * (2 * n_ - row - 1) / 2 + (col - row - 1);
  }

  friend bool operator==(const UnitriangularMatrix& a, const UnitriangularMatrix& b) {
    return a.n_ == b.n_ && a.mod_ == b.mod_ && a.entries_ == b.entries_;
  }
  friend std::strong_ordering operator<=>(const UnitriangularMatrix& a, const UnitriangularMatrix& b) {
    return a.entries_ <=> b.entries_;
  }

 private:
  friend UnitriangularMatrix multiply(const UnitriangularMatrix&, const UnitriangularMatrix&);
  friend UnitriangularMatrix inverse(const UnitriangularMatrix&);
  friend class RankOneConjugate;

  std::size_t n_;
  Modulus mod_;
  std::vector<std::uint32_t> entries_;
};

/// xy mod p. Throws DomainError when dimension or modulus differ.
UnitriangularMatrix multiply(const UnitriangularMatrix& x, const UnitriangularMatrix& y);
/// x^{-1} by back-substitution; exists for every integer p since the diagonal is 1.
UnitriangularMatrix inverse(const UnitriangularMatrix& x);
/// [x,y] = x^{-1} y^{-1} x y.
UnitriangularMatrix commutator(const UnitriangularMatrix& x, const UnitriangularMatrix& y);
/// u^{-1} s u. Uses the rank-one path when s is I + c E_{i,i+1}.
UnitriangularMatrix conjugate(const UnitriangularMatrix& s, const UnitriangularMatrix& u);

/// Each strict-upper entry i.i.d. uniform on [0, p): exactly uniform on U_n(p).
UnitriangularMatrix uniform_matrix(std::size_t n, Modulus p, Rng& rng);

/// u^{-1} (I + c E_{i,i+1}) u = I + c (u^{-1} e_i)(e_{i+1}^T u), held in factored
/// form so it can be applied to a state in O(n^2).
class RankOneConjugate {
 public:
  RankOneConjugate(const UnitriangularMatrix& u, std::size_t i, std::int64_t c);

  UnitriangularMatrix to_matrix() const;
  /// x <- x * (I + c v w^T).
  void apply_right(UnitriangularMatrix& x) const;

 private:
  std::size_t n_;
  Modulus mod_;
  std::size_t i_;
  std::uint32_t c_;
  std::vector<std::uint32_t> column_;  // (u^{-1})_{k,i} for k <= i
  std::vector<std::uint32_t> row_;     // u_{i+1,j} for j >= i+1
};

/// If x = I + c E_{i,i+1} with c != 0, returns {i, c}.
struct SuperdiagonalGenerator {
  std::size_t index;
  std::uint32_t step;
};
std::optional<SuperdiagonalGenerator> as_superdiagonal_generator(const UnitriangularMatrix& x);

}  // namespace nilwalk
