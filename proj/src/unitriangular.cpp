#include "nilwalk/unitriangular.hpp"

#include <limits>
#include <sstream>

#include "nilwalk/errors.hpp"

namespace nilwalk {

Modulus::Modulus(std::uint64_t p) : p_(p) {
  if (p < 2) throw DomainError("modulus must be >= 2, got " + std::to_string(p));
  if (p > std::numeric_limits<std::uint32_t>::max())
    throw DomainError("modulus must be < 2^32, got " + std::to_string(p));
}

UnitriangularMatrix::UnitriangularMatrix(std::size_t n, Modulus p)
    : n_(n), mod_(p), entries_(entry_count(n), 0) {
  if (n < 2) throw DomainError("matrix dimension must be >= 2, got " + std::to_string(n));
}

UnitriangularMatrix UnitriangularMatrix::from_entries(std::size_t n, Modulus p,
                                                      std::span<const std::int64_t> entries) {
  UnitriangularMatrix m(n, p);
  if (entries.size() != m.entries_.size())
    throw DomainError("expected " + std::to_string(m.entries_.size()) + " strict-upper entries for n=" +
                      std::to_string(n) + ", got " + std::to_string(entries.size()));
  for (std::size_t k = 0; k < entries.size(); ++k) m.entries_[k] = p.reduce(entries[k]);
  return m;
}

UnitriangularMatrix UnitriangularMatrix::unit(std::size_t n, Modulus p, std::size_t row, std::size_t col,
                                              std::int64_t c) {
  UnitriangularMatrix m(n, p);
  m.set(row, col, c);
  return m;
}

std::uint32_t UnitriangularMatrix::at(std::size_t row, std::size_t col) const {
  if (row >= n_ || col >= n_) throw DomainError("matrix index out of range");
  if (row == col) return 1;
  if (row > col) return 0;
  return entries_[offset(row, col)];
}

void UnitriangularMatrix::set(std::size_t row, std::size_t col, std::int64_t value) {
  if (row >= col || col >= n_) throw DomainError("only strictly upper entries are settable");
  entries_[offset(row, col)] = mod_.reduce(value);
}

bool UnitriangularMatrix::is_identity() const {
  for (auto e : entries_)
    if (e != 0) return false;
  return true;
}

std::vector<std::uint32_t> UnitriangularMatrix::superdiagonal() const {
  std::vector<std::uint32_t> out(n_ - 1);
  for (std::size_t i = 0; i + 1 < n_; ++i) out[i] = entries_[offset(i, i + 1)];
  return out;
}

std::string UnitriangularMatrix::str() const {
  std::ostringstream os;
  os << "[";
  for (std::size_t k = 0; k < entries_.size(); ++k) os << (k ? "," : "") << entries_[k];
  os << "]";
  return os.str();
}

namespace {

void require_same_group(const UnitriangularMatrix& x, const UnitriangularMatrix& y) {
  if (x.dim() != y.dim() || !(x.modulus() == y.modulus()))
    throw DomainError("elements of different groups: U_" + std::to_string(x.dim()) + "(" +
                      std::to_string(x.modulus().value()) + ") vs U_" + std::to_string(y.dim()) + "(" +
                      std::to_string(y.modulus().value()) + ")");
}

}  // namespace

UnitriangularMatrix multiply(const UnitriangularMatrix& x, const UnitriangularMatrix& y) {
  require_same_group(x, y);
  const std::size_t n = x.n_;
  const std::uint64_t p = x.mod_.value();
  UnitriangularMatrix z(n, x.mod_);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      std::uint64_t acc = std::uint64_t{x.entries_[x.offset(i, j)]} + y.entries_[y.offset(i, j)];
      for (std::size_t k = i + 1; k < j; ++k) {
        std::uint32_t a = x.entries_[x.offset(i, k)];
        if (a == 0) continue;
        acc += (std::uint64_t{a} * y.entries_[y.offset(k, j)]) % p;
      }
      z.entries_[z.offset(i, j)] = static_cast<std::uint32_t>(acc % p);
    }
  }
  return z;
}

UnitriangularMatrix inverse(const UnitriangularMatrix& x) {
  const std::size_t n = x.n_;
  const std::uint64_t p = x.mod_.value();
  UnitriangularMatrix y(n, x.mod_);
  // (xy)_{ij} = x_ij + y_ij + sum_{i<k<j} x_ik y_kj = 0, solved by increasing j - i.
  for (std::size_t gap = 1; gap < n; ++gap) {
    for (std::size_t i = 0; i + gap < n; ++i) {
      const std::size_t j = i + gap;
      std::uint64_t acc = x.entries_[x.offset(i, j)];
      for (std::size_t k = i + 1; k < j; ++k)
        acc += (std::uint64_t{x.entries_[x.offset(i, k)]} * y.entries_[y.offset(k, j)]) % p;
      y.entries_[y.offset(i, j)] = x.mod_.neg(static_cast<std::uint32_t>(acc % p));
    }
  }
  return y;
}

UnitriangularMatrix commutator(const UnitriangularMatrix& x, const UnitriangularMatrix& y) {
  require_same_group(x, y);
  return multiply(multiply(inverse(x), inverse(y)), multiply(x, y));
}

UnitriangularMatrix conjugate(const UnitriangularMatrix& s, const UnitriangularMatrix& u) {
  require_same_group(s, u);
  if (auto gen = as_superdiagonal_generator(s)) return RankOneConjugate(u, gen->index, gen->step).to_matrix();
  return multiply(multiply(inverse(u), s), u);
}

UnitriangularMatrix uniform_matrix(std::size_t n, Modulus p, Rng& rng) {
  UnitriangularMatrix m(n, p);
  std::uniform_int_distribution<std::uint64_t> dist(0, p.value() - 1);
  std::vector<std::int64_t> entries(UnitriangularMatrix::entry_count(n));
  for (auto& e : entries) e = static_cast<std::int64_t>(dist(rng));
  return UnitriangularMatrix::from_entries(n, p, entries);
}

RankOneConjugate::RankOneConjugate(const UnitriangularMatrix& u, std::size_t i, std::int64_t c)
    : n_(u.dim()), mod_(u.modulus()), i_(i), c_(u.modulus().reduce(c)) {
  if (i + 1 >= n_) throw DomainError("superdiagonal index out of range");
  const std::uint64_t p = mod_.value();
  // Column i of u^{-1}: solve u v = e_i upward from v_i = 1.
  column_.assign(i + 1, 0);
  column_[i] = 1;
  for (std::size_t k = i; k-- > 0;) {
    std::uint64_t acc = 0;
    for (std::size_t m = k + 1; m <= i; ++m)
      acc += (std::uint64_t{u.entries_[u.offset(k, m)]} * column_[m]) % p;
    column_[k] = mod_.neg(static_cast<std::uint32_t>(acc % p));
  }
  row_.assign(n_ - i - 1, 0);
  row_[0] = 1;
  for (std::size_t j = i + 2; j < n_; ++j) row_[j - i - 1] = u.entries_[u.offset(i + 1, j)];
}

UnitriangularMatrix RankOneConjugate::to_matrix() const {
  UnitriangularMatrix m(n_, mod_);
  for (std::size_t k = 0; k <= i_; ++k) {
    std::uint32_t ck = mod_.mul(c_, column_[k]);
    if (ck == 0) continue;
    for (std::size_t j = i_ + 1; j < n_; ++j) m.entries_[m.offset(k, j)] = mod_.mul(ck, row_[j - i_ - 1]);
  }
  return m;
}

void RankOneConjugate::apply_right(UnitriangularMatrix& x) const {
  if (x.n_ != n_ || !(x.mod_ == mod_)) throw DomainError("rank-one jump applied to a different group");
  const std::uint64_t p = mod_.value();
  // x (I + c v w^T) = x + c (x v) w^T; (x v) is supported on rows 0..i.
  for (std::size_t r = 0; r <= i_; ++r) {
    std::uint64_t acc = column_[r];  // x_rr = 1
    for (std::size_t k = r + 1; k <= i_; ++k)
      acc += (std::uint64_t{x.entries_[x.offset(r, k)]} * column_[k]) % p;
    const std::uint32_t coef = mod_.mul(c_, static_cast<std::uint32_t>(acc % p));
    if (coef == 0) continue;
    for (std::size_t j = i_ + 1; j < n_; ++j) {
      auto& e = x.entries_[x.offset(r, j)];
      e = mod_.add(e, mod_.mul(coef, row_[j - i_ - 1]));
    }
  }
}

std::optional<SuperdiagonalGenerator> as_superdiagonal_generator(const UnitriangularMatrix& x) {
  std::optional<SuperdiagonalGenerator> found;
  const std::size_t n = x.dim();
  for (std::size_t i = 0; i + 1 < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      std::uint32_t e = x.at(i, j);
      if (e == 0) continue;
      if (j != i + 1 || found) return std::nullopt;
      found = SuperdiagonalGenerator{i, e};
    }
  }
  return found;
}

}  // namespace nilwalk
