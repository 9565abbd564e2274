#include "nilwalk/finite_group.hpp"

#include <fstream>
#include <istream>
#include <limits>
#include <sstream>

#include "nilwalk/errors.hpp"

namespace nilwalk {

Index FiniteGroup::power(Index x, std::int64_t k) const {
  Index base = k < 0 ? inverse(x) : x;
  std::uint64_t e = k < 0 ? static_cast<std::uint64_t>(-(k + 1)) + 1 : static_cast<std::uint64_t>(k);
  Index acc = identity();
  while (e > 0) {
    if (e & 1) acc = multiply(acc, base);
    base = multiply(base, base);
    e >>= 1;
  }
  return acc;
}

// ---------------------------------------------------------------- SmallGroup

SmallGroup::SmallGroup(std::size_t m, std::vector<Index> table, std::string name)
    : m_(m), table_(std::move(table)), name_(std::move(name)) {
  if (m == 0) throw DomainError("group order must be >= 1");
  if (m > std::numeric_limits<Index>::max()) throw CapacityError("group order exceeds index range");
  if (table_.size() != m * m)
    throw DomainError("Cayley table has " + std::to_string(table_.size()) + " entries, expected " +
                      std::to_string(m * m));
  for (std::size_t k = 0; k < table_.size(); ++k)
    if (table_[k] >= m)
      throw DomainError("Cayley entry (" + std::to_string(k / m) + "," + std::to_string(k % m) +
                        ") = " + std::to_string(table_[k]) + " out of range");
  for (std::size_t i = 0; i < m; ++i) {
    if (table_[i] != i || table_[i * m] != i)
      throw DomainError("element 0 is not the identity (row/column " + std::to_string(i) + ")");
  }
  inverse_.assign(m, 0);
  for (std::size_t i = 0; i < m; ++i) {
    std::size_t found = m;
    for (std::size_t j = 0; j < m; ++j) {
      if (table_[i * m + j] == 0) {
        found = j;
        break;
      }
    }
    if (found == m || table_[found * m + i] != 0)
      throw DomainError("element " + std::to_string(i) + " has no two-sided inverse");
    inverse_[i] = static_cast<Index>(found);
  }
  auto check = [&](std::size_t a, std::size_t b, std::size_t c) {
    if (table_[table_[a * m + b] * m + c] != table_[a * m + table_[b * m + c]])
      throw DomainError("associativity fails at (" + std::to_string(a) + "," + std::to_string(b) + "," +
                        std::to_string(c) + ")");
  };
  if (m <= 64) {
    for (std::size_t a = 0; a < m; ++a)
      for (std::size_t b = 0; b < m; ++b)
        for (std::size_t c = 0; c < m; ++c) check(a, b, c);
  } else {
    Rng rng(0x5eedu);
    std::uniform_int_distribution<std::size_t> pick(0, m - 1);
    for (int t = 0; t < 10'000; ++t) check(pick(rng), pick(rng), pick(rng));
  }
}

SmallGroup SmallGroup::cyclic(std::size_t m) {
  std::vector<Index> table(m * m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) table[i * m + j] = static_cast<Index>((i + j) % m);
  return SmallGroup(m, std::move(table), "Z" + std::to_string(m));
}

namespace {

struct Token {
  std::string text;
  std::size_t column;
};

std::vector<Token> tokenize(const std::string& line) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    if (i >= line.size()) break;
    std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    out.push_back({line.substr(start, i - start), start + 1});
  }
  return out;
}

std::uint64_t parse_index(const Token& tok, std::size_t line) {
  std::uint64_t v = 0;
  if (tok.text.empty()) throw ParseError("empty token", line, tok.column);
  for (char c : tok.text) {
    if (c < '0' || c > '9') throw ParseError("expected a non-negative integer, got '" + tok.text + "'", line, tok.column);
    v = v * 10 + static_cast<std::uint64_t>(c - '0');
    if (v > std::numeric_limits<Index>::max()) throw ParseError("integer too large", line, tok.column);
  }
  return v;
}

}  // namespace

SmallGroup SmallGroup::parse(std::istream& in, std::string name) {
  std::string line;
  std::size_t line_no = 0;
  auto next_nonblank = [&](std::vector<Token>& toks) {
    while (std::getline(in, line)) {
      ++line_no;
      toks = tokenize(line);
      if (!toks.empty()) return true;
    }
    return false;
  };

  std::vector<Token> toks;
  if (!next_nonblank(toks)) throw ParseError("empty Cayley table file", 1, 1);
  if (toks.size() != 1) throw ParseError("first line must hold only the group order", line_no, toks[1].column);
  const std::size_t m = parse_index(toks[0], line_no);
  if (m == 0) throw ParseError("group order must be >= 1", line_no, toks[0].column);

  std::vector<Index> table;
  table.reserve(m * m);
  for (std::size_t row = 0; row < m; ++row) {
    if (!next_nonblank(toks))
      throw ParseError("expected " + std::to_string(m) + " table rows, found " + std::to_string(row), line_no + 1, 1);
    if (toks.size() != m)
      throw ParseError("row " + std::to_string(row) + " has " + std::to_string(toks.size()) + " entries, expected " +
                           std::to_string(m),
                       line_no, toks.size() > m ? toks[m].column : line.size() + 1);
    for (const auto& tok : toks) {
      auto v = parse_index(tok, line_no);
      if (v >= m) throw ParseError("index " + std::to_string(v) + " out of range [0," + std::to_string(m) + ")", line_no, tok.column);
      table.push_back(static_cast<Index>(v));
    }
  }
  if (next_nonblank(toks)) throw ParseError("trailing content after table", line_no, toks[0].column);
  try {
    return SmallGroup(m, std::move(table), std::move(name));
  } catch (const DomainError& e) {
    throw ParseError(std::string("not a group law: ") + e.what(), 0, 0);
  }
}

SmallGroup SmallGroup::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot open Cayley table file " + path.string());
  return parse(in, path.filename().string());
}

// ---------------------------------------------------- EnumeratedUnitriangular

namespace {

std::size_t checked_power(std::uint64_t base, std::size_t exp, std::size_t limit, const std::string& what) {
  std::size_t out = 1;
  for (std::size_t k = 0; k < exp; ++k) {
    if (out > limit / base)
      throw CapacityError(what + " exceeds the enumeration limit of " + std::to_string(limit) + " elements");
    out *= base;
  }
  if (out > limit)
    throw CapacityError(what + " exceeds the enumeration limit of " + std::to_string(limit) + " elements");
  return out;
}

}  // namespace

EnumeratedUnitriangular::EnumeratedUnitriangular(std::size_t n, Modulus p, std::size_t limit)
    : n_(n), mod_(p), order_(0) {
  if (n < 2) throw DomainError("matrix dimension must be >= 2");
  order_ = checked_power(p.value(), UnitriangularMatrix::entry_count(n), std::min<std::size_t>(limit, std::numeric_limits<Index>::max()), name());
}

std::string EnumeratedUnitriangular::name() const {
  return "U" + std::to_string(n_) + "(" + std::to_string(mod_.value()) + ")";
}

UnitriangularMatrix EnumeratedUnitriangular::element(Index a) const {
  const std::size_t count = UnitriangularMatrix::entry_count(n_);
  std::vector<std::int64_t> entries(count);
  std::uint64_t rest = a;
  for (std::size_t k = count; k-- > 0;) {
    entries[k] = static_cast<std::int64_t>(rest % mod_.value());
    rest /= mod_.value();
  }
  return UnitriangularMatrix::from_entries(n_, mod_, entries);
}

Index EnumeratedUnitriangular::index_of(const UnitriangularMatrix& x) const {
  if (x.dim() != n_ || !(x.modulus() == mod_)) throw DomainError("matrix does not belong to " + name());
  std::uint64_t idx = 0;
  for (auto e : x.entries()) idx = idx * mod_.value() + e;
  return static_cast<Index>(idx);
}

Index EnumeratedUnitriangular::multiply(Index a, Index b) const {
  return index_of(nilwalk::multiply(element(a), element(b)));
}

Index EnumeratedUnitriangular::inverse(Index a) const { return index_of(nilwalk::inverse(element(a))); }

// --------------------------------------------------------------- CyclicProduct

CyclicProduct::CyclicProduct(std::uint64_t p, std::size_t m, std::size_t limit) : p_(p), m_(m), order_(1) {
  if (p < 2) throw DomainError("modulus must be >= 2");
  order_ = checked_power(p, m, std::min<std::size_t>(limit, std::numeric_limits<Index>::max()), name());
}

std::string CyclicProduct::name() const { return "Z" + std::to_string(p_) + "^" + std::to_string(m_); }

Index CyclicProduct::encode(std::span<const std::uint32_t> coords) const {
  if (coords.size() != m_) throw DomainError("coordinate count mismatch for " + name());
  std::uint64_t idx = 0;
  for (auto c : coords) idx = idx * p_ + (c % p_);
  return static_cast<Index>(idx);
}

std::vector<std::uint32_t> CyclicProduct::decode(Index a) const {
  std::vector<std::uint32_t> out(m_);
  std::uint64_t rest = a;
  for (std::size_t k = m_; k-- > 0;) {
    out[k] = static_cast<std::uint32_t>(rest % p_);
    rest /= p_;
  }
  return out;
}

Index CyclicProduct::multiply(Index a, Index b) const {
  std::uint64_t out = 0;
  std::uint64_t scale = 1;
  for (std::size_t k = 0; k < m_; ++k) {
    out += ((a % p_ + b % p_) % p_) * scale;
    a = static_cast<Index>(a / p_);
    b = static_cast<Index>(b / p_);
    scale *= p_;
  }
  return static_cast<Index>(out);
}

Index CyclicProduct::inverse(Index a) const {
  std::uint64_t out = 0;
  std::uint64_t scale = 1;
  for (std::size_t k = 0; k < m_; ++k) {
    out += ((p_ - a % p_) % p_) * scale;
    a = static_cast<Index>(a / p_);
    scale *= p_;
  }
  return static_cast<Index>(out);
}

std::string CyclicProduct::format(Index a) const {
  std::ostringstream os;
  auto v = decode(a);
  os << "(";
  for (std::size_t k = 0; k < v.size(); ++k) os << (k ? "," : "") << v[k];
  os << ")";
  return os.str();
}

std::shared_ptr<const SmallGroup> tabulate(const FiniteGroup& g, std::size_t limit) {
  const std::size_t m = g.order();
  if (m > limit)
    throw CapacityError("cannot tabulate " + g.name() + ": order " + std::to_string(m) + " above limit " +
                        std::to_string(limit));
  std::vector<Index> table(m * m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j)
      table[i * m + j] = g.multiply(static_cast<Index>(i), static_cast<Index>(j));
  return std::make_shared<const SmallGroup>(m, std::move(table), g.name());
}

// ---------------------------------------------------------------- GroupElement

namespace {

void require_same_parent(const GroupElement& x, const GroupElement& y) {
  if (!x.group || x.group != y.group)
    throw DomainError("elements belong to different groups");
}

}  // namespace

GroupElement multiply(const GroupElement& x, const GroupElement& y) {
  require_same_parent(x, y);
  return {x.group, x.group->multiply(x.index, y.index)};
}

GroupElement inverse(const GroupElement& x) {
  if (!x.group) throw DomainError("element without parent group");
  return {x.group, x.group->inverse(x.index)};
}

GroupElement commutator(const GroupElement& x, const GroupElement& y) {
  require_same_parent(x, y);
  return {x.group, x.group->commutator(x.index, y.index)};
}

GroupElement conjugate(const GroupElement& s, const GroupElement& u) {
  require_same_parent(s, u);
  return {s.group, s.group->conjugate(s.index, u.index)};
}

Index uniform_element(const FiniteGroup& g, Rng& rng) {
  if (g.order() == 1) return FiniteGroup::identity();
  std::uniform_int_distribution<std::size_t> dist(0, g.order() - 1);
  return static_cast<Index>(dist(rng));
}

}  // namespace nilwalk
