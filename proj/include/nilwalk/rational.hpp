#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace nilwalk {

/// Exact fraction with 64-bit numerator and positive denominator, always in
/// lowest terms. Arithmetic throws DomainError on overflow.
class Rational {
 public:
  constexpr Rational() = default;
  Rational(std::int64_t num, std::int64_t den = 1);

  std::int64_t num() const { return num_; }
  std::int64_t den() const { return den_; }
  double to_double() const { return static_cast<double>(num_) / static_cast<double>(den_); }
  std::string str() const;

  friend Rational operator+(const Rational& a, const Rational& b);
  friend Rational operator-(const Rational& a, const Rational& b);
  friend Rational operator*(const Rational& a, const Rational& b);
  friend Rational operator/(const Rational& a, const Rational& b);
  Rational& operator+=(const Rational& o) { return *this = *this + o; }

  friend bool operator==(const Rational& a, const Rational& b) = default;
  friend bool operator<(const Rational& a, const Rational& b);

 private:
  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
};

/// A probability weight. The exact part is kept while every input was
/// rational and no operation overflowed.
struct Weight {
  double value = 0.0;
  std::optional<Rational> exact;

  static Weight of(const Rational& r) { return {r.to_double(), r}; }
  static Weight of(double v) { return {v, std::nullopt}; }

  Weight operator+(const Weight& o) const;
  /// Division by a positive integer count (class size).
  Weight divided_by(std::uint64_t count) const;
};

/// Parses "num/den", an integer, or a decimal literal. Decimal literals with
/// at most 15 fractional digits are kept exact.
Weight parse_weight(std::string_view text);

}  // namespace nilwalk
