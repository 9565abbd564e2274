#include "nilwalk/rational.hpp"

#include <charconv>
#include <cstdlib>
#include <limits>
#include <numeric>

#include "nilwalk/errors.hpp"

namespace nilwalk {

namespace {

std::int64_t narrow(__int128 v) {
  if (v > std::numeric_limits<std::int64_t>::max() || v < -std::numeric_limits<std::int64_t>::max())
    throw DomainError("rational arithmetic overflow");
  return static_cast<std::int64_t>(v);
}

Rational make(__int128 num, __int128 den) {
  if (den == 0) throw DomainError("rational with zero denominator");
  if (den < 0) {
    num = -num;
    den = -den;
  }
  __int128 a = num < 0 ? -num : num;
  __int128 b = den;
  while (b != 0) {
    __int128 r = a % b;
    a = b;
    b = r;
  }
  if (a > 1) {
    num /= a;
    den /= a;
  }
  return Rational(narrow(num), narrow(den));
}

}  // namespace

Rational::Rational(std::int64_t num, std::int64_t den) {
  if (den == 0) throw DomainError("rational with zero denominator");
  if (den < 0) {
    num = -num;
    den = -den;
  }
  std::int64_t g = std::gcd(num, den);
  num_ = num / g;
  den_ = den / g;
}

std::string Rational::str() const {
  if (den_ == 1) return std::to_string(num_);
  return std::to_string(num_) + "/" + std::to_string(den_);
}

Rational operator+(const Rational& a, const Rational& b) {
  return make(static_cast<__int128>(a.num_) * b.den_ + static_cast<__int128>(b.num_) * a.den_,
              static_cast<__int128>(a.den_) * b.den_);
}

Rational operator-(const Rational& a, const Rational& b) {
  return make(static_cast<__int128>(a.num_) * b.den_ - static_cast<__int128>(b.num_) * a.den_,
              static_cast<__int128>(a.den_) * b.den_);
}

Rational operator*(const Rational& a, const Rational& b) {
  return make(static_cast<__int128>(a.num_) * b.num_, static_cast<__int128>(a.den_) * b.den_);
}

Rational operator/(const Rational& a, const Rational& b) {
  return make(static_cast<__int128>(a.num_) * b.den_, static_cast<__int128>(a.den_) * b.num_);
}

bool operator<(const Rational& a, const Rational& b) {
  return static_cast<__int128>(a.num_) * b.den_ < static_cast<__int128>(b.num_) * a.den_;
}

Weight Weight::operator+(const Weight& o) const {
  Weight out{value + o.value, std::nullopt};
  if (exact && o.exact) {
    try {
      out.exact = *exact + *o.exact;
      out.value = out.exact->to_double();
    } catch (const DomainError&) {
    }
  }
  return out;
}

Weight Weight::divided_by(std::uint64_t count) const {
  if (count == 0) throw DomainError("division of a weight by zero");
  Weight out{value / static_cast<double>(count), std::nullopt};
  if (exact && count <= static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max())) {
    try {
      out.exact = *exact / Rational(static_cast<std::int64_t>(count));
      out.value = out.exact->to_double();
    } catch (const DomainError&) {
    }
  }
  return out;
}

Weight parse_weight(std::string_view text) {
  auto trim = [](std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    return s;
  };
  text = trim(text);
  auto parse_int = [](std::string_view s, std::int64_t& out) {
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size() && !s.empty();
  };

  if (auto slash = text.find('/'); slash != std::string_view::npos) {
    std::int64_t num = 0;
    std::int64_t den = 0;
    if (!parse_int(trim(text.substr(0, slash)), num) || !parse_int(trim(text.substr(slash + 1)), den) ||
        den == 0)
      throw DomainError("malformed rational weight '" + std::string(text) + "'");
    return Weight::of(Rational(num, den));
  }

  std::int64_t whole = 0;
  if (parse_int(text, whole)) return Weight::of(Rational(whole));

  // Plain decimal: digits '.' digits, kept exact when short enough.
  auto dot = text.find('.');
  if (dot != std::string_view::npos && text.find_first_of("eE") == std::string_view::npos) {
    std::string_view int_part = text.substr(0, dot);
    std::string_view frac_part = text.substr(dot + 1);
    bool digits_only = !frac_part.empty() && frac_part.size() <= 15;
    for (char c : frac_part) digits_only = digits_only && c >= '0' && c <= '9';
    std::int64_t ip = 0;
    bool int_ok = int_part.empty() || parse_int(int_part, ip);
    if (digits_only && int_ok && ip >= 0 && (int_part.empty() || int_part.front() != '-')) {
      std::int64_t scale = 1;
      std::int64_t fp = 0;
      for (char c : frac_part) {
        scale *= 10;
        fp = fp * 10 + (c - '0');
      }
      try {
        return Weight::of(Rational(ip) + Rational(fp, scale));
      } catch (const DomainError&) {
      }
    }
  }

  std::string owned(text);
  char* end = nullptr;
  double v = std::strtod(owned.c_str(), &end);
  if (owned.empty() || end != owned.c_str() + owned.size())
    throw DomainError("malformed weight '" + owned + "'");
  return Weight::of(v);
}

}  // namespace nilwalk
