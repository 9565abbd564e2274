#pragma once

// Independent oracles and hand-rolled generators shared by the test binaries.
// Nothing here calls the library's arithmetic: matrices are dense n x n arrays,
// kernels are dense, and exponentials use scaling and squaring.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

namespace oracle {

inline double chi2_quantile(double dof, double level) {
  return boost::math::quantile(boost::math::chi_squared(dof), level);
}

using Dense = std::vector<std::vector<double>>;
using IntMatrix = std::vector<std::vector<std::int64_t>>;

// ------------------------------------------------------------ U_n(p) by hand

inline IntMatrix identity(std::size_t n) {
  IntMatrix m(n, std::vector<std::int64_t>(n, 0));
  for (std::size_t i = 0; i < n; ++i) m[i][i] = 1;
  return m;
}

inline IntMatrix mat_mul(const IntMatrix& a, const IntMatrix& b, std::int64_t p) {
  const std::size_t n = a.size();
  IntMatrix c(n, std::vector<std::int64_t>(n, 0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t j = 0; j < n; ++j) c[i][j] = (c[i][j] + a[i][k] * b[k][j]) % p;
  return c;
}

// Strict-upper entries, row-major: (0,1), (0,2), ..., (1,2), ...
inline std::vector<std::int64_t> entries_of(const IntMatrix& m) {
  std::vector<std::int64_t> out;
  for (std::size_t i = 0; i < m.size(); ++i)
    for (std::size_t j = i + 1; j < m.size(); ++j) out.push_back(m[i][j]);
  return out;
}

inline IntMatrix from_entries(std::size_t n, const std::vector<std::int64_t>& e) {
  IntMatrix m = identity(n);
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) m[i][j] = e[k++];
  return m;
}

// Base-p number with the first entry most significant.
inline std::uint64_t index_of(const IntMatrix& m, std::int64_t p) {
  std::uint64_t idx = 0;
  for (auto e : entries_of(m)) idx = idx * static_cast<std::uint64_t>(p) + static_cast<std::uint64_t>(e);
  return idx;
}

inline IntMatrix element(std::size_t n, std::int64_t p, std::uint64_t idx) {
  const std::size_t d = n * (n - 1) / 2;
  std::vector<std::int64_t> e(d);
  for (std::size_t k = d; k-- > 0;) {
    e[k] = static_cast<std::int64_t>(idx % static_cast<std::uint64_t>(p));
    idx /= static_cast<std::uint64_t>(p);
  }
  return from_entries(n, e);
}

inline std::uint64_t group_order(std::size_t n, std::int64_t p) {
  std::uint64_t m = 1;
  for (std::size_t k = 0; k < n * (n - 1) / 2; ++k) m *= static_cast<std::uint64_t>(p);
  return m;
}

// Inverse by brute search over the group (tiny groups only).
inline IntMatrix brute_inverse(const IntMatrix& a, std::int64_t p) {
  const std::size_t n = a.size();
  for (std::uint64_t k = 0; k < group_order(n, p); ++k) {
    auto b = element(n, p, k);
    if (mat_mul(a, b, p) == identity(n)) return b;
  }
  return {};
}

// Inverse via the finite sum I - N + N^2 - ..., N = A - I nilpotent.
inline IntMatrix series_inverse(const IntMatrix& a, std::int64_t p) {
  const std::size_t n = a.size();
  IntMatrix nil = a;
  for (std::size_t i = 0; i < n; ++i) nil[i][i] = 0;
  IntMatrix out = identity(n), power = identity(n);
  for (std::size_t k = 1; k < n; ++k) {
    power = mat_mul(power, nil, p);
    const std::int64_t sign = (k % 2 == 1) ? p - 1 : 1;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) out[i][j] = (out[i][j] + sign * power[i][j]) % p;
  }
  return out;
}

// Element-level law of walk (a) on U_n(p): weight 1/(2(n-1)) on each class of
// I +- E_{i,i+1}, split evenly over its members (classes found by brute force).
inline std::map<std::uint64_t, double> superclass_law(std::size_t n, std::int64_t p, bool walk_b = false,
                                                      std::int64_t magnitude = 0) {
  std::vector<std::int64_t> steps{1, p - 1};
  if (walk_b) {
    steps.push_back(magnitude % p);
    steps.push_back((p - magnitude % p) % p);
  }
  const double per_step = 1.0 / (static_cast<double>(steps.size()) * static_cast<double>(n - 1));
  std::map<std::uint64_t, double> law;
  const std::uint64_t m = group_order(n, p);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    for (auto c : steps) {
      IntMatrix s = identity(n);
      s[i][i + 1] = c;
      std::set<std::uint64_t> cls;
      for (std::uint64_t k = 0; k < m; ++k) {
        auto u = element(n, p, k);
        cls.insert(index_of(mat_mul(mat_mul(series_inverse(u, p), s, p), u, p), p));
      }
      for (auto x : cls) law[x] += per_step / static_cast<double>(cls.size());
    }
  }
  return law;
}

// ------------------------------------------------------------ dense kernels

inline Dense dense_mul(const Dense& a, const Dense& b) {
  const std::size_t n = a.size();
  Dense c(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < n; ++k) {
      const double v = a[i][k];
      if (v == 0.0) continue;
      for (std::size_t j = 0; j < n; ++j) c[i][j] += v * b[k][j];
    }
  return c;
}

// exp(t (P - I)) by scaling and squaring of a Taylor series.
inline Dense expm_generator(const Dense& P, double t) {
  const std::size_t n = P.size();
  Dense q(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) q[i][j] = t * (P[i][j] - (i == j ? 1.0 : 0.0));
  int squarings = 0;
  double norm = 2.0 * t;
  while (norm > 0.25) {
    norm /= 2.0;
    ++squarings;
  }
  const double scale = std::ldexp(1.0, -squarings);
  for (auto& row : q)
    for (auto& v : row) v *= scale;
  Dense result(n, std::vector<double>(n, 0.0)), term(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) result[i][i] = term[i][i] = 1.0;
  for (int k = 1; k <= 24; ++k) {
    term = dense_mul(term, q);
    for (auto& row : term)
      for (auto& v : row) v /= k;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) result[i][j] += term[i][j];
  }
  for (int s = 0; s < squarings; ++s) result = dense_mul(result, result);
  return result;
}

// P(x, x g) = mu(g) for a group given by a multiplication callback.
template <class Mul>
Dense dense_kernel(std::size_t m, const std::map<std::uint64_t, double>& law, Mul mul) {
  Dense P(m, std::vector<double>(m, 0.0));
  for (std::size_t x = 0; x < m; ++x)
    for (const auto& [g, w] : law) P[x][mul(x, g)] += w;
  return P;
}

inline double tv_uniform(const std::vector<double>& d) {
  const double u = 1.0 / static_cast<double>(d.size());
  double s = 0.0;
  for (double x : d) s += std::abs(x - u);
  return 0.5 * s;
}

inline double l2_uniform(const std::vector<double>& d) {
  const double m = static_cast<double>(d.size());
  double s = 0.0;
  for (double x : d) s += (m * x - 1.0) * (m * x - 1.0);
  return std::sqrt(s / m);
}

// Continuous-time law on Z_p at time s of the walk with step law `steps`.
inline std::vector<double> cycle_heat(std::size_t p, const std::map<std::size_t, double>& steps, double s) {
  Dense P(p, std::vector<double>(p, 0.0));
  for (std::size_t x = 0; x < p; ++x)
    for (const auto& [c, w] : steps) P[x][(x + c) % p] += w;
  return expm_generator(P, s)[0];
}

// TV between the product law q^{(m)} on Z_p^m and uniform, summed over all p^m states.
inline double brute_product_tv(const std::vector<double>& q, std::size_t m) {
  const std::size_t p = q.size();
  std::size_t states = 1;
  for (std::size_t k = 0; k < m; ++k) states *= p;
  const double u = 1.0 / static_cast<double>(states);
  double s = 0.0;
  for (std::size_t x = 0; x < states; ++x) {
    double prob = 1.0;
    std::size_t r = x;
    for (std::size_t k = 0; k < m; ++k) {
      prob *= q[r % p];
      r /= p;
    }
    s += std::abs(prob - u);
  }
  return 0.5 * s;
}

// ------------------------------------------------------------ generators

// Small random distribution on m states with occasional zeros.
inline std::vector<double> random_distribution(std::size_t m, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> d(m);
  double s = 0.0;
  for (auto& x : d) {
    x = u(rng) < 0.2 ? 0.0 : u(rng);
    s += x;
  }
  if (s == 0.0) {
    d[0] = 1.0;
    s = 1.0;
  }
  for (auto& x : d) x /= s;
  return d;
}

}  // namespace oracle
