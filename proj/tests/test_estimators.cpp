#include <gtest/gtest.h>

#include <cmath>
#include <memory>
#include <numeric>
#include <set>

#include "nilwalk/errors.hpp"
#include "nilwalk/estimators.hpp"
#include "nilwalk/exact.hpp"
#include "nilwalk/structure.hpp"
#include "nilwalk/walks.hpp"

using namespace nilwalk;

namespace {

LowerCentralSeries series_of(std::size_t n, std::uint64_t p) {
  return LowerCentralSeries::compute(std::make_shared<const EnumeratedUnitriangular>(n, Modulus(p)));
}

Index elementary(const LowerCentralSeries& s, std::size_t i, std::int64_t c) {
  const auto& g = dynamic_cast<const EnumeratedUnitriangular&>(s.group());
  return g.index_of(UnitriangularMatrix::elementary(g.dim(), g.modulus(), i, c));
}

double exact_l2_squared(std::size_t n, std::uint64_t p, double t) {
  const EnumeratedUnitriangular g(n, Modulus(p));
  const auto law = element_law(build_superclass_walk(n, p), g);
  const TransitionKernel k(g, law);
  const double d = l2_to_uniform(heat_kernel(k, t));
  return d * d;
}

// Span of integer vectors in Z_p^m, by closure under addition.
std::set<std::vector<std::uint32_t>> span_of(std::uint64_t p, std::size_t m,
                                             const std::vector<std::vector<std::uint32_t>>& gens) {
  std::set<std::vector<std::uint32_t>> out{std::vector<std::uint32_t>(m, 0)};
  bool grew = true;
  while (grew) {
    grew = false;
    for (auto v : std::vector<std::vector<std::uint32_t>>(out.begin(), out.end()))
      for (const auto& g : gens) {
        auto w = v;
        for (std::size_t i = 0; i < m; ++i) w[i] = static_cast<std::uint32_t>((w[i] + g[i]) % p);
        if (out.insert(w).second) grew = true;
      }
  }
  return out;
}

}  // namespace

// ------------------------------------------------------------ collision estimator

TEST(Collision, TimeZeroIsExact) {
  const auto e = collision_l2(build_superclass_walk(3, 3), 0.0, 1000, 1);
  EXPECT_EQ(e.estimate, 26.0);
  EXPECT_EQ(e.group_order, 27.0);
  EXPECT_EQ(e.std_error, 0.0);
}

TEST(Collision, MatchesExactL2OnU33) {
  const double exact = exact_l2_squared(3, 3, 1.0);
  const auto e = collision_l2(build_superclass_walk(3, 3), 1.0, 1'000'000, 42);
  EXPECT_LE(std::abs(e.estimate - exact), 3.0 * e.std_error) << e.estimate << " vs " << exact;
  EXPECT_GE(e.estimate, -1.0);
}

TEST(Collision, EquilibriumIsNearZero) {
  const auto e = collision_l2(build_superclass_walk(3, 3), 30.0, 100'000, 3);
  EXPECT_LE(std::abs(e.estimate), 3.0 * e.std_error + 1e-12);
}

TEST(Collision, UnbiasedOverIndependentRuns) {
  const double exact = exact_l2_squared(3, 3, 1.0);
  const auto jd = build_superclass_walk(3, 3);
  const int runs = 100;
  std::vector<double> values;
  for (int r = 0; r < runs; ++r) values.push_back(collision_l2(jd, 1.0, 20'000, 1000 + r).estimate);
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / runs;
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  const double sigma = std::sqrt(var / (runs - 1));
  EXPECT_LE(std::abs(mean - exact), 5.0 * sigma / std::sqrt(static_cast<double>(runs)));
}

TEST(Collision, IndependentOfBlockScheduling) {
  const auto jd = build_nestoridi_walk(4, 17);
  const auto a = collision_l2(jd, 3.0, 50'000, 9);
  const auto b = collision_l2(jd, 3.0, 50'000, 9);
  EXPECT_EQ(a.estimate, b.estimate);
  EXPECT_EQ(a.std_error, b.std_error);
}

// ------------------------------------------------------------ representative products

TEST(RepresentativeProducts, Examples) {
  for (auto [n, p, tuples] : {std::tuple{3, 3, 27}, {4, 2, 64}, {4, 3, 729}, {5, 2, 1024}}) {
    const auto s = series_of(n, p);
    const auto v = verify_lemma4(s);
    EXPECT_TRUE(v.pass) << v.failure;
    ASSERT_EQ(v.counts.size(), s.group().order());
    EXPECT_EQ(std::accumulate(v.counts.begin(), v.counts.end(), std::uint64_t{0}), static_cast<std::uint64_t>(tuples));
    for (auto c : v.counts) EXPECT_EQ(c, 1u);
  }
  const auto abelian = LowerCentralSeries::compute(std::make_shared<const SmallGroup>(SmallGroup::cyclic(10)));
  EXPECT_TRUE(verify_lemma4(abelian).pass);
  const auto j = verify_lemma4(series_of(3, 3)).to_json();
  for (const char* key : {"lemma", "group", "params", "pass", "counts_summary"}) EXPECT_TRUE(j.contains(key)) << key;
}

// ------------------------------------------------------------ commutator images and subgroup sums

TEST(CommutatorImages, Examples) {
  const auto s33 = series_of(3, 3);
  const auto v = verify_lemma5i(s33, elementary(s33, 0, 1), 2);
  EXPECT_TRUE(v.pass) << v.failure;
  ASSERT_EQ(v.counts.size(), 3u);
  for (auto c : v.counts) EXPECT_EQ(c, 3u);

  const Index corner = dynamic_cast<const EnumeratedUnitriangular&>(s33.group())
                           .index_of(UnitriangularMatrix::unit(3, Modulus(3), 0, 2, 1));
  const auto central = verify_lemma5i(s33, corner, 2);
  EXPECT_TRUE(central.pass);
  EXPECT_EQ(std::count_if(central.counts.begin(), central.counts.end(), [](auto c) { return c > 0; }), 1);

  const auto s42 = series_of(4, 2);
  for (std::size_t l : {2u, 3u}) {
    const auto w = verify_lemma5i(s42, elementary(s42, 1, 1), l);
    EXPECT_TRUE(w.pass) << "l=" << l << ": " << w.failure;
  }
  EXPECT_THROW(verify_lemma5i(s33, 1, 1), DomainError);
  EXPECT_THROW(verify_lemma5i(s33, 1, 3), DomainError);
}

TEST(CommutatorImages, EveryGeneratorAndLevel) {
  for (auto [n, p] : {std::pair{3, 3}, {4, 2}, {4, 3}, {3, 5}}) {
    const auto s = series_of(n, p);
    for (std::size_t i = 0; i + 1 < static_cast<std::size_t>(n); ++i)
      for (std::int64_t c = 1; c < p; ++c)
        for (std::size_t l = 2; l <= s.nilpotency_class(); ++l) {
          const auto v = verify_lemma5i(s, elementary(s, i, c), l);
          EXPECT_TRUE(v.pass) << "n=" << n << " p=" << p << " i=" << i << " c=" << c << " l=" << l;
          // Image size divides the quotient order.
          const auto image = std::count_if(v.counts.begin(), v.counts.end(), [](auto x) { return x > 0; });
          EXPECT_EQ((s.term(l).size() / s.term(l + 1).size()) % image, 0u);
        }
  }
}

TEST(SubgroupSums, ConvolutionMatchesSumsetOracle) {
  // <(1,0)> + <(0,2)> in Z_4^2: sumset {0,1,2,3} x {0,2}, 8 elements.
  const auto v = verify_lemma5ii(4, 2, {{{1, 0}}, {{0, 2}}});
  EXPECT_TRUE(v.pass) << v.failure;
  ASSERT_EQ(v.counts.size(), 16u);
  const auto span = span_of(4, 2, {{1, 0}, {0, 2}});
  EXPECT_EQ(span.size(), 8u);
  for (std::uint32_t a = 0; a < 4; ++a)
    for (std::uint32_t b = 0; b < 4; ++b)
      EXPECT_EQ(v.counts[a * 4 + b] > 0, span.count({a, b}) == 1) << a << "," << b;

  // Overlapping subgroups of Z_6: <2> + <3> = Z_6.
  const auto w = verify_lemma5ii(6, 1, {{{2}}, {{3}}});
  EXPECT_TRUE(w.pass);
  for (auto c : w.counts) EXPECT_GT(c, 0u);
}

TEST(SubgroupSums, SweepOverSmallCases) {
  const auto verdicts = verify_lemma5ii_sweep(7, 3, 20, 2024);
  EXPECT_EQ(verdicts.size(), 6u * 3u * 20u);
  for (const auto& v : verdicts) EXPECT_TRUE(v.pass) << v.params.dump() << ": " << v.failure;
}

// ------------------------------------------------------------ commutator bilinearity

TEST(CommutatorBilinearity, Examples) {
  Rng rng(12);
  const auto v33 = verify_prop3(series_of(3, 3), 0, rng);
  EXPECT_TRUE(v33.pass) << v33.failure;
  EXPECT_EQ(v33.params.value("mode", ""), "exhaustive");
  const auto abelian = LowerCentralSeries::compute(std::make_shared<const SmallGroup>(SmallGroup::cyclic(12)));
  EXPECT_TRUE(verify_prop3(abelian, 100, rng).pass);
  const auto v43 = verify_prop3(series_of(4, 3), 10'000, rng);
  EXPECT_TRUE(v43.pass) << v43.failure;
  EXPECT_EQ(v43.params.value("mode", ""), "random");
  EXPECT_TRUE(verify_prop3(series_of(4, 2), 0, rng).pass);
  EXPECT_TRUE(verify_prop3(series_of(5, 2), 2'000, rng).pass);
}
