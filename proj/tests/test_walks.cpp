#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <memory>
#include <sstream>

#include "nilwalk/errors.hpp"
#include "nilwalk/exact.hpp"
#include "nilwalk/walks.hpp"
#include "support.hpp"

using namespace nilwalk;

namespace {

std::uint64_t isqrt(std::uint64_t v) {
  std::uint64_t r = 0;
  while ((r + 1) * (r + 1) <= v) ++r;
  return r;
}

}  // namespace

// ------------------------------------------------------------ builders

TEST(Builders, SuperclassWalkExamples) {
  const auto a35 = build_superclass_walk(3, 5);
  EXPECT_EQ(a35.k(), 4u);
  EXPECT_DOUBLE_EQ(a35.mu_star(), 0.25);
  for (const auto& c : a35.classes()) {
    EXPECT_EQ(*c.weight.exact, Rational(1, 4));
    EXPECT_EQ(c.size, std::optional<std::uint64_t>(5));
  }
  EXPECT_TRUE(a35.superdiagonal_form());
  EXPECT_DOUBLE_EQ(a35.group_order(), 125.0);

  const auto a32 = build_superclass_walk(3, 2);
  EXPECT_EQ(a32.k(), 2u);
  for (const auto& c : a32.classes()) EXPECT_EQ(*c.weight.exact, Rational(1, 2));

  const auto a27 = build_superclass_walk(2, 7);
  EXPECT_EQ(a27.k(), 2u);
  const auto spec = project_walk(a27);
  EXPECT_EQ(spec.coordinates, 1u);
  EXPECT_EQ(spec.steps.support(), (std::vector<std::uint32_t>{1, 6}));

  EXPECT_THROW(build_superclass_walk(1, 5), DomainError);
  EXPECT_THROW(build_superclass_walk(3, 1), DomainError);
}

TEST(Builders, SuperclassWalkFlagsSmallModulus) {
  EXPECT_TRUE(build_superclass_walk(4, 5).has_flag("p_below_6"));
  EXPECT_FALSE(build_superclass_walk(4, 6).has_flag("p_below_6"));
}

TEST(Builders, NestoridiParamsExamples) {
  const auto p17 = nestoridi_params(17);
  EXPECT_EQ(p17.a, 5u);
  EXPECT_EQ(p17.b, 2u);
  EXPECT_FALSE(p17.degenerate);
  const auto p26 = nestoridi_params(26);
  EXPECT_EQ(p26.a, 5u);
  EXPECT_EQ(p26.b, 2u);
  const auto p7 = nestoridi_params(7);
  EXPECT_EQ(p7.a, 3u);
  EXPECT_EQ(p7.b, 1u);
  EXPECT_TRUE(p7.degenerate);
  const auto over = nestoridi_params(17, 5);
  EXPECT_EQ(over.magnitude, 5u);
  EXPECT_EQ(over.b, 2u);
}

TEST(Builders, NestoridiParamsInvariantsOverRange) {
  for (std::uint64_t p = 2; p < 5000; ++p) {
    const auto q = nestoridi_params(p);
    const auto r = isqrt(p);
    EXPECT_EQ(q.a, r + (r % 2 == 0 ? 1 : 0)) << p;
    EXPECT_EQ(q.a % 2, 1u) << p;
    EXPECT_EQ(q.b, isqrt(q.a)) << p;
    EXPECT_GE(q.b, 1u);
    EXPECT_LE(q.b, q.a);
    const bool degenerate = q.b <= 1 || q.b % p == 1 || q.b % p == p - 1;
    EXPECT_EQ(q.degenerate, degenerate) << p;
  }
}

TEST(Builders, NestoridiWalkWeightsAndMerging) {
  const auto b17 = build_nestoridi_walk(4, 17);
  EXPECT_EQ(b17.k(), 12u);
  for (const auto& c : b17.classes()) EXPECT_EQ(*c.weight.exact, Rational(1, 12));
  EXPECT_FALSE(b17.has_flag("degenerate_b"));

  const auto b7 = build_nestoridi_walk(4, 7);
  EXPECT_EQ(b7.k(), 6u);
  for (const auto& c : b7.classes()) EXPECT_EQ(*c.weight.exact, Rational(1, 6));
  EXPECT_TRUE(b7.has_flag("degenerate_b"));

  EXPECT_THROW(build_nestoridi_walk(3, 17, 17), DomainError);
  EXPECT_THROW(build_nestoridi_walk(1, 17), DomainError);
}

TEST(Builders, ClassSizeClosedForm) {
  EXPECT_EQ(superdiagonal_class_size(4, 4, 2), std::optional<std::uint64_t>(4));
  EXPECT_EQ(superdiagonal_class_size(5, 6, 3), std::optional<std::uint64_t>(8));
  EXPECT_EQ(superdiagonal_class_size(3, 7, 1), std::optional<std::uint64_t>(7));
  EXPECT_EQ(superdiagonal_class_size(200, 1000, 1), std::nullopt);
}

// ------------------------------------------------------------ jump-law files

TEST(JumpLaw, ParsesRecordsAndBareArrays) {
  std::istringstream in(R"({"records": [{"representative": [1, 0, 0], "weight": "1/4"},
                                        {"representative": [2, 0, 0], "weight": 0.25},
                                        {"representative": [0, 0, 1], "weight": "1/4"},
                                        {"representative": [0, 0, 2], "weight": "1/4"}]})");
  const auto recs = parse_jump_law(in);
  ASSERT_EQ(recs.size(), 4u);
  EXPECT_EQ(*recs[0].weight.exact, Rational(1, 4));
  const auto jd = custom_matrix_walk(3, 3, recs);
  EXPECT_EQ(jd.k(), 4u);
  EXPECT_TRUE(jd.superdiagonal_form());

  std::istringstream bare(R"([{"representative": 1, "weight": "1/2"}, {"representative": 2, "weight": "1/2"}])");
  const auto group = std::make_shared<const SmallGroup>(SmallGroup::cyclic(3));
  const auto cj = custom_group_walk(group, parse_jump_law(bare));
  EXPECT_EQ(cj.k(), 2u);
}

TEST(JumpLaw, RejectsMalformedInput) {
  const auto parse = [](const std::string& text) {
    std::istringstream in(text);
    return parse_jump_law(in);
  };
  EXPECT_THROW(parse("{"), ParseError);
  EXPECT_THROW(parse(R"({"records": 3})"), ParseError);
  EXPECT_THROW(parse(R"({"rows": []})"), ParseError);
  EXPECT_THROW(parse(R"([{"representative": [1], "weight": "1/2", "extra": 1}])"), ParseError);
  EXPECT_THROW(parse(R"([{"representative": [1.5], "weight": "1"}])"), ParseError);
  EXPECT_THROW(parse(R"([{"representative": "x", "weight": "1"}])"), ParseError);
  EXPECT_THROW(parse(R"([{"representative": [1], "weight": "1/"}])"), ParseError);
  EXPECT_THROW(parse(R"([{"representative": [1], "weight": "1/3"}])"), ParseError);
}

TEST(JumpLaw, RejectsNonInvariantOrReducibleLaws) {
  // Two members of one class with different weights.
  std::vector<JumpLawRecord> recs{{std::vector<std::int64_t>{1, 0, 0}, Weight::of(Rational(1, 2))},
                                  {std::vector<std::int64_t>{1, 1, 0}, Weight::of(Rational(1, 2))}};
  EXPECT_THROW(custom_matrix_walk(3, 3, recs), Error);
  std::vector<JumpLawRecord> reducible{{std::vector<std::int64_t>{1, 0, 0}, Weight::of(Rational(1, 2))},
                                       {std::vector<std::int64_t>{2, 0, 0}, Weight::of(Rational(1, 2))}};
  EXPECT_THROW(custom_matrix_walk(3, 3, reducible), ReducibleWalkError);
  std::vector<JumpLawRecord> wrong_kind{{Index{1}, Weight::of(Rational(1))}};
  EXPECT_THROW(custom_matrix_walk(3, 3, wrong_kind), DomainError);
}

// ------------------------------------------------------------ sampling

TEST(Sampling, ClassFrequenciesMatchWeights) {
  const auto jd = build_nestoridi_walk(4, 17);
  Rng rng(101);
  std::vector<double> counts(jd.k(), 0.0);
  const std::size_t draws = 100'000;
  for (std::size_t i = 0; i < draws; ++i) counts[sample_matrix_jump(jd, rng).class_index] += 1.0;
  double chi2 = 0.0;
  for (std::size_t a = 0; a < jd.k(); ++a) {
    const double e = draws * jd.classes()[a].weight.value;
    chi2 += (counts[a] - e) * (counts[a] - e) / e;
  }
  EXPECT_LT(chi2, oracle::chi2_quantile(static_cast<double>(jd.k() - 1), 1.0 - 1e-3));
}

TEST(Sampling, UniformWithinClassOnU33) {
  const auto jd = build_superclass_walk(3, 3);
  const EnumeratedUnitriangular g(3, Modulus(3));
  Rng rng(7);
  std::map<std::size_t, std::map<Index, double>> tallies;
  const std::size_t draws = 60'000;
  for (std::size_t i = 0; i < draws; ++i) {
    const auto j = sample_matrix_jump(jd, rng);
    tallies[j.class_index][g.index_of(j.value)] += 1.0;
  }
  for (const auto& [a, t] : tallies) {
    const auto& rep = std::get<UnitriangularMatrix>(jd.classes()[a].representative);
    const auto cls = conjugacy_class(g, g.index_of(rep)).members;
    ASSERT_EQ(t.size(), cls.size());
    double total = 0.0;
    for (const auto& [x, c] : t) total += c;
    double chi2 = 0.0;
    for (const auto& [x, c] : t) {
      EXPECT_TRUE(std::binary_search(cls.begin(), cls.end(), x));
      const double e = total / static_cast<double>(cls.size());
      chi2 += (c - e) * (c - e) / e;
    }
    EXPECT_LT(chi2, oracle::chi2_quantile(static_cast<double>(cls.size() - 1), 1.0 - 1e-3));
  }
}

TEST(Sampling, SingleCentralClassJumpsDeterministically) {
  // Z_5 with all mass on 2: every jump is 2.
  const auto group = std::make_shared<const SmallGroup>(SmallGroup::cyclic(5));
  const auto jd = make_group_walk(group, {{2, Weight::of(Rational(1))}});
  Rng rng(1);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(sample_index_jump(jd, rng).value, 2u);
}

TEST(Sampling, ConjugationIsInvisibleInAbelianization) {
  for (const auto& jd : {build_superclass_walk(6, 7), build_nestoridi_walk(5, 17)}) {
    Rng rng(13);
    for (int i = 0; i < 10'000; ++i) {
      const auto j = sample_matrix_jump(jd, rng);
      const auto& rep = std::get<UnitriangularMatrix>(jd.classes()[j.class_index].representative);
      ASSERT_EQ(abelianize(j.value), abelianize(rep));
    }
  }
  // Walk (a): the image is +-e_i exactly.
  const auto jd = build_superclass_walk(5, 11);
  Rng rng(2);
  for (int i = 0; i < 10'000; ++i) {
    const auto v = abelianize(sample_matrix_jump(jd, rng).value);
    int nonzero = 0;
    for (auto c : v) {
      if (c == 0) continue;
      ++nonzero;
      EXPECT_TRUE(c == 1 || c == 10);
    }
    ASSERT_EQ(nonzero, 1);
  }
}

// ------------------------------------------------------------ simulation

TEST(Simulation, ZeroTimeStaysAtIdentity) {
  const auto jd = build_superclass_walk(4, 5);
  Rng rng(1);
  const auto tr = simulate(jd, 0.0, rng);
  EXPECT_EQ(tr.jump_count, 0u);
  EXPECT_TRUE(std::get<UnitriangularMatrix>(tr.state).is_identity());
  EXPECT_THROW(simulate(jd, -1.0, rng), DomainError);
}

TEST(Simulation, JumpCountIsPoisson) {
  const auto jd = build_superclass_walk(4, 5);
  Rng rng(17);
  const int runs = 10'000;
  double sum = 0.0;
  for (int i = 0; i < runs; ++i) sum += static_cast<double>(simulate(jd, 5.0, rng).jump_count);
  EXPECT_NEAR(sum / runs, 5.0, 3.0 * std::sqrt(5.0 / runs));
}

TEST(Simulation, RecordedJumpsMultiplyToState) {
  const auto jd = build_nestoridi_walk(5, 17);
  Rng rng(23);
  for (int run = 0; run < 50; ++run) {
    const auto tr = simulate(jd, 6.0, rng, true);
    ASSERT_EQ(tr.jumps.size(), tr.jump_count);
    ASSERT_EQ(tr.jump_times.size(), tr.jump_count);
    UnitriangularMatrix x(5, Modulus(17));
    for (const auto& j : tr.jumps) x = multiply(x, std::get<UnitriangularMatrix>(j));
    EXPECT_EQ(x, std::get<UnitriangularMatrix>(tr.state));
    for (std::size_t i = 1; i < tr.jump_times.size(); ++i) EXPECT_LE(tr.jump_times[i - 1], tr.jump_times[i]);
    if (!tr.jump_times.empty()) EXPECT_LE(tr.jump_times.back(), 6.0);
  }
}

TEST(Simulation, EmpiricalLawMatchesHeatKernelOnU33) {
  const auto jd = build_superclass_walk(3, 3);
  const EnumeratedUnitriangular g(3, Modulus(3));
  const auto law = element_law(jd, g);
  const TransitionKernel kernel(g, law);
  const auto exact = heat_kernel(kernel, 2.0);
  std::vector<double> counts(27, 0.0);
  const std::size_t runs = 1'000'000;
  Rng rng(29);
  for (std::size_t i = 0; i < runs; ++i)
    counts[g.index_of(std::get<UnitriangularMatrix>(simulate(jd, 2.0, rng).state))] += 1.0;
  double tv = 0.0;
  for (std::size_t x = 0; x < 27; ++x) tv += std::abs(counts[x] / runs - exact.p[x]);
  EXPECT_LE(0.5 * tv, 0.02);
}

// ------------------------------------------------------------ projection

TEST(Projection, Examples) {
  const auto a = project_walk(build_superclass_walk(10, 6));
  EXPECT_EQ(a.coordinates, 9u);
  EXPECT_EQ(a.p, 6u);
  EXPECT_NEAR(a.coordinate_rate, 1.0 / 9.0, 1e-15);
  EXPECT_EQ(a.steps.support(), (std::vector<std::uint32_t>{1, 5}));
  EXPECT_TRUE(a.steps.symmetric());

  const auto b = project_walk(build_nestoridi_walk(6, 17));
  EXPECT_EQ(b.steps.support(), (std::vector<std::uint32_t>{1, 2, 15, 16}));
  for (const auto& [r, w] : b.steps.steps) EXPECT_NEAR(w, 0.25, 1e-15);

  // Degenerate walk (b): +-1 carries all mass.
  const auto d = project_walk(build_nestoridi_walk(4, 7));
  EXPECT_EQ(d.steps.support(), (std::vector<std::uint32_t>{1, 6}));
}

TEST(Projection, RejectsNonGeneratorLaws) {
  const auto group = std::make_shared<const SmallGroup>(SmallGroup::cyclic(5));
  EXPECT_THROW(project_walk(make_group_walk(group, {{1, Weight::of(0.5)}, {4, Weight::of(0.5)}})),
               UnsupportedProjectionError);
  // Unequal coordinates.
  std::vector<JumpLawRecord> uneven{{std::vector<std::int64_t>{1, 0, 0}, Weight::of(Rational(1, 3))},
                                    {std::vector<std::int64_t>{2, 0, 0}, Weight::of(Rational(1, 3))},
                                    {std::vector<std::int64_t>{0, 0, 1}, Weight::of(Rational(1, 6))},
                                    {std::vector<std::int64_t>{0, 0, 2}, Weight::of(Rational(1, 6))}};
  EXPECT_THROW(project_walk(custom_matrix_walk(3, 3, uneven)), UnsupportedProjectionError);
  // Asymmetric step law.
  std::vector<JumpLawRecord> skew{{std::vector<std::int64_t>{1, 0, 0}, Weight::of(Rational(1, 2))},
                                  {std::vector<std::int64_t>{0, 0, 1}, Weight::of(Rational(1, 2))}};
  EXPECT_THROW(project_walk(custom_matrix_walk(3, 5, skew)), UnsupportedProjectionError);
}

TEST(Projection, StepLawHelpers) {
  const auto s = StepLaw::uniform(6, {1, -1, 7, -7});
  EXPECT_EQ(s.support(), (std::vector<std::uint32_t>{1, 5}));
  EXPECT_NEAR(s.steps[0].second, 0.5, 1e-15);
  EXPECT_TRUE(s.symmetric());
  EXPECT_FALSE(StepLaw::uniform(5, {1, 2}).symmetric());
  EXPECT_THROW(StepLaw::uniform(1, {1}), DomainError);
  EXPECT_THROW(StepLaw::uniform(5, {}), DomainError);
}
