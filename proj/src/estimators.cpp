#include "nilwalk/estimators.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <set>

#include "nilwalk/errors.hpp"
#include "parallel.hpp"

namespace nilwalk {

// -------------------------------------------------------------- collisions

CollisionEstimate collision_l2(const JumpDistribution& jd, double t, std::size_t pairs, std::uint64_t seed,
                               std::size_t block_size) {
  if (pairs == 0) throw DomainError("pairs must be >= 1");
  if (block_size == 0) throw DomainError("block size must be >= 1");
  if (!(t >= 0.0)) throw DomainError("time must be >= 0");

  const std::size_t blocks = (pairs + block_size - 1) / block_size;
  std::vector<std::uint64_t> hits(blocks, 0);
  detail::for_each_block(blocks, [&](std::size_t b) {
    auto rng = stream_rng(seed, b);
    const std::size_t count = std::min(block_size, pairs - b * block_size);
    std::uint64_t h = 0;
    for (std::size_t i = 0; i < count; ++i) {
      const auto x = simulate(jd, t, rng);
      const auto y = simulate(jd, t, rng);
      if (x.state == y.state) ++h;
    }
    hits[b] = h;
  });
  std::uint64_t total = 0;
  for (auto h : hits) total += h;

  CollisionEstimate out;
  out.time = t;
  out.pairs = pairs;
  out.group_order = jd.group_order();
  const double f = static_cast<double>(total) / static_cast<double>(pairs);
  out.estimate = out.group_order * f - 1.0;
  out.std_error = out.group_order * std::sqrt(f * (1.0 - f) / static_cast<double>(pairs));
  return out;
}

// ----------------------------------------------------------------- verdicts

nlohmann::json UniformityVerdict::to_json() const {
  nlohmann::json j;
  j["lemma"] = lemma;
  j["group"] = group;
  j["params"] = params;
  j["pass"] = pass;
  j["counts_summary"] = counts_summary;
  if (!failure.empty()) j["failure"] = failure;
  return j;
}

namespace {

// Fills pass / summary from counts over targets, with `support` the set of
// targets that must carry the (common, nonzero) count.
void judge_counts(UniformityVerdict& v, const std::vector<bool>& support) {
  std::uint64_t lo = std::numeric_limits<std::uint64_t>::max();
  std::uint64_t hi = 0;
  std::uint64_t off = 0;
  std::uint64_t total = 0;
  std::size_t support_size = 0;
  for (std::size_t x = 0; x < v.counts.size(); ++x) {
    total += v.counts[x];
    if (support[x]) {
      ++support_size;
      lo = std::min(lo, v.counts[x]);
      hi = std::max(hi, v.counts[x]);
    } else {
      off += v.counts[x];
    }
  }
  if (support_size == 0) lo = 0;
  v.counts_summary = {{"targets", v.counts.size()}, {"support_size", support_size}, {"min", lo},
                      {"max", hi},                  {"total", total},               {"off_support", off}};
  v.pass = support_size > 0 && lo == hi && lo > 0 && off == 0;
  if (!v.pass && v.failure.empty()) {
    if (off != 0)
      v.failure = std::to_string(off) + " hits outside the support";
    else
      v.failure = "counts range over [" + std::to_string(lo) + ", " + std::to_string(hi) + "]";
  }
}

std::shared_ptr<const FiniteGroup> fast_group(const LowerCentralSeries& series) {
  const auto& g = series.group();
  if (dynamic_cast<const SmallGroup*>(&g) || g.order() > 4096) return series.group_ptr();
  return tabulate(g, 4096);
}

}  // namespace

UniformityVerdict verify_lemma4(const LowerCentralSeries& series) {
  const auto gp = fast_group(series);
  const auto& g = *gp;
  const std::size_t levels = series.nilpotency_class();

  UniformityVerdict v;
  v.lemma = "lemma4";
  v.group = series.group().name();
  std::vector<std::size_t> sizes;
  for (std::size_t l = 1; l <= levels; ++l) sizes.push_back(series.representatives(l).size());
  v.params = {{"levels", levels}, {"representative_counts", sizes}};

  std::vector<std::atomic<std::uint64_t>> hits(g.order());
  const auto first = series.representatives(1);
  // One block per choice of the first factor; counts are integers, so the
  // merge order does not matter.
  detail::for_each_block(first.size(), [&](std::size_t b) {
    std::vector<std::size_t> pos(levels, 0);
    pos[0] = b;
    while (true) {
      Index prod = first[b];
      for (std::size_t l = 2; l <= levels; ++l) prod = g.multiply(prod, series.representatives(l)[pos[l - 1]]);
      hits[prod].fetch_add(1, std::memory_order_relaxed);
      std::size_t l = levels;
      while (l > 1 && ++pos[l - 1] == sizes[l - 1]) pos[--l] = 0;
      if (l == 1) break;
    }
  });
  for (auto& h : hits) v.counts.push_back(h.load());
  judge_counts(v, std::vector<bool>(g.order(), true));
  if (v.pass && v.counts_summary["min"] != 1) {
    v.pass = false;
    v.failure = "elements hit more than once";
  }
  return v;
}

UniformityVerdict verify_lemma5i(const LowerCentralSeries& series, Index s, std::size_t l) {
  const std::size_t levels = series.nilpotency_class();
  if (l < 2 || l > levels)
    throw DomainError("level " + std::to_string(l) + " outside [2, " + std::to_string(levels) + "]");
  const auto& g = series.group();
  if (s >= g.order()) throw DomainError("element out of range");

  UniformityVerdict v;
  v.lemma = "lemma5i";
  v.group = g.name();
  v.params = {{"s", g.format(s)}, {"level", l}};

  const auto targets = series.representatives(l);
  v.counts.assign(targets.size(), 0);
  for (Index u : series.representatives(l - 1)) {
    const Index c = g.commutator(s, u);
    if (!series.term(l).contains(c)) {
      v.failure = "[s, " + g.format(u) + "] is not in G_" + std::to_string(l);
      judge_counts(v, std::vector<bool>(targets.size(), false));
      v.pass = false;
      return v;
    }
    ++v.counts[series.coset_index(l, c)];
  }
  std::vector<bool> image(targets.size());
  for (std::size_t i = 0; i < targets.size(); ++i) image[i] = v.counts[i] > 0;

  // The image must be closed under coset multiplication (finite, so a subgroup).
  for (std::size_t a = 0; a < targets.size() && v.failure.empty(); ++a) {
    if (!image[a]) continue;
    for (std::size_t b = 0; b < targets.size(); ++b) {
      if (!image[b]) continue;
      if (!image[series.coset_index(l, g.multiply(targets[a], targets[b]))]) {
        v.failure = "image is not closed under multiplication";
        break;
      }
    }
  }
  const bool closed = v.failure.empty();
  judge_counts(v, image);
  v.counts_summary["image_is_subgroup"] = closed;
  v.pass = v.pass && closed;
  return v;
}

UniformityVerdict verify_lemma5ii(std::uint64_t p, std::size_t m,
                                  const std::vector<std::vector<std::vector<std::uint32_t>>>& generators) {
  if (generators.empty()) throw DomainError("need at least one subgroup");
  CyclicProduct q(p, m);
  UniformityVerdict v;
  v.lemma = "lemma5ii";
  v.group = q.name();

  std::vector<Index> all;
  std::vector<Subgroup> subgroups;
  nlohmann::json gens = nlohmann::json::array();
  for (const auto& family : generators) {
    std::vector<Index> idx;
    for (const auto& vec : family) {
      if (vec.size() != m) throw DomainError("generator has the wrong number of coordinates");
      for (auto c : vec)
        if (c >= p) throw DomainError("generator coordinate out of range");
      idx.push_back(q.encode(vec));
    }
    all.insert(all.end(), idx.begin(), idx.end());
    subgroups.push_back(subgroup_closure(q, idx));
    gens.push_back(family);
  }
  std::vector<std::size_t> sizes;
  for (const auto& h : subgroups) sizes.push_back(h.size());
  v.params = {{"p", p}, {"m", m}, {"generators", gens}, {"subgroup_orders", sizes}};

  // Integer convolution: counts[x] = #{(h_1, ..., h_r) : h_1 + ... + h_r = x}.
  std::vector<std::uint64_t> counts(q.order(), 0);
  for (Index h : subgroups.front().elements) ++counts[h];
  for (std::size_t i = 1; i < subgroups.size(); ++i) {
    std::vector<std::uint64_t> next(q.order(), 0);
    for (std::size_t x = 0; x < counts.size(); ++x) {
      if (counts[x] == 0) continue;
      for (Index h : subgroups[i].elements) {
        auto& slot = next[q.multiply(static_cast<Index>(x), h)];
        if (slot > std::numeric_limits<std::uint64_t>::max() - counts[x])
          throw CapacityError("convolution counts overflow 64 bits");
        slot += counts[x];
      }
    }
    counts = std::move(next);
  }
  v.counts = std::move(counts);
  const auto sumset = subgroup_closure(q, all);
  judge_counts(v, sumset.member);
  v.counts_summary["sumset_order"] = sumset.size();
  return v;
}

std::vector<UniformityVerdict> verify_lemma5ii_sweep(std::uint64_t p_max, std::size_t m_max,
                                                     std::size_t families_per_case, std::uint64_t seed) {
  std::vector<UniformityVerdict> out;
  Rng rng(seed);
  for (std::uint64_t p = 2; p <= p_max; ++p) {
    std::uniform_int_distribution<std::uint32_t> coord(0, static_cast<std::uint32_t>(p - 1));
    for (std::size_t m = 1; m <= m_max; ++m) {
      for (std::size_t f = 0; f < families_per_case; ++f) {
        const std::size_t r = 1 + f % 3;
        std::vector<std::vector<std::vector<std::uint32_t>>> gens(r);
        for (auto& family : gens) {
          const std::size_t count = 1 + rng() % 2;
          for (std::size_t c = 0; c < count; ++c) {
            std::vector<std::uint32_t> vec(m);
            for (auto& x : vec) x = coord(rng);
            family.push_back(std::move(vec));
          }
        }
        out.push_back(verify_lemma5ii(p, m, gens));
      }
    }
  }
  return out;
}

// -------------------------------------------------------------- bilinearity

UniformityVerdict verify_prop3(const LowerCentralSeries& series, std::size_t trials, Rng& rng,
                               std::size_t exhaustive_limit) {
  const auto gp = fast_group(series);
  const auto& g = *gp;
  const std::size_t levels = series.nilpotency_class();
  const bool exhaustive = g.order() <= exhaustive_limit;

  UniformityVerdict v;
  v.lemma = "prop3";
  v.group = series.group().name();
  v.params = {{"mode", exhaustive ? "exhaustive" : "random"}, {"trials_per_level", exhaustive ? 0 : trials},
              {"exponents", {-3, 3}}};

  std::uint64_t checks = 0;
  auto fail = [&](std::size_t l, const std::string& what) {
    if (v.failure.empty()) v.failure = "level " + std::to_string(l) + ": " + what;
  };
  for (std::size_t l = 2; l <= levels; ++l) {
    const auto& inner = series.term(l - 1).elements;
    auto same = [&](Index a, Index b) { return series.same_coset(l, a, b); };
    auto antisym = [&](Index x, Index z) {
      ++checks;
      if (!same(g.commutator(x, z), g.inverse(g.commutator(z, x))))
        fail(l, "[x,z] != [z,x]^-1 for x=" + g.format(x) + ", z=" + g.format(z));
    };
    auto right_linear = [&](Index x, Index z, Index w) {
      ++checks;
      if (!same(g.commutator(x, g.multiply(z, w)), g.multiply(g.commutator(x, z), g.commutator(x, w))))
        fail(l, "[x,zw] != [x,z][x,w] for x=" + g.format(x));
    };
    auto left_linear = [&](Index x, Index y, Index z) {
      ++checks;
      if (!same(g.commutator(g.multiply(x, y), z), g.multiply(g.commutator(x, z), g.commutator(y, z))))
        fail(l, "[xy,z] != [x,z][y,z] for z=" + g.format(z));
    };
    auto powers = [&](Index x, Index z, int i, int j) {
      ++checks;
      if (!same(g.commutator(g.power(x, i), g.power(z, j)), g.power(g.commutator(x, z), i * j)))
        fail(l, "[x^i,z^j] != [x,z]^(ij) for i=" + std::to_string(i) + ", j=" + std::to_string(j));
    };

    if (exhaustive) {
      for (Index x = 0; x < g.order(); ++x) {
        for (Index z : inner) {
          antisym(x, z);
          for (Index w : inner) right_linear(x, z, w);
          for (Index y = 0; y < g.order(); ++y) left_linear(x, y, z);
          for (int i = -3; i <= 3; ++i)
            for (int j = -3; j <= 3; ++j) powers(x, z, i, j);
        }
      }
    } else {
      std::uniform_int_distribution<std::size_t> pick(0, inner.size() - 1);
      std::uniform_int_distribution<int> expo(-3, 3);
      for (std::size_t k = 0; k < trials; ++k) {
        const Index x = uniform_element(g, rng);
        const Index y = uniform_element(g, rng);
        const Index z = inner[pick(rng)];
        const Index w = inner[pick(rng)];
        antisym(x, z);
        right_linear(x, z, w);
        left_linear(x, y, z);
        powers(x, z, expo(rng), expo(rng));
      }
    }
  }
  v.pass = v.failure.empty();
  v.counts_summary = {{"levels", levels}, {"checks", checks}};
  return v;
}

}  // namespace nilwalk
