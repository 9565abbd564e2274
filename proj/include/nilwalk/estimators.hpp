#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "nilwalk/random.hpp"
#include "nilwalk/structure.hpp"
#include "nilwalk/walks.hpp"

namespace nilwalk {

struct CollisionEstimate {
  double time = 0.0;
  std::size_t pairs = 0;
  double group_order = 0.0;
  /// |G| * (collision fraction) - 1, unbiased for d_l2(t)^2.
  double estimate = 0.0;
  double std_error = 0.0;
};

/// Simulates `pairs` independent copies (X_t, X'_t). Pair blocks use
/// stream_rng(seed, block), so the result does not depend on the thread count.
CollisionEstimate collision_l2(const JumpDistribution& jd, double t, std::size_t pairs, std::uint64_t seed,
                               std::size_t block_size = 4096);

/// Outcome of an exact counting check.
struct UniformityVerdict {
  std::string lemma;
  std::string group;
  nlohmann::json params = nlohmann::json::object();
  bool pass = false;
  /// Hits per target (element, coset or residue vector); empty for identity checks.
  std::vector<std::uint64_t> counts;
  nlohmann::json counts_summary = nlohmann::json::object();
  /// First failing case, empty on success.
  std::string failure;

  nlohmann::json to_json() const;
};

/// Counts prod_l u_l over R_1 x ... x R_L; passes iff every element of G is hit exactly once.
UniformityVerdict verify_lemma4(const LowerCentralSeries& series);

/// Distribution of G_{l+1}[s, u] over u in R_{l-1}, for 2 <= l <= L: its image
/// must be a subgroup of G_l / G_{l+1} carrying constant counts.
UniformityVerdict verify_lemma5i(const LowerCentralSeries& series, Index s, std::size_t l);

/// Exact convolution of uniform laws on the subgroups <generators_i> of Z_p^m;
/// passes iff the result is uniform on the sumset subgroup.
UniformityVerdict verify_lemma5ii(std::uint64_t p, std::size_t m,
                                  const std::vector<std::vector<std::vector<std::uint32_t>>>& generators);

/// Random subgroup families on Z_p^m for every 2 <= p <= p_max, 1 <= m <= m_max.
std::vector<UniformityVerdict> verify_lemma5ii_sweep(std::uint64_t p_max, std::size_t m_max,
                                                     std::size_t families_per_case, std::uint64_t seed);

/// The four coset identities for the commutator pairing G x G_{l-1} -> G_l / G_{l+1},
/// every 2 <= l <= L, exponents in [-3, 3]. Exhaustive when |G| <= exhaustive_limit,
/// otherwise `trials` random tuples per level.
UniformityVerdict verify_prop3(const LowerCentralSeries& series, std::size_t trials, Rng& rng,
                               std::size_t exhaustive_limit = 64);

}  // namespace nilwalk
