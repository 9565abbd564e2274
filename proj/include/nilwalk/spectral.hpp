#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "nilwalk/exact.hpp"
#include "nilwalk/walks.hpp"

namespace nilwalk {

/// Spectrum of the symmetric step law on Z_p: lambda_j = sum_c q(c) cos(2 pi j c / p).
struct CoordinateSpectrum {
  std::uint64_t p = 0;
  StepLaw law;
  std::vector<double> eigenvalues;
  /// 1 - lambda_j, evaluated as sum_c q(c) 2 sin^2(pi j c / p) to keep small gaps accurate.
  std::vector<double> rates;
  double gap = 0.0;
  std::size_t gap_index = 0;
};

/// Uniform law on the jump multiset J (symmetric, nonempty, no multiple of p).
CoordinateSpectrum coordinate_eigenvalues(std::uint64_t p, std::span<const std::int64_t> jumps);
CoordinateSpectrum coordinate_eigenvalues(const StepLaw& law);

/// Law at time s of the rate-1 continuous-time walk on Z_p started at 0.
std::vector<double> coordinate_law(const CoordinateSpectrum& spec, double s);

/// l2 distance to uniform of the product chain on Z_p^{n-1} at total rate t,
/// i.e. coordinate time t/(n-1).
double product_l2(std::size_t n, const CoordinateSpectrum& spec, double t);

struct TvEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
  std::size_t samples = 0;
};

/// Importance estimator of the product-chain TV: mean of (1 - p^{-(n-1)} / prod q_s(X_i))_+
/// with X ~ q_s^{(n-1)}. Blocks of `block_size` samples use stream_rng(seed, block).
TvEstimate product_tv_estimate(std::size_t n, const CoordinateSpectrum& spec, double t, std::size_t samples,
                               std::uint64_t seed, std::size_t block_size = 4096);

/// Number of compositions enumerated by product_tv_exact.
double product_tv_compositions(std::size_t n, std::uint64_t p);

/// Exact product-chain TV by enumerating type classes over the residue pairs {x, p - x}.
/// Throws CapacityError when the composition count exceeds `cap`.
double product_tv_exact(std::size_t n, const CoordinateSpectrum& spec, double t, double cap = 5e7);

/// t_n for walk (a) (Superclass) or (b) (Nestoridi; magnitude floor(sqrt a) unless overridden).
double cutoff_time(WalkKind kind, std::size_t n, std::uint64_t p,
                   std::optional<std::uint64_t> magnitude = std::nullopt);

struct LowerBoundTime {
  double time = 0.0;
  bool vacuous = false;
};

/// (n-1)/(2 gamma) (log(n-1) - log(8 log(1/eps))), a lower bound on the TV
/// mixing time at level 1 - eps; 0 and `vacuous` when the bracket is <= 0.
LowerBoundTime tv_lower_bound_time(std::size_t n, double gamma, double eps);

enum class BoundEngine { Auto, Exact, Spectral };

struct BoundOptions {
  BoundEngine engine = BoundEngine::Auto;
  std::size_t limit = kDefaultEnumerationLimit;
  MixingSearchOptions search;
  double heat_tol = 1e-12;
  /// Also compute t_mix^TV(G, eps) on the full group (requires enumeration).
  bool full_group_time = false;
  /// Samples for the Monte Carlo fallback of the spectral lower bound.
  std::size_t mc_samples = 100'000;
  std::uint64_t seed = 0;
};

struct BoundReport {
  double epsilon = 0.0;
  MixingTimeResult lower;      // t_mix^TV(G_ab, eps)
  MixingTimeResult upper_l2;   // t_mix^l2(G_ab, eps/2)
  double plumbing_time = 0.0;  // (log k + 2 log(4/eps)) / mu*
  double upper_time = 0.0;
  std::string active_branch;   // "l2" or "plumbing"
  double mu_star = 0.0;
  std::size_t k = 0;
  std::optional<double> cutoff_time;
  std::optional<double> eq19_time;  // lower bound on t_mix^TV(G, eps)
  std::optional<MixingTimeResult> exact;
  std::string engine;  // "exact" or "spectral"
  std::vector<std::string> flags;

  bool has_flag(const std::string& f) const;
  /// lower <= exact <= upper, when the exact time was computed.
  std::optional<bool> sandwich_holds() const;
  nlohmann::json to_json() const;
};

/// Lower and upper mixing-time bounds through the abelianization, with the
/// active branch of the upper bound. Non-nilpotent table groups are refused.
BoundReport theorem1_bounds(const JumpDistribution& jd, double eps, const BoundOptions& opts = {});

}  // namespace nilwalk
