#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nilwalk/finite_group.hpp"
#include "nilwalk/structure.hpp"

namespace nilwalk {

/// P(x, y) = mu(x^{-1} y) on an enumerated group, stored as fixed-stride
/// successor and predecessor tables sharing one weight per jump element.
class TransitionKernel {
 public:
  TransitionKernel(const FiniteGroup& g, std::span<const ElementWeight> law,
                   std::size_t limit = kDefaultEnumerationLimit);

  std::size_t size() const { return states_; }
  std::size_t nonzeros_per_row() const { return weights_.size(); }
  /// Whether the weights were assembled exactly and sum to exactly 1.
  bool exact() const { return exact_; }

  /// Row x as (column, probability) pairs.
  std::vector<std::pair<Index, double>> row(Index x) const;
  double row_sum(Index x) const;
  double column_sum(Index y) const;

  /// out = in * P.
  void step(std::span<const double> in, std::span<double> out) const;

 private:
  std::size_t states_;
  std::vector<double> weights_;
  std::vector<Index> succ_;  // succ_[x * s + a] = x * g_a
  std::vector<Index> pred_;  // pred_[y * s + a] = y * g_a^{-1}
  bool exact_ = false;
};

/// Probability vector over enumerated states.
struct DistributionVector {
  std::vector<double> p;

  std::size_t size() const { return p.size(); }
  double mass() const;
  /// Entries with round-off negatives clipped to 0.
  std::vector<double> clipped() const;

  static DistributionVector point_mass(std::size_t states, Index at = 0);
  static DistributionVector uniform(std::size_t states);
};

/// Poisson(t) weights e^{-t} t^k / k! for k <= K, with K the first index whose
/// upper-tail bound drops to `tol`.
struct PoissonWeights {
  std::vector<double> weights;
  double tail_bound = 0.0;
};
PoissonWeights poisson_weights(double t, double tol, std::size_t max_terms = 1'000'000);

/// Uniformization of P_t(id, .) = sum_k e^{-t} t^k/k! delta_id P^k with a
/// Poisson-tail TV error of at most `tol`. Powers delta_id P^k are cached up to
/// a memory budget, so repeated evaluations at nearby times are cheap.
class HeatKernelEvaluator {
 public:
  HeatKernelEvaluator(const TransitionKernel& kernel, double tol = 1e-12,
                      std::size_t cache_bytes = std::size_t{256} << 20);

  DistributionVector at(double t);
  /// Number of Poisson terms used by the latest evaluation.
  std::size_t last_terms() const { return last_terms_; }
  double last_tail_bound() const { return last_tail_; }
  double tolerance() const { return tol_; }

 private:
  const TransitionKernel& kernel_;
  double tol_;
  std::size_t max_cached_;
  std::vector<std::vector<double>> powers_;
  std::size_t last_terms_ = 0;
  double last_tail_ = 0.0;
};

DistributionVector heat_kernel(const TransitionKernel& kernel, double t, double tol = 1e-12);

/// (1/2) sum |d - pi|.
double tv_distance(const DistributionVector& d, const DistributionVector& pi);
/// (sum_x pi(x) (d(x)/pi(x) - 1)^2)^{1/2}.
double l2_distance(const DistributionVector& d, const DistributionVector& pi);
double tv_to_uniform(const DistributionVector& d);
double l2_to_uniform(const DistributionVector& d);

enum class Metric { TV, L2 };
std::string to_string(Metric m);

struct MixingTimeResult {
  Metric metric = Metric::TV;
  double epsilon = 0.0;
  /// Upper end of the final bracket: the smallest time known to satisfy d <= eps.
  double time = 0.0;
  double lower_bracket = 0.0;
  double upper_bracket = 0.0;
  std::size_t evaluations = 0;
  std::size_t max_terms = 0;
  double tail_bound = 0.0;
};

struct MixingSearchOptions {
  /// 0 selects max(1e-6 * t_upper, 1e-4).
  double time_tol = 0.0;
  double time_cap = 5e5;
};

/// Doubling search for a bracket, then bisection, on a distance function that
/// is non-increasing in t. `d0` is the distance at t = 0.
MixingTimeResult bracket_mixing_time(const std::function<double(double)>& distance, double d0, double eps,
                                     Metric metric, const MixingSearchOptions& opts = {});

/// inf{t : d(t) <= eps} for the walk's kernel, TV or l2 against uniform.
MixingTimeResult mixing_time(const TransitionKernel& kernel, double eps, Metric metric,
                             const MixingSearchOptions& opts = {}, double heat_tol = 1e-12);

/// Sums d over the fibres of the abelianization map.
DistributionVector pushforward_abelian(const DistributionVector& d, const Abelianization& ab);

/// Pushforward of an element-level law along the abelianization (exact weights kept).
std::vector<ElementWeight> pushforward_law(std::span<const ElementWeight> law, const Abelianization& ab);

}  // namespace nilwalk
