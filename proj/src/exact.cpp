#include "nilwalk/exact.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "nilwalk/errors.hpp"
#include "parallel.hpp"

namespace nilwalk {

// ------------------------------------------------------------ TransitionKernel

TransitionKernel::TransitionKernel(const FiniteGroup& g, std::span<const ElementWeight> law, std::size_t limit)
    : states_(g.order()) {
  if (g.order() > limit)
    throw CapacityError("cannot build a kernel on " + g.name() + ": order " + std::to_string(g.order()) +
                        " exceeds the enumeration limit of " + std::to_string(limit));
  if (law.empty()) throw DomainError("empty jump law");

  std::map<Index, Weight> merged;
  for (const auto& e : law) {
    if (e.element >= g.order()) throw DomainError("jump element out of range");
    if (!(e.weight.value > 0.0)) throw DomainError("jump weights must be positive");
    auto [it, inserted] = merged.emplace(e.element, e.weight);
    if (!inserted) it->second = it->second + e.weight;
  }
  exact_ = std::all_of(merged.begin(), merged.end(), [](const auto& kv) { return kv.second.exact.has_value(); });
  std::vector<Index> jumps;
  if (exact_) {
    Rational total(0);
    for (const auto& [x, w] : merged) total += *w.exact;
    if (!(total == Rational(1))) throw DomainError("jump law sums to " + total.str() + ", not 1");
  } else {
    double total = 0.0;
    for (const auto& [x, w] : merged) total += w.value;
    if (std::abs(total - 1.0) > 1e-12) throw DomainError("jump law sums to " + std::to_string(total) + ", not 1");
  }
  for (const auto& [x, w] : merged) {
    jumps.push_back(x);
    weights_.push_back(exact_ ? w.exact->to_double() : w.value);
  }

  const std::size_t s = jumps.size();
  succ_.resize(states_ * s);
  pred_.resize(states_ * s);
  for (std::size_t x = 0; x < states_; ++x) {
    for (std::size_t a = 0; a < s; ++a) {
      const Index y = g.multiply(static_cast<Index>(x), jumps[a]);
      succ_[x * s + a] = y;
      pred_[std::size_t{y} * s + a] = static_cast<Index>(x);
    }
  }
}

std::vector<std::pair<Index, double>> TransitionKernel::row(Index x) const {
  const std::size_t s = weights_.size();
  std::vector<std::pair<Index, double>> out;
  for (std::size_t a = 0; a < s; ++a) out.emplace_back(succ_[std::size_t{x} * s + a], weights_[a]);
  std::sort(out.begin(), out.end());
  return out;
}

double TransitionKernel::row_sum(Index x) const {
  double total = 0.0;
  for (const auto& [y, w] : row(x)) total += w;
  return total;
}

double TransitionKernel::column_sum(Index y) const {
  double total = 0.0;
  const std::size_t s = weights_.size();
  for (std::size_t a = 0; a < s; ++a) {
    const Index x = pred_[std::size_t{y} * s + a];
    for (const auto& [z, w] : row(x))
      if (z == y) total += w;
  }
  // Each predecessor row was scanned in full; distinct jumps reach y from distinct x.
  std::vector<Index> preds(pred_.begin() + static_cast<std::ptrdiff_t>(std::size_t{y} * s),
                           pred_.begin() + static_cast<std::ptrdiff_t>(std::size_t{y} * s + s));
  std::sort(preds.begin(), preds.end());
  if (std::adjacent_find(preds.begin(), preds.end()) != preds.end())
    throw Error("internal: repeated predecessor in kernel column");
  return total;
}

void TransitionKernel::step(std::span<const double> in, std::span<double> out) const {
  if (in.size() != states_ || out.size() != states_) throw DomainError("distribution length mismatch");
  const std::size_t s = weights_.size();
  for (std::size_t y = 0; y < states_; ++y) {
    const Index* pr = &pred_[y * s];
    double acc = 0.0;
    for (std::size_t a = 0; a < s; ++a) acc += in[pr[a]] * weights_[a];
    out[y] = acc;
  }
}

// ------------------------------------------------------------ DistributionVector

double DistributionVector::mass() const {
  double total = 0.0;
  double comp = 0.0;
  for (double x : p) {
    const double y = x - comp;
    const double t = total + y;
    comp = (t - total) - y;
    total = t;
  }
  return total;
}

std::vector<double> DistributionVector::clipped() const {
  std::vector<double> out(p);
  for (auto& x : out) x = std::max(x, 0.0);
  return out;
}

DistributionVector DistributionVector::point_mass(std::size_t states, Index at) {
  DistributionVector d{std::vector<double>(states, 0.0)};
  d.p.at(at) = 1.0;
  return d;
}

DistributionVector DistributionVector::uniform(std::size_t states) {
  return {std::vector<double>(states, 1.0 / static_cast<double>(states))};
}

// ------------------------------------------------------------- uniformization

PoissonWeights poisson_weights(double t, double tol, std::size_t max_terms) {
  if (!(t >= 0.0)) throw DomainError("time must be >= 0");
  if (!(tol > 0.0)) throw DomainError("tolerance must be > 0");
  PoissonWeights out;
  if (t == 0.0) {
    out.weights = {1.0};
    return out;
  }
  // Unnormalized weights relative to the mode, then normalized by the kept
  // mass plus a bound on the upper tail, so the kept mass lies in [1 - tol, 1].
  const auto mode = static_cast<std::size_t>(std::floor(t));
  if (mode >= max_terms)
    throw PrecisionError("uniformization needs more than " + std::to_string(max_terms) +
                         " terms at t=" + std::to_string(t) + "; use a larger tolerance or smaller time");
  std::vector<double> u(mode + 1, 0.0);
  u[mode] = 1.0;
  for (std::size_t k = mode; k-- > 0;) {
    u[k] = u[k + 1] * static_cast<double>(k + 1) / t;
    if (u[k] < 1e-300) break;
  }
  double kept = 0.0;
  for (double x : u) kept += x;
  double tail = 0.0;
  for (std::size_t k = mode;; ++k) {
    const double next = u[k] * t / static_cast<double>(k + 1);
    if (static_cast<double>(k + 2) > t) {
      tail = next / (1.0 - t / static_cast<double>(k + 2));
      if (tail <= 0.5 * tol * kept) break;
    }
    if (k + 1 >= max_terms)
      throw PrecisionError("uniformization needs more than " + std::to_string(max_terms) +
                           " terms at t=" + std::to_string(t) + "; use a larger tolerance");
    u.push_back(next);
    kept += next;
  }
  const double z = kept + tail;
  out.weights.resize(u.size());
  for (std::size_t k = 0; k < u.size(); ++k) out.weights[k] = u[k] / z;
  out.tail_bound = tail / z;
  return out;
}

HeatKernelEvaluator::HeatKernelEvaluator(const TransitionKernel& kernel, double tol, std::size_t cache_bytes)
    : kernel_(kernel), tol_(tol) {
  if (!(tol > 0.0)) throw DomainError("tolerance must be > 0");
  max_cached_ = std::max<std::size_t>(2, cache_bytes / (sizeof(double) * std::max<std::size_t>(1, kernel.size())));
  powers_.push_back(DistributionVector::point_mass(kernel.size()).p);
}

DistributionVector HeatKernelEvaluator::at(double t) {
  const auto pw = poisson_weights(t, tol_);
  const std::size_t terms = pw.weights.size();
  last_terms_ = terms;
  last_tail_ = pw.tail_bound;

  while (powers_.size() < std::min(terms, max_cached_)) {
    std::vector<double> next(kernel_.size());
    kernel_.step(powers_.back(), next);
    powers_.push_back(std::move(next));
  }
  DistributionVector out{std::vector<double>(kernel_.size(), 0.0)};
  const std::size_t cached = std::min(terms, powers_.size());
  for (std::size_t k = 0; k < cached; ++k) {
    const double w = pw.weights[k];
    if (w == 0.0) continue;
    const auto& v = powers_[k];
    for (std::size_t x = 0; x < v.size(); ++x) out.p[x] += w * v[x];
  }
  if (cached < terms) {
    std::vector<double> cur = powers_.back();
    std::vector<double> next(kernel_.size());
    for (std::size_t k = powers_.size(); k < terms; ++k) {
      kernel_.step(cur, next);
      std::swap(cur, next);
      const double w = pw.weights[k];
      for (std::size_t x = 0; x < cur.size(); ++x) out.p[x] += w * cur[x];
    }
  }
  return out;
}

DistributionVector heat_kernel(const TransitionKernel& kernel, double t, double tol) {
  HeatKernelEvaluator eval(kernel, tol, 0);
  return eval.at(t);
}

// ------------------------------------------------------------------ distances

double tv_distance(const DistributionVector& d, const DistributionVector& pi) {
  if (d.size() != pi.size()) throw DomainError("distribution length mismatch");
  detail::CompensatedSum total;
  for (std::size_t x = 0; x < d.size(); ++x) total.add(std::abs(std::max(d.p[x], 0.0) - pi.p[x]));
  return 0.5 * total.value();
}

double l2_distance(const DistributionVector& d, const DistributionVector& pi) {
  if (d.size() != pi.size()) throw DomainError("distribution length mismatch");
  detail::CompensatedSum total;
  for (std::size_t x = 0; x < d.size(); ++x) {
    const double r = std::max(d.p[x], 0.0) / pi.p[x] - 1.0;
    total.add(pi.p[x] * r * r);
  }
  return std::sqrt(total.value());
}

double tv_to_uniform(const DistributionVector& d) {
  const double u = 1.0 / static_cast<double>(d.size());
  detail::CompensatedSum total;
  for (double x : d.p) total.add(std::abs(std::max(x, 0.0) - u));
  return 0.5 * total.value();
}

double l2_to_uniform(const DistributionVector& d) {
  const double m = static_cast<double>(d.size());
  detail::CompensatedSum total;
  for (double x : d.p) {
    const double r = std::max(x, 0.0) * m - 1.0;
    total.add(r * r);
  }
  return std::sqrt(total.value() / m);
}

std::string to_string(Metric m) { return m == Metric::TV ? "tv" : "l2"; }

// ------------------------------------------------------------------ mixing time

MixingTimeResult bracket_mixing_time(const std::function<double(double)>& distance, double d0, double eps,
                                     Metric metric, const MixingSearchOptions& opts) {
  if (!(eps > 0.0)) throw DomainError("epsilon must be > 0");
  if (metric == Metric::TV && !(eps < 1.0)) throw DomainError("TV epsilon must lie in (0,1)");
  MixingTimeResult r;
  r.metric = metric;
  r.epsilon = eps;
  if (d0 <= eps) return r;

  double lo = 0.0;
  double hi = 1.0;
  while (true) {
    ++r.evaluations;
    if (distance(hi) <= eps) break;
    lo = hi;
    hi *= 2.0;
    if (hi > opts.time_cap)
      throw DivergenceError("no time below the cap " + std::to_string(opts.time_cap) + " reaches " + to_string(metric) +
                            " distance " + std::to_string(eps) + "; the walk may be reducible");
  }
  const double tol = opts.time_tol > 0.0 ? opts.time_tol : std::max(1e-6 * hi, 1e-4);
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    ++r.evaluations;
    if (distance(mid) <= eps)
      hi = mid;
    else
      lo = mid;
  }
  r.time = hi;
  r.lower_bracket = lo;
  r.upper_bracket = hi;
  return r;
}

MixingTimeResult mixing_time(const TransitionKernel& kernel, double eps, Metric metric, const MixingSearchOptions& opts,
                             double heat_tol) {
  HeatKernelEvaluator eval(kernel, heat_tol);
  std::size_t max_terms = 0;
  double tail = 0.0;
  auto distance = [&](double t) {
    auto d = eval.at(t);
    max_terms = std::max(max_terms, eval.last_terms());
    tail = std::max(tail, eval.last_tail_bound());
    return metric == Metric::TV ? tv_to_uniform(d) : l2_to_uniform(d);
  };
  const double m = static_cast<double>(kernel.size());
  const double d0 = metric == Metric::TV ? 1.0 - 1.0 / m : std::sqrt(m - 1.0);
  auto r = bracket_mixing_time(distance, d0, eps, metric, opts);
  r.max_terms = max_terms;
  r.tail_bound = tail;
  return r;
}

DistributionVector pushforward_abelian(const DistributionVector& d, const Abelianization& ab) {
  if (d.size() != ab.images().size()) throw DomainError("distribution does not match the abelianization domain");
  DistributionVector out{std::vector<double>(ab.quotient()->order(), 0.0)};
  for (std::size_t x = 0; x < d.size(); ++x) out.p[ab.image(static_cast<Index>(x))] += d.p[x];
  return out;
}

std::vector<ElementWeight> pushforward_law(std::span<const ElementWeight> law, const Abelianization& ab) {
  std::map<Index, Weight> merged;
  for (const auto& e : law) {
    auto [it, inserted] = merged.emplace(ab.image(e.element), e.weight);
    if (!inserted) it->second = it->second + e.weight;
  }
  std::vector<ElementWeight> out;
  for (const auto& [x, w] : merged) out.push_back({x, w});
  return out;
}

}  // namespace nilwalk
