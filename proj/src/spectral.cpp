#include "nilwalk/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "nilwalk/errors.hpp"
#include "parallel.hpp"

namespace nilwalk {

namespace {

constexpr double kPi = std::numbers::pi;

// 2 sin^2(pi r / p) = 1 - cos(2 pi r / p) for a residue r.
double half_versine(std::uint64_t r, std::uint64_t p) {
  const double s = std::sin(kPi * static_cast<double>(r) / static_cast<double>(p));
  return 2.0 * s * s;
}

double cos_residue(std::uint64_t r, std::uint64_t p) {
  return std::cos(2.0 * kPi * static_cast<double>(r) / static_cast<double>(p));
}

}  // namespace

CoordinateSpectrum coordinate_eigenvalues(const StepLaw& law) {
  if (law.p < 2) throw DomainError("modulus must be >= 2");
  if (law.steps.empty()) throw DomainError("empty step law");
  double total = 0.0;
  for (const auto& [r, q] : law.steps) {
    if (r >= law.p) throw DomainError("step residue out of range");
    if (!(q > 0.0)) throw DomainError("step probabilities must be positive");
    total += q;
  }
  if (std::abs(total - 1.0) > 1e-12) throw DomainError("step law does not sum to 1");
  if (!law.symmetric(1e-12)) throw DomainError("step law is not symmetric under x -> -x");

  CoordinateSpectrum spec;
  spec.p = law.p;
  spec.law = law;
  spec.eigenvalues.assign(law.p, 0.0);
  spec.rates.assign(law.p, 0.0);
  spec.eigenvalues[0] = 1.0;
  for (std::uint64_t j = 1; j < law.p; ++j) {
    detail::CompensatedSum lam, rate;
    for (const auto& [c, q] : law.steps) {
      const std::uint64_t r = (j * c) % law.p;
      lam.add(q * cos_residue(r, law.p));
      rate.add(q * half_versine(r, law.p));
    }
    spec.eigenvalues[j] = lam.value();
    spec.rates[j] = rate.value();
  }
  spec.gap_index = 1;
  for (std::uint64_t j = 2; j < law.p; ++j)
    if (spec.rates[j] < spec.rates[spec.gap_index]) spec.gap_index = j;
  spec.gap = law.p > 1 ? spec.rates[spec.gap_index] : 0.0;
  return spec;
}

CoordinateSpectrum coordinate_eigenvalues(std::uint64_t p, std::span<const std::int64_t> jumps) {
  if (p < 2) throw DomainError("modulus must be >= 2");
  if (jumps.empty()) throw DomainError("empty jump set");
  Modulus mod(p);
  for (auto c : jumps)
    if (mod.reduce(c) == 0) throw DomainError("jump " + std::to_string(c) + " is 0 mod " + std::to_string(p));
  const auto law = StepLaw::uniform(p, std::vector<std::int64_t>(jumps.begin(), jumps.end()));
  if (!law.symmetric(1e-15)) throw DomainError("jump set is not symmetric under c -> -c");
  return coordinate_eigenvalues(law);
}

std::vector<double> coordinate_law(const CoordinateSpectrum& spec, double s) {
  if (!(s >= 0.0)) throw DomainError("time must be >= 0");
  const std::uint64_t p = spec.p;
  std::vector<double> q(p, 0.0);
  if (s == 0.0) {
    q[0] = 1.0;
    return q;
  }
  std::vector<double> decay(p);
  for (std::uint64_t j = 0; j < p; ++j) decay[j] = std::exp(-spec.rates[j] * s);
  for (std::uint64_t x = 0; x < p; ++x) {
    detail::CompensatedSum acc;
    for (std::uint64_t j = 0; j < p; ++j) acc.add(decay[j] * cos_residue((j * x) % p, p));
    q[x] = std::max(0.0, acc.value() / static_cast<double>(p));
  }
  return q;
}

double product_l2(std::size_t n, const CoordinateSpectrum& spec, double t) {
  if (n < 2) throw DomainError("product chain needs n >= 2");
  if (!(t >= 0.0)) throw DomainError("time must be >= 0");
  const double m = static_cast<double>(n - 1);
  const double s = t / m;
  detail::CompensatedSum d;
  for (std::uint64_t j = 1; j < spec.p; ++j) d.add(std::exp(-2.0 * spec.rates[j] * s));
  return std::sqrt(std::expm1(m * std::log1p(d.value())));
}

TvEstimate product_tv_estimate(std::size_t n, const CoordinateSpectrum& spec, double t, std::size_t samples,
                               std::uint64_t seed, std::size_t block_size) {
  if (n < 2) throw DomainError("product chain needs n >= 2");
  if (!(t > 0.0))
    throw DomainError("the product law is a point mass at t = 0; its TV is exactly 1 - p^{-(n-1)}");
  if (samples == 0) throw DomainError("samples must be >= 1");
  if (block_size == 0) throw DomainError("block size must be >= 1");

  const std::size_t m = n - 1;
  const auto q = coordinate_law(spec, t / static_cast<double>(m));
  std::vector<double> logq(q.size());
  for (std::size_t x = 0; x < q.size(); ++x) logq[x] = q[x] > 0.0 ? std::log(q[x]) : -INFINITY;
  const double log_uniform = -static_cast<double>(m) * std::log(static_cast<double>(spec.p));

  const std::size_t blocks = (samples + block_size - 1) / block_size;
  std::vector<double> sums(blocks, 0.0), squares(blocks, 0.0);
  detail::for_each_block(blocks, [&](std::size_t b) {
    auto rng = stream_rng(seed, b);
    std::discrete_distribution<std::size_t> draw(q.begin(), q.end());
    const std::size_t count = std::min(block_size, samples - b * block_size);
    detail::CompensatedSum sum, sq;
    for (std::size_t i = 0; i < count; ++i) {
      double log_density = 0.0;
      for (std::size_t c = 0; c < m; ++c) log_density += logq[draw(rng)];
      const double log_ratio = log_uniform - log_density;
      const double v = log_ratio < 0.0 ? -std::expm1(log_ratio) : 0.0;
      sum.add(v);
      sq.add(v * v);
    }
    sums[b] = sum.value();
    squares[b] = sq.value();
  });

  detail::CompensatedSum sum, sq;
  for (std::size_t b = 0; b < blocks; ++b) {
    sum.add(sums[b]);
    sq.add(squares[b]);
  }
  const double nn = static_cast<double>(samples);
  TvEstimate out;
  out.samples = samples;
  out.estimate = sum.value() / nn;
  if (samples > 1) {
    const double var = std::max(0.0, (sq.value() - nn * out.estimate * out.estimate) / (nn - 1.0));
    out.std_error = std::sqrt(var / nn);
  }
  return out;
}

double product_tv_compositions(std::size_t n, std::uint64_t p) {
  if (n < 2) throw DomainError("product chain needs n >= 2");
  const double m = static_cast<double>(n - 1);
  const double r = static_cast<double>(p / 2);
  return std::round(std::exp(std::lgamma(m + r + 1.0) - std::lgamma(m + 1.0) - std::lgamma(r + 1.0)));
}

double product_tv_exact(std::size_t n, const CoordinateSpectrum& spec, double t, double cap) {
  if (n < 2) throw DomainError("product chain needs n >= 2");
  if (!(t >= 0.0)) throw DomainError("time must be >= 0");
  const double count = product_tv_compositions(n, spec.p);
  if (count > cap)
    throw CapacityError("exact product TV needs " + std::to_string(count) + " compositions, above the cap of " +
                        std::to_string(cap));
  const std::size_t m = n - 1;
  const auto q = coordinate_law(spec, t / static_cast<double>(m));
  const std::size_t classes = spec.p / 2 + 1;
  std::vector<double> logq(classes), logmult(classes);
  for (std::size_t r = 0; r < classes; ++r) {
    logq[r] = q[r] > 0.0 ? std::log(q[r]) : -INFINITY;
    logmult[r] = (r == 0 || 2 * r == spec.p) ? 0.0 : std::log(2.0);
  }
  const double log_p_m = static_cast<double>(m) * std::log(static_cast<double>(spec.p));
  const double base = std::lgamma(static_cast<double>(m) + 1.0);

  // TV = sum over type classes of count * (P - U)_+, with P the product density.
  detail::CompensatedSum tv;
  auto visit = [&](auto&& self, std::size_t r, std::size_t remaining, double logcount, double logval) -> void {
    const bool last = r + 1 == classes;
    for (std::size_t k = last ? remaining : 0; k <= remaining; ++k) {
      const double kk = static_cast<double>(k);
      if (k > 0 && std::isinf(logq[r])) break;
      const double lc = logcount - std::lgamma(kk + 1.0) + kk * logmult[r];
      const double lv = k > 0 ? logval + kk * logq[r] : logval;
      if (!last) {
        self(self, r + 1, remaining - k, lc, lv);
        continue;
      }
      const double lr = lv + log_p_m;
      if (lr > 0.0) tv.add(std::exp(base + lc - log_p_m + lr + std::log(-std::expm1(-lr))));
    }
  };
  visit(visit, 0, m, 0.0, 0.0);
  return std::clamp(tv.value(), 0.0, 1.0);
}

double cutoff_time(WalkKind kind, std::size_t n, std::uint64_t p, std::optional<std::uint64_t> magnitude) {
  if (n < 3) throw DomainError("cutoff time needs n >= 3 so that log(n-1) > 0");
  if (p < 2) throw DomainError("modulus must be >= 2");
  const double m = static_cast<double>(n - 1);
  double denom = 0.0;
  switch (kind) {
    case WalkKind::Superclass:
      denom = 2.0 * half_versine(1, p);
      break;
    case WalkKind::Nestoridi: {
      const auto np = nestoridi_params(p, magnitude);
      denom = half_versine(1, p) + half_versine(np.magnitude % p, p);
      break;
    }
    case WalkKind::Custom:
      throw DomainError("cutoff time is defined for walks (a) and (b) only");
  }
  if (!(denom > 0.0)) throw DomainError("jump magnitude is 0 mod p");
  return m * std::log(m) / denom;
}

LowerBoundTime tv_lower_bound_time(std::size_t n, double gamma, double eps) {
  if (!(eps > 0.0 && eps < 1.0)) throw DomainError("epsilon must lie in (0,1)");
  if (!(gamma > 0.0)) throw DomainError("spectral gap must be > 0");
  if (n < 2) throw DomainError("n must be >= 2");
  const double m = static_cast<double>(n - 1);
  const double bracket = std::log(m) - std::log(8.0 * std::log(1.0 / eps));
  if (bracket <= 0.0) return {0.0, true};
  return {m / (2.0 * gamma) * bracket, false};
}

// --------------------------------------------------------------- BoundReport

bool BoundReport::has_flag(const std::string& f) const {
  return std::find(flags.begin(), flags.end(), f) != flags.end();
}

std::optional<bool> BoundReport::sandwich_holds() const {
  if (!exact) return std::nullopt;
  // Each mixing time is known only up to its bracket; an inequality fails
  // only when the brackets exclude it.
  const bool lower_ok = lower.lower_bracket <= exact->time;
  const bool upper_ok = exact->lower_bracket <= upper_time;
  return lower_ok && upper_ok;
}

nlohmann::json BoundReport::to_json() const {
  nlohmann::json j;
  j["epsilon"] = epsilon;
  j["lower_time"] = lower.time;
  j["lower_bracket"] = {lower.lower_bracket, lower.upper_bracket};
  j["upper_time"] = upper_time;
  j["upper_l2_time"] = upper_l2.time;
  j["plumbing_time"] = plumbing_time;
  j["active_branch"] = active_branch;
  j["mu_star"] = mu_star;
  j["k"] = k;
  j["cutoff_time"] = cutoff_time ? nlohmann::json(*cutoff_time) : nlohmann::json(nullptr);
  j["eq19_time"] = eq19_time ? nlohmann::json(*eq19_time) : nlohmann::json(nullptr);
  j["engine"] = engine;
  nlohmann::json f = nlohmann::json::object();
  for (const char* name : {"degenerate_b", "p_below_6", "vacuous_lower"}) f[name] = has_flag(name);
  for (const auto& other : flags) f[other] = true;
  j["flags"] = f;
  if (exact) {
    j["exact_time"] = exact->time;
    j["exact_bracket"] = {exact->lower_bracket, exact->upper_bracket};
    j["sandwich"] = *sandwich_holds();
  }
  return j;
}

// ------------------------------------------------------------ theorem1_bounds

BoundReport theorem1_bounds(const JumpDistribution& jd, double eps, const BoundOptions& opts) {
  if (!(eps > 0.0 && eps < 1.0)) throw DomainError("epsilon must lie in (0,1)");

  BoundReport r;
  r.epsilon = eps;
  r.k = jd.k();
  r.mu_star = jd.mu_star();
  r.plumbing_time = (std::log(static_cast<double>(r.k)) + 2.0 * std::log(4.0 / eps)) / r.mu_star;
  for (const auto& f : jd.flags()) r.flags.push_back(f);

  std::optional<AbelianWalkSpec> proj;
  if (jd.on_matrices()) {
    try {
      proj = project_walk(jd);
    } catch (const UnsupportedProjectionError&) {
    }
  }
  std::optional<CoordinateSpectrum> spectrum;
  if (proj) {
    spectrum = coordinate_eigenvalues(proj->steps);
    const std::size_t n = jd.dim();
    if (n >= 3 && jd.kind() != WalkKind::Custom) {
      const auto mag = jd.nestoridi() ? std::optional<std::uint64_t>(jd.nestoridi()->magnitude) : std::nullopt;
      r.cutoff_time = cutoff_time(jd.kind(), n, jd.modulus().value(), mag);
    }
    if (spectrum->gap > 0.0) {
      const auto lb = tv_lower_bound_time(n, spectrum->gap, 1.0 - eps);
      r.eq19_time = lb.time;
      if (lb.vacuous) r.flags.push_back("vacuous_lower");
    }
  }

  const double abelian_order =
      proj ? std::pow(static_cast<double>(proj->p), static_cast<double>(proj->coordinates)) : 0.0;
  bool use_spectral = false;
  switch (opts.engine) {
    case BoundEngine::Spectral:
      if (!proj) throw UnsupportedProjectionError("the spectral engine needs a superdiagonal product-chain walk");
      use_spectral = true;
      break;
    case BoundEngine::Exact:
      break;
    case BoundEngine::Auto:
      use_spectral = proj && abelian_order > static_cast<double>(opts.limit);
      break;
  }

  GroupPtr full;
  if (use_spectral) {
    r.engine = "spectral";
    const std::size_t n = jd.dim();
    const double m = static_cast<double>(n - 1);
    const double p = static_cast<double>(proj->p);
    const bool exact_tv = product_tv_compositions(n, proj->p) <= 5e7;
    if (!exact_tv) r.flags.push_back("lower_mc_estimate");
    auto tv = [&](double t) {
      if (t == 0.0) return -std::expm1(-m * std::log(p));
      if (exact_tv) return product_tv_exact(n, *spectrum, t);
      return product_tv_estimate(n, *spectrum, t, opts.mc_samples, opts.seed).estimate;
    };
    r.lower = bracket_mixing_time(tv, tv(0.0), eps, Metric::TV, opts.search);
    auto l2 = [&](double t) { return product_l2(n, *spectrum, t); };
    r.upper_l2 = bracket_mixing_time(l2, l2(0.0), eps / 2.0, Metric::L2, opts.search);
  } else {
    r.engine = "exact";
    std::unique_ptr<TransitionKernel> kab;
    if (proj) {
      CyclicProduct zp(proj->p, proj->coordinates, opts.limit);
      std::vector<ElementWeight> law;
      for (const auto& c : jd.classes()) {
        std::vector<std::uint32_t> coords(proj->coordinates, 0);
        coords[c.generator->index] = c.generator->step;
        law.push_back({zp.encode(coords), c.weight});
      }
      kab = std::make_unique<TransitionKernel>(zp, law, opts.limit);
    } else {
      full = enumerate_group(jd, opts.limit);
      const auto series = LowerCentralSeries::compute(full, opts.limit);
      const auto ab = Abelianization::from_series(series);
      const auto law = pushforward_law(element_law(jd, *full, opts.limit), ab);
      kab = std::make_unique<TransitionKernel>(*ab.quotient(), law, opts.limit);
    }
    r.lower = mixing_time(*kab, eps, Metric::TV, opts.search, opts.heat_tol);
    r.upper_l2 = mixing_time(*kab, eps / 2.0, Metric::L2, opts.search, opts.heat_tol);
  }

  r.upper_time = std::max(r.upper_l2.time, r.plumbing_time);
  r.active_branch = r.upper_l2.time >= r.plumbing_time ? "l2" : "plumbing";

  if (opts.full_group_time) {
    if (!full) full = enumerate_group(jd, opts.limit);
    TransitionKernel kernel(*full, element_law(jd, *full, opts.limit), opts.limit);
    r.exact = mixing_time(kernel, eps, Metric::TV, opts.search, opts.heat_tol);
  }
  return r;
}

}  // namespace nilwalk
