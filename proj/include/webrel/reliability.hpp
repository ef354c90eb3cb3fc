#pragma once

// Reliability of the web over a band of length S: the probability that no
// crack fractures while it crosses the open draw.
//
// Constant tension T0 (r1): each crack survives with probability
// qbar = P[T0 < B(xi)], independently of the others.
//
// OU tension (r2): with crack windows more than one span apart,
//   qbar_k = q1 (q1 / q2^2)^(k-1) prod_i q3(gap_i),
// where q1 = P[crack survives its window], q2 = P[T(0) < B(xi)] and
// q3(s) = P[T(0) < B(z), T(s - l) < B(x)] for consecutive cracks s apart.

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

#include "webrel/crack_occurrence.hpp"
#include "webrel/errors.hpp"
#include "webrel/first_passage.hpp"
#include "webrel/fracture_mechanics.hpp"
#include "webrel/normal.hpp"
#include "webrel/parallel.hpp"
#include "webrel/random.hpp"
#include "webrel/stochastic_tension.hpp"

namespace webrel {

/// A probability with its standard error (MC) or error estimate (quadrature).
struct Estimate {
  double value = 0.0;
  double error = 0.0;
};

using Metadata = std::vector<std::pair<std::string, std::string>>;

struct ReliabilityResult {
  double estimate = 1.0;
  double std_error = 0.0;
  double numeric_error_bound = 0.0;
  std::size_t samples = 0;
  Metadata metadata;
};

/// Thread count and chunking for Monte Carlo loops. Results depend on
/// (seed, samples, chunk) but not on threads.
struct ParallelOptions {
  unsigned threads = 0;
  std::size_t chunk = 256;
};

// ---------------------------------------------------------------- constant tension

/// P[T0 < B(xi)] for one crack.
inline double qbar(double t0, const CrackLengthDist& dist, const FractureModel& frac) {
  detail::require(t0 > 0.0, "qbar: t0 must be positive");
  return dist.cdf(frac.critical_length(t0));
}

inline ReliabilityResult r1_poisson(double rate, double band, double q, double q_error = 0.0) {
  detail::require(rate >= 0.0 && band > 0.0, "r1_poisson: rate >= 0 and S > 0 required");
  detail::require(q >= 0.0 && q <= 1.0, "r1_poisson: qbar must lie in [0, 1]");
  ReliabilityResult r;
  const double mu = rate * band;
  r.estimate = std::exp(mu * (q - 1.0));
  r.numeric_error_bound = mu * r.estimate * q_error;
  return r;
}

/// Poisson mixture sum_k e^-mu mu^k / k! q^k, summed until the tail is below tail_tol.
inline double r1_poisson_series(double rate, double band, double q, double tail_tol = 1e-18) {
  const double mu = rate * band;
  double logw = -mu;
  double acc = 0.0;
  double mass = 0.0;
  for (std::size_t k = 0;; ++k) {
    const double w = std::exp(logw);
    acc += w * std::pow(q, static_cast<double>(k));
    mass += w;
    if (static_cast<double>(k) > mu && 1.0 - mass <= tail_tol) break;
    if (k > 100000) break;
    logw += std::log(mu) - std::log(static_cast<double>(k + 1));
  }
  return acc;
}

inline std::size_t lattice_sites(double zone, double pitch) {
  detail::require(pitch > 0.0 && zone >= 0.0, "lattice: pitch > 0 and zone >= 0 required");
  return static_cast<std::size_t>(std::floor(zone / pitch));
}

inline ReliabilityResult r1_binomial(double p_s, double zone, double pitch, double q, double q_error = 0.0) {
  detail::require(p_s >= 0.0 && p_s <= 1.0, "r1_binomial: p_s must lie in [0, 1]");
  detail::require(q >= 0.0 && q <= 1.0, "r1_binomial: qbar must lie in [0, 1]");
  const auto n = static_cast<double>(lattice_sites(zone, pitch));
  ReliabilityResult r;
  const double base = 1.0 + p_s * (q - 1.0);
  r.estimate = std::pow(base, n);
  r.numeric_error_bound = n > 0 ? n * p_s * std::pow(base, n - 1.0) * q_error : 0.0;
  return r;
}

/// sum_j C(n, j) p^j (1-p)^(n-j) q^j evaluated term by term.
inline double r1_binomial_sum(double p_s, std::size_t n, double q) {
  double acc = 0.0;
  for (std::size_t j = 0; j <= n; ++j) {
    const double logc = std::lgamma(n + 1.0) - std::lgamma(j + 1.0) - std::lgamma(n - j + 1.0);
    double term = std::exp(logc);
    term *= std::pow(p_s * q, static_cast<double>(j)) * std::pow(1.0 - p_s, static_cast<double>(n - j));
    acc += term;
  }
  return acc;
}

inline ReliabilityResult r1_deterministic(double pitch, double band, double q, double q_error = 0.0) {
  detail::require(pitch > 0.0 && band > 0.0, "r1_deterministic: pitch and S must be positive");
  detail::require(q >= 0.0 && q <= 1.0, "r1_deterministic: qbar must lie in [0, 1]");
  const auto n = static_cast<double>(lattice_sites(band, pitch));
  ReliabilityResult r;
  r.estimate = std::pow(q, n);
  r.numeric_error_bound = n > 0 ? n * std::pow(q, n - 1.0) * q_error : 0.0;
  return r;
}

/// Closed form for the models that have one; throws for Lognormal3.
inline ReliabilityResult r1_closed_form(const SpacingModel& m, double band, double q) {
  validate(m);
  if (const auto* p = std::get_if<Poisson>(&m)) return r1_poisson(p->rate, band, q);
  if (const auto* b = std::get_if<BinomialLattice>(&m)) return r1_binomial(b->p_s, std::min(b->zone, band), b->pitch, q);
  if (const auto* d = std::get_if<Deterministic>(&m)) return r1_deterministic(d->pitch, band, q);
  throw DomainError("r1_closed_form: no closed form for " + model_name(m));
}

/// Conditional MC: average of q^k over sampled crack counts k.
inline ReliabilityResult r1_conditional_mc(const SpacingModel& m, double q, double band, std::size_t samples,
                                           std::uint64_t seed, const ParallelOptions& par = {}) {
  detail::require(samples >= 1, "r1_conditional_mc: M must be positive");
  detail::require(q >= 0.0 && q <= 1.0, "r1_conditional_mc: qbar must lie in [0, 1]");
  validate(m);
  const auto stats = chunked_mean(samples, par.chunk, par.threads, seed, [&](Rng& rng) {
    const auto k = sample_positions(m, band, rng).at.size();
    return k == 0 ? 1.0 : std::pow(q, static_cast<double>(k));
  });
  ReliabilityResult r;
  r.estimate = stats.mean;
  r.std_error = stats.std_error();
  r.samples = samples;
  r.metadata = {{"estimator", "r1_conditional_mc"}, {"seed", std::to_string(seed)},
                {"chunk", std::to_string(par.chunk)}};
  return r;
}

inline ReliabilityResult r1_conditional_mc(const SpacingModel& m, double t0, const CrackLengthDist& dist,
                                           const FractureModel& frac, double band, std::size_t samples,
                                           std::uint64_t seed, const ParallelOptions& par = {}) {
  return r1_conditional_mc(m, qbar(t0, dist, frac), band, samples, seed, par);
}

// ---------------------------------------------------------------- q integrals

/// Integrand bounds for the start level, in stationary sd around t0.
inline constexpr double kStartWindowSd = 8.0;
/// Boundaries this far above t0 are never reached within a window.
inline constexpr double kFarBoundarySd = 12.0;

/// int P[tau_y^B > span] f_T(y) dy over y in [t0 - 8 sd, min(B, t0 + 8 sd)],
/// 64-point Gauss-Legendre.
inline double q1_inner(const OuParams& p, double boundary, double span, const RootScanConfig& cfg = {}) {
  const double sd = p.stationary_sd();
  const double lo = p.t0() - kStartWindowSd * sd;
  const double top = p.t0() + kStartWindowSd * sd;
  if (boundary >= p.t0() + kFarBoundarySd * sd)
    return normal_cdf(kStartWindowSd) - normal_cdf(-kStartWindowSd);
  const double hi = std::min(boundary, top);
  if (hi <= lo) return 0.0;
  RootCache cache;
  auto f = [&](double y) {
    if (y >= boundary) return 0.0;
    const auto e = build_expansion(p, boundary, y, span, cfg, &cache);
    return survival(e, span) * stationary_density(p, y);
  };
  return boost::math::quadrature::gauss<double, 64>::integrate(f, lo, hi);
}

struct Q1Options {
  std::size_t samples = 200;
  std::uint64_t seed = 1;
  ParallelOptions par{0, 8};
  RootScanConfig scan{};
};

namespace detail {

/// Stratified Monte Carlo for the integral of f(m) dm over [m(0), m(1)],
/// with m(t) non-decreasing on [0, 1] and f monotone in m. A 32-cell pilot on
/// an equal t-grid bounds the spread of f in each cell; strata are placed at
/// equal steps of the cumulative sqrt(dm |df|) so each carries a similar share
/// of the variance. Every stratum takes two uniform draws in m and the
/// standard error comes from the pair differences.
template <class MassFn, class F>
Estimate stratified_monotone(MassFn&& mass_at, F&& f, std::size_t samples, std::uint64_t seed,
                             const ParallelOptions& par) {
  constexpr std::size_t kPilot = 32;
  std::vector<double> pm(kPilot + 1), pf(kPilot + 1);
  parallel_for(kPilot + 1, par.threads, [&](std::size_t i) {
    pm[i] = mass_at(static_cast<double>(i) / kPilot);
    pf[i] = f(pm[i]);
  });
  for (std::size_t i = 1; i <= kPilot; ++i) pm[i] = std::max(pm[i], pm[i - 1]);
  std::vector<double> cum(kPilot + 1, 0.0);
  for (std::size_t i = 0; i < kPilot; ++i)
    cum[i + 1] = cum[i] + std::sqrt((pm[i + 1] - pm[i]) * std::fabs(pf[i + 1] - pf[i]));

  const std::size_t strata = std::max<std::size_t>(samples / 2, 1);
  std::vector<double> edges(strata + 1);
  edges.front() = pm.front();
  edges.back() = pm.back();
  parallel_for(strata > 1 ? strata - 1 : 0, par.threads, [&](std::size_t k0) {
    const double frac = static_cast<double>(k0 + 1) / static_cast<double>(strata);
    double t = frac;
    if (cum.back() > 0.0) {
      const double target = frac * cum.back();
      const auto it = std::upper_bound(cum.begin(), cum.end(), target);
      const std::size_t i = std::min<std::size_t>(static_cast<std::size_t>(it - cum.begin()), kPilot) - 1;
      const double width = cum[i + 1] - cum[i];
      t = (static_cast<double>(i) + (width > 0.0 ? (target - cum[i]) / width : 0.0)) / kPilot;
    }
    edges[k0 + 1] = mass_at(std::clamp(t, 0.0, 1.0));
  });
  for (std::size_t k = 1; k <= strata; ++k) edges[k] = std::clamp(edges[k], edges[k - 1], pm.back());

  struct Part {
    double sum = 0.0;
    double sq = 0.0;
  };
  const auto parts = map_chunks<Part>(strata, par.chunk, par.threads, seed, [&](std::size_t b, std::size_t e, Rng& rng) {
    Part part;
    for (std::size_t j = b; j < e; ++j) {
      const double w = edges[j + 1] - edges[j];
      const double r1 = uniform_open(rng);
      const double r2 = uniform_open(rng);
      if (w <= 0.0) continue;
      const double v1 = f(edges[j] + w * r1);
      const double v2 = f(edges[j] + w * r2);
      part.sum += w * 0.5 * (v1 + v2);
      part.sq += w * w * (v1 - v2) * (v1 - v2);
    }
    return part;
  });
  double sum = 0.0, sq = 0.0;
  for (const auto& part : parts) {
    sum += part.sum;
    sq += part.sq;
  }
  return {sum, std::sqrt(sq) / 2.0};
}

/// int Phi((B(xi) - mean) / sd) dF(xi), adaptive Gauss-Kronrod in the
/// cumulative hazard y = (xi / scale)^shape, so dF = e^-y dy keeps full
/// precision in the tail. Breakpoints sit at the table knots and where B
/// crosses mean and mean +- 10 sd.
inline Estimate boundary_average(const FractureModel& frac, const CrackLengthDist& dist, double mean, double sd,
                                 double tol) {
  const double k = dist.shape();
  auto hazard = [&](double xi) { return std::pow(xi / dist.scale(), k); };
  const double y_cap = hazard(frac.max_crack());
  auto f = [&](double y) {
    if (y <= 0.0) return 1.0;
    const double xi = std::min(dist.scale() * std::pow(y, 1.0 / k), frac.max_crack());
    return normal_cdf((frac.boundary(xi) - mean) / sd) * std::exp(-y);
  };
  std::vector<double> cuts{0.0, y_cap};
  for (double m : {10.0, 0.0, -10.0}) {
    const double level = mean + m * sd;
    if (level > 0.0) cuts.push_back(std::min(y_cap, hazard(frac.critical_length(level))));
  }
  for (double xi : frac.knot_lengths()) cuts.push_back(std::min(y_cap, hazard(xi)));
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  Estimate out{0.0, 0.0};
  using GK = boost::math::quadrature::gauss_kronrod<double, 15>;
  const double seg_tol = tol / static_cast<double>(cuts.size());
  for (std::size_t i = 1; i < cuts.size(); ++i) {
    const double lo = cuts[i - 1], hi = cuts[i];
    const double mid_level = frac.boundary(std::min(dist.scale() * std::pow(0.5 * (lo + hi), 1.0 / k), frac.max_crack()));
    if (mid_level >= mean + 10.0 * sd) {
      // Phi = 1 to within 1e-23 here
      out.value += std::exp(-lo) * -std::expm1(lo - hi);
      continue;
    }
    if (mid_level <= mean - 10.0 * sd) continue;
    double err = 0.0;
    double part = GK::integrate(f, lo, hi, 0, 0.0, &err);
    err *= 0.5 * (hi - lo);
    if (err > seg_tol) {
      // the tolerance is relative per call; rescale it to an absolute one
      const double rel = std::fabs(part) > seg_tol ? seg_tol / std::fabs(part) : 0.1;
      part = GK::integrate(f, lo, hi, 15, rel, &err);
      err *= hi - lo;
    }
    out.value += part;
    out.error += err + seg_tol * 1e-3;
  }
  out.value += std::exp(-y_cap) * normal_cdf(-mean / sd);
  out.value = std::clamp(out.value, 0.0, 1.0);
  return out;
}

}  // namespace detail

/// q1 by stratified Monte Carlo over crack lengths. Lengths whose boundary
/// lies beyond t0 + 12 sd (inner integral = window mass) or below t0 - 8 sd
/// (inner integral = 0) are integrated exactly. In between, u = F(xi) is
/// stratified along the boundary level and sampled in pairs.
inline Estimate compute_q1(const OuParams& p, const CrackLengthDist& dist, const FractureModel& frac, double span,
                           const Q1Options& opt = {}) {
  detail::require(opt.samples >= 2, "compute_q1: n must be at least 2");
  detail::require(span >= default_min_length(p) * (1.0 - 1e-12), "compute_q1: span below the trusted minimum 0.01/a");
  const double sd = p.stationary_sd();
  const double cap = frac.max_crack();
  const double mass = normal_cdf(kStartWindowSd) - normal_cdf(-kStartWindowSd);
  const double top_level = p.t0() + kFarBoundarySd * sd;
  const double low_level = std::max(p.t0() - kStartWindowSd * sd, 0.0);
  const double u_far = dist.cdf(frac.critical_length(top_level));
  const double u_cap = dist.cdf(cap);
  auto u_at_level = [&](double level) {
    return level <= 0.0 ? u_cap : std::min(u_cap, dist.cdf(frac.critical_length(level)));
  };
  // beyond the cap B = 0; that tail is constant in xi
  const double tail = p.t0() - kStartWindowSd * sd < 0.0 ? (1.0 - u_cap) * q1_inner(p, 0.0, span, opt.scan) : 0.0;
  auto mass_at = [&](double t) {
    return t <= 0.0 ? u_far : std::max(u_far, u_at_level(top_level - (top_level - low_level) * t));
  };
  auto inner_at = [&](double u) {
    const double xi = dist.quantile(std::clamp(u, 1e-300, std::nextafter(1.0, 0.0)));
    return q1_inner(p, frac.boundary(xi), span, opt.scan);
  };
  const auto s = detail::stratified_monotone(mass_at, inner_at, opt.samples, opt.seed, opt.par);
  return {std::clamp(u_far * mass + tail + s.value, 0.0, 1.0), s.error};
}

/// q2 = int Phi((B(xi) - t0)/sd) dF(xi), adaptive Gauss-Kronrod in u = F(xi).
inline Estimate compute_q2(const OuParams& p, const CrackLengthDist& dist, const FractureModel& frac,
                           double tol = 1e-10) {
  return detail::boundary_average(frac, dist, p.t0(), p.stationary_sd(), tol);
}

/// Law of T(gap - span) given T(0) = u.
inline GaussMoments transit_moments(const OuParams& p, double gap, double span, double u) {
  return conditional_moments(p, gap - span, u);
}

struct Q3Options {
  std::size_t samples = 2000;
  std::uint64_t seed = 2;
  ParallelOptions par{0, 256};
  double tol = 1e-12;
};

/// q3(gap) = E[1{u < B(z)} Phi((B(x) - mu(u)) / sd_gap)] with u from the
/// stationary law. The expectation over z is G(u) = F(xi_c(u)) and the one
/// over x is a quadrature, so only u is sampled (stratified). The error adds
/// the largest quadrature error and the mass outside t0 +- 8 sd.
inline Estimate compute_q3(const OuParams& p, const CrackLengthDist& dist, const FractureModel& frac, double gap,
                           double span, const Q3Options& opt = {}) {
  detail::require(gap > span, "compute_q3: gap must exceed the span");
  detail::require(opt.samples >= 1, "compute_q3: n must be positive");
  const double sd = p.stationary_sd();
  const double decay = std::exp(-p.a() * (gap - span));
  const double sd_gap = sd * std::sqrt(-std::expm1(-2.0 * p.a() * (gap - span)));
  std::mutex err_mutex;
  double quad_err = 0.0;
  auto g = [&](double w) {
    const double u = p.t0() + sd * normal_quantile(w);
    const double reach = u <= 0.0 ? 1.0 : dist.cdf(frac.critical_length(u));
    if (reach <= 0.0) return 0.0;
    const auto h = detail::boundary_average(frac, dist, p.t0() + (u - p.t0()) * decay, sd_gap, opt.tol);
    {
      std::lock_guard lock(err_mutex);
      quad_err = std::max(quad_err, h.error);
    }
    return reach * h.value;
  };
  const double outside = normal_cdf(-kStartWindowSd);
  auto mass_at = [&](double t) { return normal_cdf(kStartWindowSd * (2.0 * t - 1.0)); };
  const auto s = detail::stratified_monotone(mass_at, g, opt.samples, opt.seed, opt.par);
  const double low_tail = outside * g(outside);
  return {std::clamp(s.value + low_tail, 0.0, 1.0), s.error + quad_err + outside};
}

/// Gaps equal after rounding to 1e-9 m share a q3 value.
inline std::int64_t gap_key(double gap) { return std::llround(gap * 1e9); }

struct QIntegrals {
  Estimate q1;
  Estimate q2;
  std::map<std::int64_t, Estimate> q3;

  const Estimate& q3_at(double gap) const {
    const auto it = q3.find(gap_key(gap));
    if (it == q3.end()) throw DomainError("qbar_chain: no q3 value for gap " + std::to_string(gap));
    return it->second;
  }
};

/// Decorrelation threshold a (gap - span) beyond which q3 = q2^2.
inline constexpr double kDecorrelated = 40.0;

/// Computes q1, q2 once and q3 per distinct gap on demand; thread-safe.
class QProvider {
 public:
  QProvider(OuParams p, CrackLengthDist dist, const FractureModel& frac, double span, Q1Options q1opt,
            Q3Options q3opt)
      : p_(p), dist_(dist), frac_(&frac), span_(span), q3opt_(q3opt) {
    q_.q1 = compute_q1(p_, dist_, *frac_, span_, q1opt);
    q_.q2 = compute_q2(p_, dist_, *frac_);
  }

  /// Uses precomputed q1 and q2.
  QProvider(OuParams p, CrackLengthDist dist, const FractureModel& frac, double span, Estimate q1, Estimate q2,
            Q3Options q3opt)
      : p_(p), dist_(dist), frac_(&frac), span_(span), q3opt_(q3opt) {
    q_.q1 = q1;
    q_.q2 = q2;
  }

  double span() const { return span_; }
  const OuParams& params() const { return p_; }

  Estimate q3(double gap) {
    const auto key = gap_key(gap);
    {
      std::lock_guard lock(mutex_);
      if (auto it = q_.q3.find(key); it != q_.q3.end()) return it->second;
    }
    Estimate e;
    if (p_.a() * (gap - span_) >= kDecorrelated) {
      e = {q_.q2.value * q_.q2.value, 2.0 * q_.q2.value * q_.q2.error};
    } else {
      Q3Options o = q3opt_;
      o.seed = derive_seed(q3opt_.seed, static_cast<std::uint64_t>(key));
      e = compute_q3(p_, dist_, *frac_, gap, span_, o);
    }
    std::lock_guard lock(mutex_);
    q_.q3.emplace(key, e);
    return e;
  }

  QIntegrals snapshot() const {
    std::lock_guard lock(mutex_);
    return q_;
  }

 private:
  OuParams p_;
  CrackLengthDist dist_;
  const FractureModel* frac_;
  double span_;
  Q3Options q3opt_;
  mutable std::mutex mutex_;
  QIntegrals q_;
};

namespace detail {

template <class Q3Fn>
double chain_product(double q1, double q2, const std::vector<double>& gaps, Q3Fn&& q3_of_gap) {
  if (gaps.empty()) return q1;
  std::map<std::int64_t, std::pair<double, std::size_t>> groups;
  for (double g : gaps) {
    auto& slot = groups[gap_key(g)];
    slot.first = g;
    ++slot.second;
  }
  const double q2sq = q2 * q2;
  double acc = q1;
  for (const auto& [key, entry] : groups)
    acc *= std::pow(q1 * q3_of_gap(entry.first) / q2sq, static_cast<double>(entry.second));
  return std::clamp(acc, 0.0, 1.0);
}

}  // namespace detail

/// qbar_k = q1 prod_i (q1 q3(gap_i) / q2^2); gaps with equal keys are
/// combined by pow.
inline double qbar_chain(const QIntegrals& q, const std::vector<double>& gaps) {
  return detail::chain_product(q.q1.value, q.q2.value, gaps, [&q](double g) { return q.q3_at(g).value; });
}

/// Total-differential bound (eps_q1 + 2 eps_q2 + eps_q3) k_max.
inline double error_bound(double eps_q1, double eps_q2, double eps_q3_max, double k_max) {
  detail::require(eps_q1 >= 0.0 && eps_q2 >= 0.0 && eps_q3_max >= 0.0 && k_max >= 0.0,
                  "error_bound: inputs must be non-negative");
  return (eps_q1 + 2.0 * eps_q2 + eps_q3_max) * k_max;
}

/// Width of the MC confidence band used as the per-integral error.
inline constexpr double kErrorSe = 3.0;

inline double q_error_bound(const QIntegrals& q, const std::vector<double>& used_gaps, double k_max) {
  double e3 = 0.0;
  for (double g : used_gaps) e3 = std::max(e3, kErrorSe * q.q3_at(g).error);
  return error_bound(kErrorSe * q.q1.error, kErrorSe * q.q2.error, e3, k_max);
}

inline ReliabilityResult r2_deterministic(double pitch, double band, const QIntegrals& q, double span) {
  detail::require(pitch > span, "r2_deterministic: pitch must exceed the span");
  const auto m = lattice_sites(band, pitch);
  ReliabilityResult r;
  if (m == 0) {
    r.estimate = 1.0;
    return r;
  }
  if (m == 1) {
    r.estimate = q.q1.value;
    r.numeric_error_bound = error_bound(kErrorSe * q.q1.error, 0.0, 0.0, 1.0);
    return r;
  }
  const double q2sq = q.q2.value * q.q2.value;
  r.estimate = std::clamp(q.q1.value * std::pow(q.q1.value * q.q3_at(pitch).value / q2sq, static_cast<double>(m - 1)),
                          0.0, 1.0);
  r.numeric_error_bound = q_error_bound(q, {pitch}, static_cast<double>(m));
  return r;
}

inline ReliabilityResult r2_deterministic(double pitch, double band, QProvider& qp) {
  if (lattice_sites(band, pitch) >= 2) qp.q3(pitch);
  return r2_deterministic(pitch, band, qp.snapshot(), qp.span());
}

/// Conditional MC over crack positions with the q-chain as the conditional
/// survival probability.
inline ReliabilityResult r2_conditional_mc(const SpacingModel& m, QProvider& qp, double band, std::size_t samples,
                                           std::uint64_t seed, const ParallelOptions& par = {}) {
  detail::require(samples >= 1, "r2_conditional_mc: M must be positive");
  require_spacing_above(m, qp.span());
  const auto q0 = qp.snapshot();
  const double q1 = q0.q1.value;
  const double q2 = q0.q2.value;
  struct Part {
    SampleStats stats;
    std::size_t k_max = 0;
    std::vector<double> gaps;
  };
  auto parts = map_chunks<Part>(samples, par.chunk, par.threads, seed, [&](std::size_t b, std::size_t e, Rng& rng) {
    Part part;
    for (std::size_t i = b; i < e; ++i) {
      const auto pos = sample_positions(m, band, rng);
      if (pos.at.empty()) {
        part.stats.push(1.0);
        continue;
      }
      std::vector<double> gaps;
      gaps.reserve(pos.at.size());
      for (std::size_t j = 1; j < pos.at.size(); ++j) gaps.push_back(pos.at[j] - pos.at[j - 1]);
      part.k_max = std::max(part.k_max, pos.at.size());
      part.stats.push(detail::chain_product(q1, q2, gaps, [&qp](double g) { return qp.q3(g).value; }));
      part.gaps.insert(part.gaps.end(), gaps.begin(), gaps.end());
      std::sort(part.gaps.begin(), part.gaps.end());
      part.gaps.erase(std::unique(part.gaps.begin(), part.gaps.end(),
                                  [](double x, double y) { return gap_key(x) == gap_key(y); }),
                      part.gaps.end());
    }
    return part;
  });
  SampleStats total;
  std::size_t k_max = 0;
  std::vector<double> used;
  for (const auto& part : parts) {
    total.merge(part.stats);
    k_max = std::max(k_max, part.k_max);
    used.insert(used.end(), part.gaps.begin(), part.gaps.end());
  }
  const auto q = qp.snapshot();
  ReliabilityResult r;
  r.estimate = total.mean;
  r.std_error = total.std_error();
  r.samples = samples;
  r.numeric_error_bound = k_max == 0 ? 0.0 : q_error_bound(q, used, static_cast<double>(k_max));
  r.metadata = {{"estimator", "r2_conditional_mc"}, {"seed", std::to_string(seed)},
                {"chunk", std::to_string(par.chunk)}, {"k_max", std::to_string(k_max)}};
  return r;
}

// ---------------------------------------------------------------- critical tension

/// Tension at which a crack of length xi is exactly critical.
inline double tension_for_length(double xi, const FractureModel& frac) {
  return frac.geometry().thickness * frac.material().k_c / (std::sqrt(std::numbers::pi) * frac.g(xi));
}

/// Largest T0 with r1 >= q for Poisson cracks.
inline double critical_tension_poisson(double rate, double band, double q, const CrackLengthDist& dist,
                                       const FractureModel& frac) {
  detail::require(q > 0.0 && q < 1.0, "critical_tension_poisson: q must lie in (0, 1)");
  detail::require(rate > 0.0 && band > 0.0, "critical_tension_poisson: rate and S must be positive");
  const double target = std::log(q) / (rate * band) + 1.0;
  if (!(target > 0.0 && target < 1.0))
    throw DomainError("critical_tension_poisson: log(q)/(rate S) + 1 = " + std::to_string(target) +
                      " is outside (0, 1); no tension reaches the required reliability");
  const double xi = dist.quantile(target);
  if (xi >= frac.max_crack())
    throw DomainError("critical_tension_poisson: required crack quantile exceeds the supported depth");
  return tension_for_length(xi, frac);
}

/// Largest T0 with r1 >= q for binomial lattice cracks; +inf without sites.
inline double critical_tension_binomial(double p_s, double zone, double pitch, double q, const CrackLengthDist& dist,
                                        const FractureModel& frac) {
  detail::require(q > 0.0 && q < 1.0, "critical_tension_binomial: q must lie in (0, 1)");
  detail::require(p_s > 0.0 && p_s <= 1.0, "critical_tension_binomial: p_s must lie in (0, 1]");
  const auto n = lattice_sites(zone, pitch);
  if (n == 0) return std::numeric_limits<double>::infinity();
  const double target = (std::pow(q, 1.0 / static_cast<double>(n)) - 1.0) / p_s + 1.0;
  if (!(target > 0.0 && target < 1.0))
    throw DomainError("critical_tension_binomial: (q^(1/n) - 1)/p_s + 1 = " + std::to_string(target) +
                      " is outside (0, 1); no tension reaches the required reliability");
  const double xi = dist.quantile(target);
  if (xi >= frac.max_crack())
    throw DomainError("critical_tension_binomial: required crack quantile exceeds the supported depth");
  return tension_for_length(xi, frac);
}

inline double critical_tension_deterministic(double pitch, double band, double q, const CrackLengthDist& dist,
                                             const FractureModel& frac) {
  return critical_tension_binomial(1.0, band, pitch, q, dist, frac);
}

struct CriticalTension {
  double tension;
  double bracket_width;
  bool noise_limited;  // stopped because |r - q| fell inside 3 SE
};

/// Bisection on t0 for reliability(t0) = q; `reliability` is non-increasing.
inline CriticalTension critical_tension_numeric(const std::function<ReliabilityResult(double)>& reliability, double q,
                                                double lo, double hi, double rel_tol = 1e-8) {
  detail::require(q > 0.0 && q < 1.0, "critical_tension_numeric: q must lie in (0, 1)");
  detail::require(lo > 0.0 && hi > lo, "critical_tension_numeric: need 0 < lo < hi");
  const auto rlo = reliability(lo);
  const auto rhi = reliability(hi);
  if (!(rlo.estimate >= q && rhi.estimate <= q))
    throw DomainError("critical_tension_numeric: reliability at the bracket ends (" + std::to_string(rlo.estimate) +
                      ", " + std::to_string(rhi.estimate) + ") does not straddle " + std::to_string(q));
  for (int it = 0; it < 200 && hi - lo > rel_tol * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    const auto r = reliability(mid);
    if (r.std_error > 0.0 && std::fabs(r.estimate - q) <= kErrorSe * r.std_error)
      return {mid, hi - lo, true};
    (r.estimate >= q ? lo : hi) = mid;
  }
  return {0.5 * (lo + hi), hi - lo, false};
}

}  // namespace webrel
