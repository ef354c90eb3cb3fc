#pragma once

#include <boost/math/distributions/binomial.hpp>

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "webrel/errors.hpp"
#include "webrel/random.hpp"

namespace webrel {

/// Homogeneous Poisson cracks, `rate` per metre.
struct Poisson {
  double rate;
};

/// Cracks on lattice sites pitch, 2 pitch, ... within `zone`, each site
/// occupied independently with probability p_s.
struct BinomialLattice {
  double pitch;
  double p_s;
  double zone;
};

/// Cracks every `pitch` metres.
struct Deterministic {
  double pitch;
};

/// Gaps shift + LogNormal(log_scale, shape).
struct Lognormal3 {
  double log_scale;
  double shape;
  double shift;

  /// Parameters matching a target mean gap and coefficient of variation.
  static Lognormal3 from_mean_cv(double mean, double cv, double shift) {
    if (!(mean > shift) || !(cv > 0.0) || !(shift >= 0.0))
      throw DomainError("Lognormal3: need mean > shift >= 0 and cv > 0");
    const double excess = mean - shift;
    const double sd = cv * mean;
    const double s2 = std::log1p(sd * sd / (excess * excess));
    return {std::log(excess) - 0.5 * s2, std::sqrt(s2), shift};
  }
};

using SpacingModel = std::variant<Poisson, BinomialLattice, Deterministic, Lognormal3>;

inline std::string model_name(const SpacingModel& m) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Poisson>) return "poisson";
        else if constexpr (std::is_same_v<T, BinomialLattice>) return "binomial";
        else if constexpr (std::is_same_v<T, Deterministic>) return "deterministic";
        else return "lognormal3";
      },
      m);
}

inline void validate(const SpacingModel& m) {
  std::visit(
      [](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Poisson>) {
          detail::require(v.rate >= 0.0 && std::isfinite(v.rate), "Poisson: rate must be non-negative");
        } else if constexpr (std::is_same_v<T, BinomialLattice>) {
          detail::require(v.pitch > 0.0, "BinomialLattice: pitch must be positive");
          detail::require(v.p_s > 0.0 && v.p_s <= 1.0, "BinomialLattice: p_s must lie in (0, 1]");
          detail::require(v.zone >= 0.0, "BinomialLattice: zone must be non-negative");
        } else if constexpr (std::is_same_v<T, Deterministic>) {
          detail::require(v.pitch > 0.0, "Deterministic: pitch must be positive");
        } else {
          detail::require(v.shape > 0.0 && std::isfinite(v.log_scale), "Lognormal3: shape must be positive");
          detail::require(v.shift >= 0.0, "Lognormal3: shift must be non-negative");
        }
      },
      m);
}

/// Infimum of the gap support.
inline double min_gap(const SpacingModel& m) {
  return std::visit(
      [](const auto& v) -> double {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Poisson>) return 0.0;
        else if constexpr (std::is_same_v<T, Lognormal3>) return v.shift;
        else return v.pitch;
      },
      m);
}

/// Rejects models that can place two cracks within `span` of each other.
inline void require_spacing_above(const SpacingModel& m, double span) {
  validate(m);
  if (std::holds_alternative<Poisson>(m))
    throw DomainError("spacing guard: Poisson gaps can be shorter than the span; not allowed with stochastic tension");
  const bool ok = std::holds_alternative<Lognormal3>(m) ? min_gap(m) >= span : min_gap(m) > span;
  if (!ok)
    throw DomainError("spacing guard: " + model_name(m) + " allows gaps <= span " + std::to_string(span));
}

struct GapMoments {
  double mean;
  double variance;
};

inline GapMoments moments(const SpacingModel& m) {
  validate(m);
  return std::visit(
      [](const auto& v) -> GapMoments {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Poisson>) {
          return {1.0 / v.rate, 1.0 / (v.rate * v.rate)};
        } else if constexpr (std::is_same_v<T, BinomialLattice>) {
          return {v.pitch / v.p_s, v.pitch * v.pitch * (1.0 - v.p_s) / (v.p_s * v.p_s)};
        } else if constexpr (std::is_same_v<T, Deterministic>) {
          return {v.pitch, 0.0};
        } else {
          const double s2 = v.shape * v.shape;
          return {v.shift + std::exp(v.log_scale + 0.5 * s2), std::exp(2.0 * v.log_scale + s2) * std::expm1(s2)};
        }
      },
      m);
}

/// Crack positions within the band and the first position past it
/// (+inf when the model places no further cracks).
struct Positions {
  std::vector<double> at;
  double overshoot;
};

inline double draw_gap(const SpacingModel& m, Rng& rng) {
  return std::visit(
      [&rng](const auto& v) -> double {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Poisson>) {
          if (v.rate == 0.0) return std::numeric_limits<double>::infinity();
          return -std::log(uniform_open(rng)) / v.rate;
        } else if constexpr (std::is_same_v<T, BinomialLattice>) {
          if (v.p_s >= 1.0) return v.pitch;
          const double trials = std::ceil(std::log(uniform_open(rng)) / std::log1p(-v.p_s));
          return v.pitch * std::max(1.0, trials);
        } else if constexpr (std::is_same_v<T, Deterministic>) {
          return v.pitch;
        } else {
          return v.shift + std::exp(v.log_scale + v.shape * standard_normal(rng));
        }
      },
      m);
}

/// Renewal sampling over [0, band_length]; the first gap has the same law as
/// the others.
inline Positions sample_positions(const SpacingModel& m, double band_length, Rng& rng) {
  validate(m);
  detail::require(band_length > 0.0, "sample_positions: band length must be positive");
  Positions out{{}, 0.0};
  double limit = band_length;
  if (const auto* b = std::get_if<BinomialLattice>(&m)) limit = std::min(band_length, b->zone);
  double s = 0.0;
  if (const auto* d = std::get_if<Deterministic>(&m)) {
    const auto k = static_cast<std::size_t>(std::floor(band_length / d->pitch));
    out.at.reserve(k);
    for (std::size_t i = 1; i <= k; ++i) out.at.push_back(static_cast<double>(i) * d->pitch);
    out.overshoot = static_cast<double>(k + 1) * d->pitch;
    return out;
  }
  if (const auto* b = std::get_if<BinomialLattice>(&m)) {
    // lattice index arithmetic keeps positions exact multiples of the pitch
    const auto sites = static_cast<std::uint64_t>(std::floor(limit / b->pitch));
    std::uint64_t idx = 0;
    for (;;) {
      const auto step = static_cast<std::uint64_t>(std::llround(draw_gap(m, rng) / b->pitch));
      idx += step;
      if (idx > sites) break;
      out.at.push_back(static_cast<double>(idx) * b->pitch);
    }
    out.overshoot = std::numeric_limits<double>::infinity();
    if (limit >= band_length && static_cast<double>(idx) * b->pitch <= b->zone)
      out.overshoot = static_cast<double>(idx) * b->pitch;
    return out;
  }
  for (;;) {
    s += draw_gap(m, rng);
    if (s > limit) break;
    out.at.push_back(s);
  }
  out.overshoot = s;
  return out;
}

inline Positions sample_positions(const SpacingModel& m, double band_length, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  return sample_positions(m, band_length, rng);
}

/// Distribution of the crack count; `samples` is 0 when exact.
struct CountPmf {
  std::vector<double> p;
  std::size_t samples = 0;

  double mean() const {
    double acc = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) acc += static_cast<double>(k) * p[k];
    return acc;
  }
};

inline CountPmf count_pmf(const SpacingModel& m, double band_length, std::size_t samples = 100000,
                          std::uint64_t seed = 0) {
  validate(m);
  detail::require(band_length > 0.0, "count_pmf: band length must be positive");
  CountPmf out;
  if (const auto* p = std::get_if<Poisson>(&m)) {
    const double mu = p->rate * band_length;
    double logp = -mu;
    double tail = 1.0;
    for (std::size_t k = 0;; ++k) {
      const double pk = std::exp(logp);
      out.p.push_back(pk);
      tail -= pk;
      if (static_cast<double>(k) > mu && (tail <= 1e-18 || pk < 1e-300)) break;
      logp += std::log(mu) - std::log(static_cast<double>(k + 1));
    }
    return out;
  }
  if (const auto* b = std::get_if<BinomialLattice>(&m)) {
    const auto n = static_cast<std::size_t>(std::floor(std::min(band_length, b->zone) / b->pitch));
    const boost::math::binomial_distribution<double> dist(static_cast<double>(n), b->p_s);
    for (std::size_t k = 0; k <= n; ++k) out.p.push_back(boost::math::pdf(dist, static_cast<double>(k)));
    return out;
  }
  if (const auto* d = std::get_if<Deterministic>(&m)) {
    const auto n = static_cast<std::size_t>(std::floor(band_length / d->pitch));
    out.p.assign(n + 1, 0.0);
    out.p[n] = 1.0;
    return out;
  }
  detail::require(samples >= 1, "count_pmf: samples must be positive");
  Rng rng = make_rng(seed);
  std::vector<std::size_t> hist;
  for (std::size_t i = 0; i < samples; ++i) {
    const auto k = sample_positions(m, band_length, rng).at.size();
    if (hist.size() <= k) hist.resize(k + 1, 0);
    ++hist[k];
  }
  for (auto h : hist) out.p.push_back(static_cast<double>(h) / static_cast<double>(samples));
  out.samples = samples;
  return out;
}

}  // namespace webrel
