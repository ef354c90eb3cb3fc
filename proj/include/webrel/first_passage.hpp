#pragma once

// Spectral expansion of the first-passage survival function of a stationary
// OU process started at y below a level x:
//
//   P[tau > s] = sum_n c_n exp(-lambda_n s),   lambda_n = a nu_n,
//
// where nu_n are the positive roots of nu -> H_nu(xbar / sqrt 2) and
// c_n = -H_{nu_n}(ybar / sqrt 2) / (nu_n dH/dnu), with xbar, ybar the levels
// in stationary-sd units, sign-flipped.

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstdint>
#include <memory>
#include <mutex>
#include <numbers>
#include <unordered_map>
#include <vector>

#include "webrel/errors.hpp"
#include "webrel/special_functions.hpp"
#include "webrel/stochastic_tension.hpp"

namespace webrel {

/// Terms are dropped once two consecutive ones fall below this at the horizon.
inline constexpr double kTruncationTol = 1e-16;

/// Roots nu_n of H_nu(xbar / sqrt 2) and the order-derivative at each.
/// `exhausted` marks a set cut short by the scan ceiling.
struct RootSet {
  double xbar = 0.0;
  std::vector<double> nu;
  std::vector<double> dh;
  bool exhausted = false;
};

inline void extend_root_set(RootSet& rs, std::size_t count, const RootScanConfig& cfg) {
  if (rs.nu.size() >= count || rs.exhausted) return;
  const double z = rs.xbar / std::numbers::sqrt2;
  try {
    extend_hermite_roots(z, rs.nu, count, cfg);
  } catch (const ScanExhausted&) {
    rs.exhausted = true;
  }
  for (std::size_t i = rs.dh.size(); i < rs.nu.size(); ++i) rs.dh.push_back(hermite_h_dnu(rs.nu[i], z));
}

/// Root sets keyed by the exact bits of xbar. Concurrent readers; a writer
/// only replaces an entry with a longer one.
class RootCache {
 public:
  std::shared_ptr<const RootSet> get(double xbar, std::size_t count, const RootScanConfig& cfg) {
    const std::uint64_t key = std::bit_cast<std::uint64_t>(xbar);
    std::shared_ptr<const RootSet> found;
    {
      std::lock_guard lock(mutex_);
      if (auto it = map_.find(key); it != map_.end()) found = it->second;
    }
    if (found && (found->nu.size() >= count || found->exhausted)) return found;
    auto fresh = found ? std::make_shared<RootSet>(*found) : std::make_shared<RootSet>();
    fresh->xbar = xbar;
    extend_root_set(*fresh, count, cfg);
    std::lock_guard lock(mutex_);
    auto& slot = map_[key];
    if (!slot || slot->nu.size() < fresh->nu.size() || (fresh->exhausted && !slot->exhausted)) slot = fresh;
    return fresh;
  }

  std::size_t size() const {
    std::lock_guard lock(mutex_);
    return map_.size();
  }

  void clear() {
    std::lock_guard lock(mutex_);
    map_.clear();
  }

 private:
  mutable std::mutex mutex_;
  std::unordered_map<std::uint64_t, std::shared_ptr<const RootSet>> map_;
};

/// Number of survival values clamped into [0, 1] since process start.
inline std::atomic<std::uint64_t>& clamp_counter() {
  static std::atomic<std::uint64_t> n{0};
  return n;
}

inline std::uint64_t clamp_events() { return clamp_counter().load(); }

struct SpectralTerm {
  double c;
  double lambda;
};

struct SurvivalExpansion {
  double boundary;
  double start;
  double xbar;
  double ybar;
  double horizon;
  OuParams params;
  std::vector<SpectralTerm> terms;
};

/// Smallest evaluation length for which expansions are built by default.
inline double default_min_length(const OuParams& p) { return 0.01 / p.a(); }

namespace detail {

/// Coefficient terms for a standardized start ybar against a root set,
/// growing the root set until the truncation rule fires at `horizon`.
template <class RootSource>
std::vector<SpectralTerm> spectral_terms(double a, double ybar, double horizon, RootSource&& roots_for) {
  const double zy = ybar / std::numbers::sqrt2;
  std::vector<SpectralTerm> terms;
  std::size_t want = 8;
  int small_run = 0;
  for (;;) {
    const RootSet& rs = roots_for(want);
    for (std::size_t n = terms.size(); n < rs.nu.size(); ++n) {
      const double nu = rs.nu[n];
      const double denom = nu * rs.dh[n];
      const double lambda = a * nu;
      const double weight = std::exp(-lambda * horizon);
      const double abs_tol = 1e-3 * kTruncationTol * std::fabs(denom) / std::max(weight, 1e-300);
      const double h = hermite_h_ext(nu, zy, 1e-13, abs_tol).value;
      const double c = -h / denom;
      terms.push_back({c, lambda});
      small_run = std::fabs(c) * weight <= kTruncationTol ? small_run + 1 : 0;
      if (small_run >= 2) return terms;
    }
    if (rs.exhausted)
      throw ScanExhausted("build_expansion: scan ceiling reached after " + std::to_string(rs.nu.size()) +
                              " roots before the truncation rule fired; raise max_order or the horizon",
                          rs.nu);
    want *= 2;
  }
}

}  // namespace detail

/// Builds the expansion for P[tau > s], s >= horizon. Roots are taken from
/// `cache` when given.
inline SurvivalExpansion build_expansion(const OuParams& p, double boundary, double start, double horizon,
                                         const RootScanConfig& cfg = {}, RootCache* cache = nullptr) {
  detail::require(std::isfinite(boundary) && std::isfinite(start), "build_expansion: levels must be finite");
  detail::require(start < boundary, "build_expansion: start must lie strictly below the boundary");
  detail::require(horizon > 0.0, "build_expansion: horizon must be positive");
  detail::require(horizon >= default_min_length(p) * (1.0 - 1e-12),
                  "build_expansion: horizon below the trusted minimum 0.01/a");
  SurvivalExpansion e{boundary, start, p.standardize(boundary), p.standardize(start), horizon, p, {}};
  std::shared_ptr<const RootSet> held;
  RootSet local{e.xbar, {}, {}};
  auto roots_for = [&](std::size_t count) -> const RootSet& {
    if (cache) {
      held = cache->get(e.xbar, count, cfg);
      return *held;
    }
    extend_root_set(local, count, cfg);
    return local;
  };
  e.terms = detail::spectral_terms(p.a(), e.ybar, horizon, roots_for);
  return e;
}

inline double clamp_probability(double v) {
  if (v < 0.0 || v > 1.0 || std::isnan(v)) {
    clamp_counter().fetch_add(1, std::memory_order_relaxed);
    return std::isnan(v) ? 0.0 : std::clamp(v, 0.0, 1.0);
  }
  return v;
}

inline double sum_terms(const std::vector<SpectralTerm>& terms, double s) {
  double acc = 0.0;
  for (auto it = terms.rbegin(); it != terms.rend(); ++it) acc += it->c * std::exp(-it->lambda * s);
  return acc;
}

/// P[tau > s] for s >= horizon, clamped to [0, 1].
inline double survival(const SurvivalExpansion& e, double s) {
  detail::require(s >= e.horizon, "survival: s below the expansion horizon");
  return clamp_probability(sum_terms(e.terms, s));
}

}  // namespace webrel
