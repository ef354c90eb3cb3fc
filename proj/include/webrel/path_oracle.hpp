#pragma once

// Brute-force path simulation used to validate the spectral and conditional
// Monte Carlo estimators.
//
// Paths advance by exact OU transitions on a fixed grid. With the bridge
// correction on, each step that stays below the boundary multiplies the
// path weight by 1 - exp(-2 (b - v1)(b - v2) / var_step), the probability
// that a Brownian bridge with the step's variance does not touch b. The
// estimate is the mean weight.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "webrel/crack_occurrence.hpp"
#include "webrel/errors.hpp"
#include "webrel/fracture_mechanics.hpp"
#include "webrel/parallel.hpp"
#include "webrel/random.hpp"
#include "webrel/reliability.hpp"
#include "webrel/stochastic_tension.hpp"

namespace webrel {

struct PathOptions {
  double step = 0.0;  // 0 selects 1e-3 min(span, 1/a)
  bool bridge = true;
  ParallelOptions par{0, 1024};
};

inline double default_step(const OuParams& p, double span) { return 1e-3 * std::min(span, 1.0 / p.a()); }

namespace detail {

/// Bridge non-crossing factor for one step of variance var from v1 to v2.
inline double bridge_factor(double b, double v1, double v2, double var) {
  const double e = 2.0 * (b - v1) * (b - v2) / var;
  return e > 745.0 ? 1.0 : -std::expm1(-e);
}

/// Walks `steps` grid steps from x below level b; returns the survival weight
/// and leaves x at the final state (unspecified once the weight is 0).
inline double walk(const ExactStep& st, double b, std::size_t steps, bool bridge, double& x, Rng& rng) {
  const double var = st.noise_sd * st.noise_sd;
  double w = 1.0;
  for (std::size_t k = 0; k < steps; ++k) {
    const double nx = st(x, standard_normal(rng));
    if (nx >= b) return 0.0;
    if (bridge) w *= bridge_factor(b, x, nx, var);
    x = nx;
  }
  return w;
}

}  // namespace detail

/// Survival P[tau > s] for each s in `horizons` (sorted ascending) from one
/// set of paths started at `start`.
inline std::vector<Estimate> simulate_survival_curve(const OuParams& p, double boundary, double start,
                                                     const std::vector<double>& horizons, std::size_t n_paths,
                                                     std::uint64_t seed, const PathOptions& opt = {}) {
  detail::require(start < boundary, "simulate_survival: start must lie below the boundary");
  detail::require(!horizons.empty(), "simulate_survival: need at least one horizon");
  detail::require(std::is_sorted(horizons.begin(), horizons.end()) && horizons.front() > 0.0,
                  "simulate_survival: horizons must be positive and ascending");
  detail::require(n_paths >= 1, "simulate_survival: n_paths must be positive");
  const double step = opt.step > 0.0 ? opt.step : default_step(p, horizons.front());
  detail::require(step > 0.0, "simulate_survival: step must be positive");
  std::vector<std::size_t> marks;
  for (double h : horizons) marks.push_back(static_cast<std::size_t>(std::max(1.0, std::round(h / step))));
  const ExactStep st(p, step);

  using Parts = std::vector<SampleStats>;
  const auto parts = map_chunks<Parts>(n_paths, opt.par.chunk, opt.par.threads, seed,
                                       [&](std::size_t b, std::size_t e, Rng& rng) {
                                         Parts acc(marks.size());
                                         for (std::size_t i = b; i < e; ++i) {
                                           double x = start;
                                           double w = 1.0;
                                           std::size_t done = 0;
                                           for (std::size_t m = 0; m < marks.size(); ++m) {
                                             if (w > 0.0) {
                                               w *= detail::walk(st, boundary, marks[m] - done, opt.bridge, x, rng);
                                               done = marks[m];
                                             }
                                             acc[m].push(w);
                                           }
                                         }
                                         return acc;
                                       });
  std::vector<Estimate> out(marks.size());
  for (std::size_t m = 0; m < marks.size(); ++m) {
    SampleStats s;
    for (const auto& part : parts) s.merge(part[m]);
    out[m] = {s.mean, s.std_error()};
  }
  return out;
}

inline Estimate simulate_survival(const OuParams& p, double boundary, double start, double span, std::size_t n_paths,
                                  std::uint64_t seed, const PathOptions& opt = {}) {
  return simulate_survival_curve(p, boundary, start, {span}, n_paths, seed, opt).front();
}

/// Survival of a crack of random length over its window, with the window
/// start drawn from the stationary law.
inline Estimate simulate_q1(const OuParams& p, const CrackLengthDist& dist, const FractureModel& frac, double span,
                            std::size_t n_paths, std::uint64_t seed, const PathOptions& opt = {}) {
  const double step = opt.step > 0.0 ? opt.step : default_step(p, span);
  const auto steps = static_cast<std::size_t>(std::max(1.0, std::round(span / step)));
  const ExactStep st(p, span / static_cast<double>(steps));
  const auto stats = chunked_mean(n_paths, opt.par.chunk, opt.par.threads, seed, [&](Rng& rng) {
    const double b = frac.boundary(dist.sample(rng));
    double x = p.t0() + p.stationary_sd() * standard_normal(rng);
    if (x >= b) return 0.0;
    return detail::walk(st, b, steps, opt.bridge, x, rng);
  });
  return {stats.mean, stats.std_error()};
}

/// Levels this far above both the current state and t0 are not reached
/// within one window; the window is crossed in one exact jump.
inline constexpr double kSkipWindowSd = 20.0;

/// Full-band reliability: one stationary path across all crack windows.
inline Estimate simulate_r2(const SpacingModel& m, const OuParams& p, const CrackLengthDist& dist,
                            const FractureModel& frac, double band, std::size_t n_paths, std::uint64_t seed,
                            const PathOptions& opt = {}) {
  const double span = frac.geometry().span;
  require_spacing_above(m, span);
  detail::require(n_paths >= 1, "simulate_r2: n_paths must be positive");
  const double step = opt.step > 0.0 ? opt.step : default_step(p, span);
  const auto steps = static_cast<std::size_t>(std::max(1.0, std::round(span / step)));
  const ExactStep fine(p, span / static_cast<double>(steps));
  const ExactStep whole(p, span);
  const double sd = p.stationary_sd();
  const auto stats = chunked_mean(n_paths, opt.par.chunk, opt.par.threads, seed, [&](Rng& rng) {
    const auto pos = sample_positions(m, band, rng);
    double x = p.t0() + sd * standard_normal(rng);
    double w = 1.0;
    for (std::size_t i = 0; i < pos.at.size(); ++i) {
      if (i > 0) {
        const ExactStep jump(p, pos.at[i] - pos.at[i - 1] - span);
        x = jump(x, standard_normal(rng));
      }
      const double b = frac.boundary(dist.sample(rng));
      if (x >= b) return 0.0;
      if (b - std::max(p.t0(), x) >= kSkipWindowSd * sd) {
        x = whole(x, standard_normal(rng));
        continue;
      }
      w *= detail::walk(fine, b, steps, opt.bridge, x, rng);
      if (w == 0.0) return 0.0;
    }
    return w;
  });
  return {stats.mean, stats.std_error()};
}

}  // namespace webrel
