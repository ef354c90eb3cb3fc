#pragma once

// Stationary Ornstein-Uhlenbeck tension model
//
//   dT(s) = a (t0 - T(s)) ds + sigma dW(s),   T(0) ~ N(t0, sigma^2 / (2a))
//
// The "time" variable s is the travelled length of web in metres, so the
// reversion rate a is in 1/m and sigma in N/(m sqrt(m)).

#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <variant>
#include <vector>

#include "webrel/errors.hpp"
#include "webrel/normal.hpp"
#include "webrel/random.hpp"

namespace webrel {

/// Volatility giving stationary coefficient of variation c_t:
/// sigma / sqrt(2a) = c_t * t0.
inline double sigma_from_cv(double t0, double a, double c_t) {
  detail::require(t0 > 0.0 && a > 0.0 && c_t > 0.0,
                  "sigma_from_cv: t0, a and c_t must be strictly positive");
  return c_t * t0 * std::sqrt(2.0 * a);
}

class OuParams {
 public:
  OuParams(double t0, double a, double sigma) : t0_(t0), a_(a), sigma_(sigma) {
    detail::require(t0 > 0.0 && a > 0.0 && sigma > 0.0,
                    "OuParams: t0, a and sigma must be strictly positive");
    detail::require(std::isfinite(t0) && std::isfinite(a) && std::isfinite(sigma),
                    "OuParams: parameters must be finite");
  }

  static OuParams from_cv(double t0, double a, double c_t) {
    return OuParams(t0, a, sigma_from_cv(t0, a, c_t));
  }

  double t0() const noexcept { return t0_; }
  double a() const noexcept { return a_; }
  double sigma() const noexcept { return sigma_; }

  /// Standard deviation of the stationary law.
  double stationary_sd() const noexcept { return sigma_ / std::sqrt(2.0 * a_); }
  double cv() const noexcept { return stationary_sd() / t0_; }

  /// Standardized coordinate used by the first-passage expansion:
  /// -sqrt(2a)/sigma * (x - t0).
  double standardize(double x) const noexcept { return -(x - t0_) / stationary_sd(); }

 private:
  double t0_;
  double a_;
  double sigma_;
};

struct ConstantTension {
  double t0;
};

struct OuTension {
  OuParams params;
};

using TensionModel = std::variant<ConstantTension, OuTension>;

inline TensionModel make_constant_tension(double t0) {
  detail::require(t0 > 0.0, "ConstantTension: t0 must be strictly positive");
  return ConstantTension{t0};
}

inline double set_tension(const TensionModel& m) {
  return std::visit(
      [](const auto& v) {
        if constexpr (std::is_same_v<std::decay_t<decltype(v)>, ConstantTension>)
          return v.t0;
        else
          return v.params.t0();
      },
      m);
}

/// f_T: density of N(t0, sigma^2/(2a)).
inline double stationary_density(const OuParams& p, double x) {
  const double sd = p.stationary_sd();
  return normal_pdf((x - p.t0()) / sd) / sd;
}

struct GaussMoments {
  double mean;
  double sd;
};

/// Law of T(s + t) given T(s) = x.
inline GaussMoments conditional_moments(const OuParams& p, double t, double x) {
  detail::require(t >= 0.0, "conditional_moments: t must be non-negative");
  const double decay = std::exp(-p.a() * t);
  const double mean = decay * x + p.t0() * (1.0 - decay);
  // -expm1(-2at) keeps the small-t variance accurate.
  const double sd = p.sigma() * std::sqrt(-std::expm1(-2.0 * p.a() * t) / (2.0 * p.a()));
  return {mean, sd};
}

/// p(t, x, y): density of T(s + t) at y given T(s) = x.
inline double transition_density(const OuParams& p, double t, double x, double y) {
  detail::require(t > 0.0, "transition_density: t must be strictly positive");
  const auto m = conditional_moments(p, t, x);
  return normal_pdf((y - m.mean) / m.sd) / m.sd;
}

/// One exact OU transition over length dt from value x, using one normal draw.
struct ExactStep {
  double decay;
  double noise_sd;
  double t0;

  ExactStep(const OuParams& p, double dt)
      : decay(std::exp(-p.a() * dt)),
        noise_sd(p.sigma() * std::sqrt(-std::expm1(-2.0 * p.a() * dt) / (2.0 * p.a()))),
        t0(p.t0()) {}

  double operator()(double x, double z) const { return t0 + (x - t0) * decay + noise_sd * z; }
};

/// Tension values on `grid`. T(grid[0]) is drawn from the stationary law and
/// every later value from the exact transition law. Consumes exactly one
/// standard normal per grid point, in grid order, from make_rng(seed).
inline std::vector<double> sample_path(const OuParams& p, std::span<const double> grid,
                                       std::uint64_t seed) {
  detail::require(!grid.empty(), "sample_path: grid must be non-empty");
  detail::require(grid[0] >= 0.0, "sample_path: grid must start at s >= 0");
  for (std::size_t i = 1; i < grid.size(); ++i)
    detail::require(grid[i] > grid[i - 1], "sample_path: grid must be strictly increasing");

  Rng rng = make_rng(seed);
  std::vector<double> out(grid.size());
  out[0] = p.t0() + p.stationary_sd() * standard_normal(rng);
  for (std::size_t i = 1; i < grid.size(); ++i) {
    const ExactStep step(p, grid[i] - grid[i - 1]);
    out[i] = step(out[i - 1], standard_normal(rng));
  }
  return out;
}

}  // namespace webrel
