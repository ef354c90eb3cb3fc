#pragma once

#include <cmath>
#include <numbers>

#include <boost/math/special_functions/erf.hpp>

#include "webrel/errors.hpp"

namespace webrel {

inline double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

inline double normal_quantile(double p) {
  detail::require(p > 0.0 && p < 1.0, "normal_quantile: p must lie in (0, 1)");
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

}  // namespace webrel
