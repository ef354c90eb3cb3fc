#pragma once

// Edge-crack fracture criterion. A crack of length xi survives tension T
// (force per unit width) while K = alpha(xi) T sqrt(pi xi) / h < K_C, i.e.
// while T < B(xi) = h K_C / (alpha(xi) sqrt(pi xi)).

#include <math.h>  // pchip.hpp calls unqualified isnan

#include <boost/math/interpolators/pchip.hpp>

#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <memory>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "webrel/errors.hpp"
#include "webrel/random.hpp"
#include "webrel/roots.hpp"
#include "webrel/special_functions.hpp"

namespace webrel {

struct WebGeometry {
  double span = 1.0;         // open-draw length l (m)
  double half_width = 0.6;   // b (m)
  double thickness = 8e-5;   // h (m)

  void validate() const {
    detail::require(span > 0.0 && half_width > 0.0 && thickness > 0.0,
                    "WebGeometry: span, half_width and thickness must be positive");
  }
};

inline double fracture_toughness(double youngs, double g_c) {
  detail::require(youngs > 0.0 && g_c > 0.0, "fracture_toughness: E and G_C must be positive");
  return std::sqrt(g_c * youngs);
}

struct Material {
  double youngs;
  double g_c;
  double k_c;

  static Material from_energy(double youngs, double g_c) {
    return {youngs, g_c, fracture_toughness(youngs, g_c)};
  }
};

/// Single-edge-crack geometry factor F'(r), r = crack depth / width.
inline double edge_crack_polynomial(double r) {
  return 1.1215 + r * (-0.2306 + r * (10.55 + r * (-21.71 + r * 30.382)));
}

/// F' tabulated on relative depths, interpolated by a monotone cubic.
class WeightFunctionTable {
 public:
  WeightFunctionTable(std::vector<double> knots, std::vector<double> values)
      : knots_(std::move(knots)), values_(std::move(values)) {
    detail::require(knots_.size() == values_.size(), "WeightFunctionTable: column lengths differ");
    detail::require(knots_.size() >= 4, "WeightFunctionTable: at least 4 knots are required");
    detail::require(knots_.front() == 0.0, "WeightFunctionTable: first relative depth must be 0");
    detail::require(knots_.back() < 1.0, "WeightFunctionTable: relative depths must lie below 1");
    for (std::size_t i = 1; i < knots_.size(); ++i)
      detail::require(knots_[i] > knots_[i - 1], "WeightFunctionTable: relative depths must be strictly increasing");
    for (double v : values_)
      detail::require(std::isfinite(v) && v > 0.0, "WeightFunctionTable: F' values must be positive");
    auto x = knots_;
    auto y = values_;
    interp_ = std::make_shared<const Interp>(std::move(x), std::move(y));
  }

  /// Knots every 0.025 up to 0.6 from edge_crack_polynomial.
  static WeightFunctionTable standard() {
    std::vector<double> k, v;
    for (int i = 0; i <= 24; ++i) {
      const double r = 0.025 * i;
      k.push_back(r);
      v.push_back(edge_crack_polynomial(r));
    }
    return {std::move(k), std::move(v)};
  }

  /// Reads a `relative_depth,f_prime` CSV with a header row.
  static WeightFunctionTable load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DomainError("WeightFunctionTable: cannot open " + path);
    std::string line;
    std::getline(in, line);
    std::vector<double> k, v;
    int lineno = 1;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty() || line == "\r") continue;
      std::istringstream ls(line);
      std::string a, b;
      if (!std::getline(ls, a, ',') || !std::getline(ls, b))
        throw DomainError(path + ":" + std::to_string(lineno) + ": expected two columns");
      try {
        k.push_back(std::stod(a));
        v.push_back(std::stod(b));
      } catch (const std::exception&) {
        throw DomainError(path + ":" + std::to_string(lineno) + ": not a number");
      }
    }
    return {std::move(k), std::move(v)};
  }

  double max_depth() const { return knots_.back(); }
  const std::vector<double>& knots() const { return knots_; }
  const std::vector<double>& values() const { return values_; }

  double f_prime(double r) const {
    detail::require(r >= 0.0 && r <= max_depth(), "WeightFunctionTable: relative depth outside the table");
    return (*interp_)(r);
  }

  /// FNV-1a over the bit patterns of knots and values.
  std::uint64_t hash() const {
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&h](double d) {
      const auto bits = std::bit_cast<std::uint64_t>(d);
      for (int i = 0; i < 8; ++i) {
        h ^= (bits >> (8 * i)) & 0xffU;
        h *= 1099511628211ULL;
      }
    };
    for (std::size_t i = 0; i < knots_.size(); ++i) {
      mix(knots_[i]);
      mix(values_[i]);
    }
    return h;
  }

 private:
  using Interp = boost::math::interpolators::pchip<std::vector<double>>;
  std::vector<double> knots_;
  std::vector<double> values_;
  std::shared_ptr<const Interp> interp_;
};

/// Material, geometry and weight table bundled; immutable once built.
class FractureModel {
 public:
  FractureModel(Material material, WebGeometry geometry, WeightFunctionTable table)
      : material_(material), geometry_(geometry), table_(std::move(table)) {
    geometry_.validate();
    detail::require(material_.k_c > 0.0, "FractureModel: K_C must be positive");
    validate_monotone();
  }

  const Material& material() const { return material_; }
  const WebGeometry& geometry() const { return geometry_; }
  const WeightFunctionTable& table() const { return table_; }

  /// Longest crack covered by the table; longer cracks always fracture.
  double max_crack() const { return 2.0 * geometry_.half_width * table_.max_depth(); }

  /// Crack lengths at the interior table knots, where alpha is only C1.
  std::vector<double> knot_lengths() const {
    std::vector<double> out;
    for (std::size_t i = 1; i + 1 < table_.knots().size(); ++i)
      out.push_back(2.0 * geometry_.half_width * table_.knots()[i]);
    return out;
  }

  double alpha(double xi) const {
    detail::require(xi > 0.0 && xi <= max_crack(), "weight_alpha: crack length outside the supported range");
    const double r = xi / (2.0 * geometry_.half_width);
    return table_.f_prime(r) / std::pow(1.0 - r, 1.5);
  }

  /// g(xi) = alpha(xi) sqrt(xi), strictly increasing.
  double g(double xi) const { return alpha(xi) * std::sqrt(xi); }

  double stress_intensity(double tension, double xi) const {
    return alpha(xi) * tension * std::sqrt(std::numbers::pi * xi) / geometry_.thickness;
  }

  /// Largest tension a crack of length xi withstands; 0 past max_crack().
  double boundary(double xi) const {
    detail::require(xi > 0.0, "tension_boundary: crack length must be positive");
    if (xi >= max_crack()) return 0.0;
    return geometry_.thickness * material_.k_c / (alpha(xi) * std::sqrt(std::numbers::pi * xi));
  }

  /// Crack length at which B(xi) = tension; max_crack() when even the
  /// longest supported crack withstands it.
  double critical_length(double tension) const {
    detail::require(tension > 0.0, "critical_length: tension must be positive");
    const double target = geometry_.thickness * material_.k_c / (tension * std::sqrt(std::numbers::pi));
    return g_inverse(target);
  }

  /// Inverse of g by bisection to 1e-12 m, clamped to (0, max_crack()].
  double g_inverse(double target) const {
    detail::require(target > 0.0, "g_inverse: target must be positive");
    const double hi = max_crack();
    if (target >= g(hi)) return hi;
    return bisect_monotone([this](double x) { return x > 0.0 ? g(x) : 0.0; }, target, 0.0, hi, 1e-12);
  }

 private:
  void validate_monotone() const {
    constexpr int n = 4000;
    double prev = 0.0;
    for (int i = 1; i <= n; ++i) {
      const double v = g(max_crack() * i / n);
      if (!(v > prev)) throw DomainError("FractureModel: g(xi) = alpha(xi) sqrt(xi) is not strictly increasing");
      prev = v;
    }
  }

  Material material_;
  WebGeometry geometry_;
  WeightFunctionTable table_;
};

/// Weibull crack-length law F(x) = 1 - exp(-(x/scale)^shape).
class CrackLengthDist {
 public:
  CrackLengthDist(double scale, double shape) : scale_(scale), shape_(shape) {
    detail::require(scale > 0.0 && shape > 0.0 && std::isfinite(scale) && std::isfinite(shape),
                    "CrackLengthDist: scale and shape must be positive");
  }

  static CrackLengthDist from_mean(double mean, double shape = 0.8) {
    detail::require(mean > 0.0 && shape > 0.0, "CrackLengthDist: mean and shape must be positive");
    return {mean / gamma_fn(1.0 + 1.0 / shape), shape};
  }

  double scale() const { return scale_; }
  double shape() const { return shape_; }

  double cdf(double x) const {
    detail::require(x >= 0.0, "weibull cdf: x must be non-negative");
    return -std::expm1(-std::pow(x / scale_, shape_));
  }

  double survival(double x) const {
    detail::require(x >= 0.0, "weibull survival: x must be non-negative");
    return std::exp(-std::pow(x / scale_, shape_));
  }

  double pdf(double x) const {
    detail::require(x >= 0.0, "weibull pdf: x must be non-negative");
    if (x == 0.0) return shape_ < 1.0 ? INFINITY : (shape_ == 1.0 ? 1.0 / scale_ : 0.0);
    const double t = x / scale_;
    return shape_ / scale_ * std::pow(t, shape_ - 1.0) * std::exp(-std::pow(t, shape_));
  }

  double quantile(double p) const {
    detail::require(p > 0.0 && p < 1.0, "weibull quantile: p must lie in (0, 1)");
    return scale_ * std::pow(-std::log1p(-p), 1.0 / shape_);
  }

  double sample(Rng& rng) const { return quantile(uniform_open(rng)); }

  double mean() const { return scale_ * gamma_fn(1.0 + 1.0 / shape_); }

  double variance() const {
    const double g1 = gamma_fn(1.0 + 1.0 / shape_);
    return scale_ * scale_ * (gamma_fn(1.0 + 2.0 / shape_) - g1 * g1);
  }

  double cv() const { return std::sqrt(variance()) / mean(); }

 private:
  double scale_;
  double shape_;
};

}  // namespace webrel
