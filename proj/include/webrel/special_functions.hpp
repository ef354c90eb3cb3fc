#pragma once

// Gamma, Kummer's confluent hypergeometric M(a, b, x) and the Hermite
// function H_nu(z) of real order, with root finding in the order nu.
//
// H_nu(z) = 2^nu sqrt(pi) [ M(-nu/2, 1/2, z^2) / Gamma((1-nu)/2)
//                           - 2z M((1-nu)/2, 3/2, z^2) / Gamma(-nu/2) ]
//
// The Taylor series of M loses digits to cancellation once |a| and z^2 grow,
// and the two terms above cancel against each other for z > 0. Each
// evaluation therefore carries a rounding-error estimate; values are computed
// in long double first, then in binary128, then with MPFR at increasing
// precision until the estimate is small enough for the caller.

#include <mpfr.h>
#include <quadmath.h>

#include <cfloat>
#include <cmath>
#include <algorithm>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "webrel/errors.hpp"
#include "webrel/roots.hpp"

namespace webrel {

namespace detail {

template <class Real>
struct RealOps;

template <>
struct RealOps<double> {
  static double epsilon() { return DBL_EPSILON; }
  static double abs(double x) { return std::fabs(x); }
  static double floor(double x) { return std::floor(x); }
  static double pow(double x, double y) { return std::pow(x, y); }
  static double tgamma(double x) { return std::tgamma(x); }
  static double sqrt_pi() { return 1.7724538509055160273; }
};

template <>
struct RealOps<long double> {
  static long double epsilon() { return LDBL_EPSILON; }
  static long double abs(long double x) { return std::fabs(x); }
  static long double floor(long double x) { return std::floor(x); }
  static long double pow(long double x, long double y) { return std::pow(x, y); }
  static long double tgamma(long double x) { return std::tgamma(x); }
  static long double sqrt_pi() { return 1.772453850905516027298167483341145183L; }
};

template <>
struct RealOps<__float128> {
  static __float128 epsilon() { return scalbnq(1, -112); }
  static __float128 abs(__float128 x) { return fabsq(x); }
  static __float128 floor(__float128 x) { return floorq(x); }
  static __float128 pow(__float128 x, __float128 y) { return powq(x, y); }
  static __float128 tgamma(__float128 x) { return tgammaq(x); }
  static __float128 sqrt_pi() {
    static const __float128 v = sqrtq(acosq(-1));
    return v;
  }
};

template <class Real>
bool is_nonpositive_integer(Real x) {
  return x <= 0 && RealOps<Real>::floor(x) == x;
}

/// 1/Gamma(x); zero on the poles.
template <class Real>
Real rgamma(Real x) {
  if (is_nonpositive_integer(x)) return Real(0);
  return Real(1) / RealOps<Real>::tgamma(x);
}

template <class Real>
struct SeriesSum {
  Real sum;
  Real magnitude;  // sum of |terms|, bounds the rounding error
  std::size_t terms;
};

inline constexpr std::size_t kMaxSeriesTerms = 20000;

/// Taylor series of M(a, b, x); stops once k exceeds |a| and |x|, the terms
/// shrink geometrically and the latest one is below working precision.
template <class Real>
SeriesSum<Real> kummer_series(Real a, Real b, Real x) {
  using Ops = RealOps<Real>;
  const Real eps = Ops::epsilon();
  Real term = 1, sum = 1, mag = 1;
  for (std::size_t k = 0; k < kMaxSeriesTerms; ++k) {
    const Real kr = static_cast<Real>(k);
    const Real ratio = (a + kr) / (b + kr) * x / (kr + 1);
    term *= ratio;
    sum += term;
    mag += Ops::abs(term);
    if (term == 0) return {sum, mag, k + 1};
    if (kr + 1 > Ops::abs(a) && kr + 1 > Ops::abs(x) && Ops::abs(ratio) < Real(0.5) &&
        Ops::abs(term) <= eps * mag)
      return {sum, mag, k + 1};
  }
  throw RangeError("kummer_m: series did not converge");
}

template <class Real>
struct HermiteTerms {
  Real value;
  Real abs_error;
};

/// Two-term Kummer representation evaluated in precision Real, any real nu.
template <class Real>
HermiteTerms<Real> hermite_terms(Real nu, Real z) {
  using Ops = RealOps<Real>;
  const Real x = z * z;
  const Real g1 = rgamma<Real>((1 - nu) / 2);
  const Real g2 = rgamma<Real>(-nu / 2);
  Real s1 = 0, m1 = 0, s2 = 0, m2 = 0;
  if (g1 != 0) {
    const auto r = kummer_series<Real>(-nu / 2, Real(0.5), x);
    s1 = r.sum;
    m1 = r.magnitude;
  }
  if (g2 != 0 && z != 0) {
    const auto r = kummer_series<Real>((1 - nu) / 2, Real(1.5), x);
    s2 = r.sum;
    m2 = r.magnitude;
  }
  const Real scale = Ops::pow(Real(2), nu) * Ops::sqrt_pi();
  const Real t1 = g1 * s1;
  const Real t2 = 2 * z * g2 * s2;
  const Real value = scale * (t1 - t2);
  const Real mag = Ops::abs(g1) * m1 + Ops::abs(2 * z * g2) * m2;
  return {value, 16 * Ops::epsilon() * scale * mag};
}


/// RAII holder for an MPFR variable.
class MpfrVar {
 public:
  explicit MpfrVar(mpfr_prec_t prec) { mpfr_init2(v_, prec); }
  ~MpfrVar() { mpfr_clear(v_); }
  MpfrVar(const MpfrVar&) = delete;
  MpfrVar& operator=(const MpfrVar&) = delete;
  mpfr_ptr get() { return v_; }
  operator mpfr_ptr() { return v_; }

 private:
  mpfr_t v_;
};

struct MpfrSeries {
  long double magnitude;
  bool ok;
};

// sum <- M(a, b, x), returns the sum of |terms|.
inline MpfrSeries mpfr_kummer(mpfr_ptr sum, mpfr_srcptr a, double b, mpfr_srcptr x, mpfr_prec_t prec) {
  MpfrVar term(prec), num(prec), den(prec);
  mpfr_set_ui(term, 1, MPFR_RNDN);
  mpfr_set_ui(sum, 1, MPFR_RNDN);
  long double mag = 1;
  const long double eps = std::ldexp(1.0L, -static_cast<int>(prec));
  const long double abs_a = std::fabs(mpfr_get_ld(a, MPFR_RNDN));
  const long double abs_x = std::fabs(mpfr_get_ld(x, MPFR_RNDN));
  for (std::size_t k = 0; k < kMaxSeriesTerms; ++k) {
    mpfr_add_ui(num, a, static_cast<unsigned long>(k), MPFR_RNDN);
    mpfr_mul(num, num, x, MPFR_RNDN);
    mpfr_set_d(den, b + static_cast<double>(k), MPFR_RNDN);
    mpfr_mul_ui(den, den, static_cast<unsigned long>(k + 1), MPFR_RNDN);
    mpfr_div(num, num, den, MPFR_RNDN);
    mpfr_mul(term, term, num, MPFR_RNDN);
    mpfr_add(sum, sum, term, MPFR_RNDN);
    const long double t = std::fabs(mpfr_get_ld(term, MPFR_RNDN));
    mag += t;
    if (t == 0) return {mag, true};
    const long double kr = static_cast<long double>(k);
    const long double ratio = std::fabs(mpfr_get_ld(num, MPFR_RNDN));
    if (kr + 1 > abs_a && kr + 1 > abs_x && ratio < 0.5L && t <= eps * mag) return {mag, true};
  }
  return {mag, false};
}

inline HermiteTerms<long double> hermite_terms_mpfr(double nu, double z, mpfr_prec_t prec) {
  MpfrVar nu_m(prec), x(prec), a1(prec), a2(prec), g1(prec), g2(prec), s1(prec), s2(prec), scale(prec),
      t(prec);
  mpfr_set_d(nu_m, nu, MPFR_RNDN);
  mpfr_set_d(x, z, MPFR_RNDN);
  mpfr_sqr(x, x, MPFR_RNDN);
  mpfr_div_si(a1, nu_m, -2, MPFR_RNDN);       // -nu/2
  mpfr_ui_sub(a2, 1, nu_m, MPFR_RNDN);        // (1-nu)/2
  mpfr_div_ui(a2, a2, 2, MPFR_RNDN);
  const bool pole1 = is_nonpositive_integer<long double>((1.0L - nu) / 2);
  const bool pole2 = is_nonpositive_integer<long double>(-static_cast<long double>(nu) / 2);
  long double m1 = 0, m2 = 0;
  bool ok = true;
  mpfr_set_zero(s1, 1);
  mpfr_set_zero(s2, 1);
  if (!pole1) {
    mpfr_gamma(g1, a2, MPFR_RNDN);
    mpfr_ui_div(g1, 1, g1, MPFR_RNDN);
    const auto r = mpfr_kummer(s1, a1, 0.5, x, prec);
    m1 = std::fabs(mpfr_get_ld(g1, MPFR_RNDN)) * r.magnitude;
    ok = ok && r.ok;
    mpfr_mul(s1, s1, g1, MPFR_RNDN);
  }
  if (!pole2 && z != 0) {
    mpfr_gamma(g2, a1, MPFR_RNDN);
    mpfr_ui_div(g2, 1, g2, MPFR_RNDN);
    const auto r = mpfr_kummer(s2, a2, 1.5, x, prec);
    mpfr_mul(s2, s2, g2, MPFR_RNDN);
    mpfr_mul_d(s2, s2, 2.0 * z, MPFR_RNDN);
    m2 = std::fabs(2.0L * z * mpfr_get_ld(g2, MPFR_RNDN)) * r.magnitude;
    ok = ok && r.ok;
  }
  if (!ok) throw RangeError("hermite_h: series did not converge");
  mpfr_sub(t, s1, s2, MPFR_RNDN);
  mpfr_ui_pow(scale, 2, nu_m, MPFR_RNDN);
  mpfr_mul(t, t, scale, MPFR_RNDN);
  mpfr_const_pi(scale, MPFR_RNDN);
  mpfr_sqrt(scale, scale, MPFR_RNDN);
  mpfr_mul(t, t, scale, MPFR_RNDN);
  const long double sc = std::pow(2.0L, static_cast<long double>(nu)) * RealOps<long double>::sqrt_pi();
  const long double eps = std::ldexp(1.0L, -static_cast<int>(prec));
  return {mpfr_get_ld(t, MPFR_RNDN), 16 * eps * sc * (m1 + m2)};
}

inline constexpr mpfr_prec_t kMaxMpfrBits = 4096;

}  // namespace detail

/// Euler Gamma. Throws PoleError on non-positive integers.
inline double gamma_fn(double x) {
  if (detail::is_nonpositive_integer(x))
    throw PoleError("gamma_fn: pole at non-positive integer " + std::to_string(x));
  return std::tgamma(x);
}

/// 1/Gamma(x), zero on the poles.
inline double reciprocal_gamma(double x) { return detail::rgamma<double>(x); }

/// Kummer's M(a, b, z). Accurate relative to the magnitude of its Taylor
/// terms; switches to binary128 when long double would lose too much.
inline double kummer_m(double a, double b, double z) {
  if (detail::is_nonpositive_integer(b))
    throw DomainError("kummer_m: b must not be a non-positive integer");
  // Kummer's transformation turns the alternating series into a positive one
  if (z < 0.0 && !detail::is_nonpositive_integer(a)) return std::exp(z) * kummer_m(b - a, b, -z);
  constexpr long double kTol = 1e-13L;
  const auto ld = detail::kummer_series<long double>(a, b, z);
  if (16 * LDBL_EPSILON * ld.magnitude <= kTol * std::fabs(ld.sum)) {
    return static_cast<double>(ld.sum);
  }
  const auto q = detail::kummer_series<__float128>(a, b, z);
  const double v = static_cast<double>(q.sum);
  if (!std::isfinite(v)) throw RangeError("kummer_m: result overflows double");
  return v;
}

struct HermiteValue {
  double value;
  double abs_error;
};

/// H_nu(z) for any real nu, with an absolute rounding-error estimate.
/// Precision is raised (long double, binary128, then MPFR) until the
/// estimate is within max(rel_tol |value|, abs_tol).
inline HermiteValue hermite_h_ext(double nu, double z, double rel_tol = 1e-13, double abs_tol = 0.0) {
  auto accept = [rel_tol, abs_tol](long double v, long double err) {
    return std::isfinite(static_cast<double>(v)) && err <= std::max<long double>(rel_tol * std::fabs(v), abs_tol);
  };
  auto finish = [](long double v, long double err) {
    const double out = static_cast<double>(v);
    if (!std::isfinite(out)) throw RangeError("hermite_h: result overflows double");
    return HermiteValue{out, static_cast<double>(err)};
  };
  const auto ld = detail::hermite_terms<long double>(nu, z);
  if (accept(ld.value, ld.abs_error)) return finish(ld.value, ld.abs_error);
  const auto q = detail::hermite_terms<__float128>(nu, z);
  long double v = static_cast<long double>(q.value);
  long double err = static_cast<long double>(q.abs_error);
  mpfr_prec_t bits = 113;
  while (!accept(v, err)) {
    if (bits >= detail::kMaxMpfrBits) break;
    const long double target = std::max<long double>(rel_tol * std::fabs(v), abs_tol);
    const long double ratio = err / std::max(target, err * 1e-20L);
    const auto extra = static_cast<mpfr_prec_t>(std::log2(std::max(2.0L, ratio))) + 16;
    bits = std::min(detail::kMaxMpfrBits, bits + extra);
    const auto m = detail::hermite_terms_mpfr(nu, z, bits);
    v = m.value;
    err = m.abs_error;
  }
  return finish(v, err);
}

/// Hermite function H_nu(z), nu >= 0. Integer orders give the physicists'
/// Hermite polynomials.
inline double hermite_h(double nu, double z) {
  detail::require(nu >= 0.0, "hermite_h: order must be non-negative");
  return hermite_h_ext(nu, z).value;
}

/// dH_nu(z)/dnu by central differences with step max(1e-6, 1e-8 nu) and one
/// Richardson extrapolation.
inline double hermite_h_dnu(double nu, double z) {
  detail::require(nu > 0.0, "hermite_h_dnu: order must be strictly positive");
  const double h = std::max(1e-6, 1e-8 * nu);
  auto H = [z](double v) { return static_cast<long double>(hermite_h_ext(v, z, 1e-15).value); };
  const long double d1 = (H(nu + h) - H(nu - h)) / (2.0L * h);
  const long double d2 = (H(nu + h / 2) - H(nu - h / 2)) / static_cast<long double>(h);
  const double r = static_cast<double>((4 * d2 - d1) / 3);
  if (!std::isfinite(r)) throw RangeError("hermite_h_dnu: result overflows double");
  return r;
}

/// Sign-level accuracy suffices while bracketing and refining roots.
inline constexpr double kScanRelTol = 1e-3;

struct RootScanConfig {
  double initial_step = 0.05;  // order step for sign scanning
  double refine_tol = 1e-10;   // absolute tolerance (relative below order 1)
  double max_order = 200.0;    // scan ceiling

  void validate() const {
    detail::require(initial_step > 0.0, "RootScanConfig: initial_step must be positive");
    detail::require(refine_tol > 0.0, "RootScanConfig: refine_tol must be positive");
    detail::require(max_order > initial_step, "RootScanConfig: max_order must exceed initial_step");
  }
};

/// Appends roots of nu -> H_nu(z) to `roots` until it holds `count` of them.
/// Scanning restarts just past the last known root (or at nu = 0), steps by
/// initial_step until the sign changes, then refines by bisection and Brent.
inline void extend_hermite_roots(double z, std::vector<double>& roots, std::size_t count,
                                 const RootScanConfig& cfg) {
  cfg.validate();
  const double step = cfg.initial_step;
  const double offset = 0.01 * step;
  auto H = [z](double nu) { return hermite_h_ext(nu, z, kScanRelTol).value; };
  auto tol_at = [&](double x) { return cfg.refine_tol * std::min(1.0, std::fabs(x)); };

  double lo = roots.empty() ? 0.0 : roots.back() + offset;
  double flo = H(lo);
  std::size_t k = 0;
  double base = lo;
  while (roots.size() < count) {
    ++k;
    const double hi = base + static_cast<double>(k) * step;
    if (hi <= lo) continue;
    if (hi > cfg.max_order)
      throw ScanExhausted("find_hermite_roots: reached max_order " + std::to_string(cfg.max_order) +
                              " with " + std::to_string(roots.size()) + " of " +
                              std::to_string(count) + " roots",
                          roots);
    const double fhi = H(hi);
    double root;
    if (flo == 0.0) {
      root = lo;
    } else if (fhi == 0.0) {
      root = hi;
    } else if ((flo < 0.0) != (fhi < 0.0)) {
      double a = lo, b = hi, fa = flo, fb = fhi;
      bool exact = false;
      for (int i = 0; i < 4; ++i) {
        const double m = 0.5 * (a + b);
        const double fm = H(m);
        if (fm == 0.0) {
          a = b = m;
          exact = true;
          break;
        }
        if ((fm < 0.0) == (fa < 0.0)) {
          a = m;
          fa = fm;
        } else {
          b = m;
          fb = fm;
        }
      }
      root = exact ? a : brent_root(H, a, b, fa, fb, tol_at);
    } else {
      lo = hi;
      flo = fhi;
      continue;
    }
    roots.push_back(root);
    lo = base = root + offset;
    k = 0;
    flo = H(lo);
  }
}

/// First `count` positive roots nu_1 < ... < nu_count of H_nu(z) = 0.
inline std::vector<double> find_hermite_roots(double z, std::size_t count,
                                              const RootScanConfig& cfg = {}) {
  detail::require(count >= 1, "find_hermite_roots: count must be at least 1");
  std::vector<double> roots;
  roots.reserve(count);
  extend_hermite_roots(z, roots, count, cfg);
  return roots;
}

}  // namespace webrel
