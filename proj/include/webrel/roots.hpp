#pragma once

#include <cmath>
#include <limits>

#include "webrel/errors.hpp"

namespace webrel {

/// Bisection for a monotone function; returns x in [lo, hi] with
/// f(x) ~ target to within |hi - lo| <= tol.
template <class F>
double bisect_monotone(F&& f, double target, double lo, double hi, double tol, bool increasing = true,
                       int max_iter = 200) {
  for (int i = 0; i < max_iter && hi - lo > tol; ++i) {
    const double mid = 0.5 * (lo + hi);
    const bool below = increasing ? f(mid) < target : f(mid) > target;
    (below ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

/// Brent's method on a bracket [a, b] with fa, fb of opposite sign.
/// `tol_at(x)` gives the absolute tolerance to use near x.
template <class F, class Tol>
double brent_root(F&& f, double a, double b, double fa, double fb, Tol&& tol_at, int max_iter = 300) {
  if (fa == 0.0) return a;
  if (fb == 0.0) return b;
  detail::require((fa < 0.0) != (fb < 0.0), "brent_root: root is not bracketed");
  constexpr double eps = std::numeric_limits<double>::epsilon();
  double c = a, fc = fa;
  double d = b - a, e = d;
  for (int it = 0; it < max_iter; ++it) {
    if ((fb > 0.0) == (fc > 0.0)) {
      c = a;
      fc = fa;
      d = e = b - a;
    }
    if (std::fabs(fc) < std::fabs(fb)) {
      a = b;
      b = c;
      c = a;
      fa = fb;
      fb = fc;
      fc = fa;
    }
    const double tol1 = 2.0 * eps * std::fabs(b) + 0.5 * tol_at(b);
    const double xm = 0.5 * (c - b);
    if (std::fabs(xm) <= tol1 || fb == 0.0) return b;
    if (std::fabs(e) >= tol1 && std::fabs(fa) > std::fabs(fb)) {
      const double s = fb / fa;
      double p, q;
      if (a == c) {
        p = 2.0 * xm * s;
        q = 1.0 - s;
      } else {
        const double qq = fa / fc, r = fb / fc;
        p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
        q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
      }
      if (p > 0.0) q = -q;
      p = std::fabs(p);
      const double min1 = 3.0 * xm * q - std::fabs(tol1 * q);
      const double min2 = std::fabs(e * q);
      if (2.0 * p < std::min(min1, min2)) {
        e = d;
        d = p / q;
      } else {
        d = xm;
        e = d;
      }
    } else {
      d = xm;
      e = d;
    }
    a = b;
    fa = fb;
    b += std::fabs(d) > tol1 ? d : std::copysign(tol1, xm);
    fb = f(b);
  }
  return b;
}

}  // namespace webrel
