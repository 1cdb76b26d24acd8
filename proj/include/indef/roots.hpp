#pragma once
// Scalar root bracketing (Brent's method).

#include <indef/error.hpp>

#include <cmath>
#include <utility>

namespace indef {

template <class F>
double bracket_root(F&& g, double lo, double hi, double tol = 1e-12) {
  double a = lo, b = hi;
  double fa = g(a), fb = g(b);
  if (fa == 0) return a;
  if (fb == 0) return b;
  if ((fa > 0) == (fb > 0))
    throw Error(errc::no_bracket, "bracket_root: g(lo) and g(hi) have the same sign")
        .with("lo", lo)
        .with("hi", hi)
        .with("g_lo", fa)
        .with("g_hi", fb);

  double c = a, fc = fa;   // c: previous bracket end
  double d = b - a, e = d; // d: current step, e: step before last
  for (int iter = 0; iter < 200; ++iter) {
    if ((fb > 0) == (fc > 0)) {
      c = a; fc = fa; d = e = b - a;
    }
    if (std::abs(fc) < std::abs(fb)) {
      a = b; b = c; c = a;
      fa = fb; fb = fc; fc = fa;
    }
    double tol1 = 2.0 * 1e-16 * std::abs(b) + 0.5 * tol;
    double xm = 0.5 * (c - b);
    if (std::abs(xm) <= tol1 || fb == 0) return b;

    if (std::abs(e) >= tol1 && std::abs(fa) > std::abs(fb)) {
      // inverse quadratic / secant
      double s = fb / fa, p, q;
      if (a == c) {
        p = 2.0 * xm * s;
        q = 1.0 - s;
      } else {
        double qq = fa / fc, r = fb / fc;
        p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
        q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
      }
      if (p > 0) q = -q;
      p = std::abs(p);
      if (2.0 * p < std::min(3.0 * xm * q - std::abs(tol1 * q), std::abs(e * q))) {
        e = d;
        d = p / q;
      } else {
        d = xm; e = d;
      }
    } else {
      d = xm; e = d;
    }
    a = b; fa = fb;
    b += std::abs(d) > tol1 ? d : (xm > 0 ? tol1 : -tol1);
    fb = g(b);
  }
  return b;
}

}  // namespace indef
