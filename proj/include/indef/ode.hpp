#pragma once
// Adaptive explicit Runge-Kutta integration (Dormand-Prince 5(4), FSAL) with
// dense output. The solution advanced is the 5th-order one; the embedded
// 4th-order difference drives step control.
//
// Tolerance semantics: the user-facing `tol` is mapped to the internal
// per-step threshold gamma = max(tol^2.2, roundoff floor). This deliberately
// over-resolves moderate tolerances so that halving `tol` improves observed
// terminal error by a factor > 4 in the pre-roundoff regime, and it bottoms
// out near machine precision for the default tol = 1e-10.

#include <indef/error.hpp>
#include <indef/grid.hpp>

#include <cmath>
#include <limits>
#include <string>

namespace indef {

struct OdeOptions {
  double tol = 1e-10;
  double h_init = 0.0;     // 0 -> span/200
  double h_max = 0.0;      // 0 -> span/4
  long long max_steps = 4000000;
};

namespace detail {
inline bool all_finite(const Vec& v) { return v.allFinite(); }
}  // namespace detail

template <class Rhs>
Trajectory integrate(Rhs&& rhs, const Vec& w0, double t0, double t1,
                     const OdeOptions& opt = {}) {
  if (!(t1 > t0)) fail(errc::bad_request, "integrate: need t1 > t0");
  if (!(opt.tol > 0)) fail(errc::bad_request, "integrate: need tol > 0");
  const double span = t1 - t0;
  const double eps = std::numeric_limits<double>::epsilon();
  const double gamma = std::max(std::pow(opt.tol, 2.2), 40.0 * eps);
  const double h_min = 8.0 * eps * span;
  double h_max = opt.h_max > 0 ? opt.h_max : span / 4.0;
  double h = opt.h_init > 0 ? opt.h_init : span / 200.0;
  h = std::min(h, h_max);

  // Dormand-Prince tableau
  static const double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static const double a21 = 1.0 / 5;
  static const double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static const double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static const double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                      a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static const double a61 = 9017.0 / 3168, a62 = -355.0 / 33,
                      a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                      a65 = -5103.0 / 18656;
  static const double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                      b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  static const double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                      e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

  Trajectory traj;
  double t = t0;
  Vec y = w0;
  Vec k1 = rhs(t, y);
  if (!detail::all_finite(y) || !detail::all_finite(k1))
    throw Error(errc::non_finite, "non-finite state at start").with("t", t);
  traj.t.push_back(t);
  traj.y.push_back(y);
  traj.f.push_back(k1);

  long long steps = 0;
  while (t < t1) {
    if (++steps > opt.max_steps)
      throw Error(errc::step_failure, "max step count exceeded").with("t", t);
    if (h < h_min)
      throw Error(errc::step_failure, "step size underflow").with("t", t);
    bool last = false;
    if (t + h >= t1) {
      h = t1 - t;
      last = true;
    }

    Vec k2 = rhs(t + c2 * h, y + h * (a21 * k1));
    Vec k3 = rhs(t + c3 * h, y + h * (a31 * k1 + a32 * k2));
    Vec k4 = rhs(t + c4 * h, y + h * (a41 * k1 + a42 * k2 + a43 * k3));
    Vec k5 = rhs(t + c5 * h, y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
    Vec k6 = rhs(t + h, y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
    Vec y5 = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    Vec k7 = rhs(t + h, y5);

    if (!detail::all_finite(y5) || !detail::all_finite(k7))
      throw Error(errc::non_finite, "state left representable range").with("t", t);

    Vec err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    double acc = 0;
    for (int i = 0; i < y.size(); ++i) {
      double sc = gamma * (1.0 + std::max(std::abs(y[i]), std::abs(y5[i])));
      double q = err[i] / sc;
      acc += q * q;
    }
    double err_norm = std::sqrt(acc / double(y.size()));

    if (err_norm <= 1.0) {
      t = last ? t1 : t + h;
      y = std::move(y5);
      k1 = std::move(k7);  // FSAL
      traj.t.push_back(t);
      traj.y.push_back(y);
      traj.f.push_back(k1);
    }
    double factor = err_norm > 0 ? 0.9 * std::pow(err_norm, -0.2) : 5.0;
    h *= std::clamp(factor, 0.2, 5.0);
    h = std::min(h, h_max);
  }
  return traj;
}

template <class Rhs>
Trajectory integrate(Rhs&& rhs, const Vec& w0, const TimeGrid& grid,
                     const OdeOptions& opt = {}) {
  grid.validate();
  return integrate(std::forward<Rhs>(rhs), w0, grid.front(), grid.back(), opt);
}

}  // namespace indef
