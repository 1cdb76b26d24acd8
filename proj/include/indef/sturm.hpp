#pragma once
// Scalar Prüfer machinery for u'' + a(t)u = 0 with (u, u')(0) = (0, 1):
// first/second block phase angles, the shifted Dirichlet eigenvalues
// eta_j(a) solving theta^1_{a+eta}(1) = j*pi, and Sturm comparison evidence.
//
// The scalar first-block angle is the continuous argument of phi' + i*phi,
// unwrapped directly from atan2 samples on a grid dense enough that each step
// moves the angle by less than pi/2 (|theta'| <= max(1, |a|)). The second
// block goes through the general frame/trace machinery, which doubles as a
// cross-check of the two code paths.

#include <indef/expr.hpp>
#include <indef/phase.hpp>

#include <cmath>
#include <functional>
#include <utility>

namespace indef {

struct ScalarPotential {
  std::function<double(double)> f;
  bool constant = false;
  double a0 = 0;

  ScalarPotential() : ScalarPotential(0.0) {}
  ScalarPotential(double c)
      : f([c](double) { return c; }), constant(true), a0(c) {}
  explicit ScalarPotential(std::function<double(double)> fn) : f(std::move(fn)) {}

  static ScalarPotential from_expr(const Expr& e) {
    if (e.depends_on_x())
      fail(errc::bad_request, "scalar potential cannot depend on x");
    if (e.is_constant()) return ScalarPotential(e.eval(EvalEnv{0.0, nullptr, 0}));
    return ScalarPotential(
        [e](double t) { return e.eval(EvalEnv{t, nullptr, 0}); });
  }

  double operator()(double t) const {
    double v = f(t);
    if (!std::isfinite(v))
      throw Error(errc::non_finite, "potential not finite").with("t", t);
    return v;
  }

  ScalarPotential shifted(double eta) const {
    if (constant) return ScalarPotential(a0 + eta);
    auto g = f;
    return ScalarPotential([g, eta](double t) { return g(t) + eta; });
  }

  double sup_abs(int samples = 257) const {
    if (constant) return std::abs(a0);
    double m = 0;
    for (int k = 0; k < samples; ++k)
      m = std::max(m, std::abs((*this)(double(k) / (samples - 1))));
    return m;
  }

  double mean(int samples = 33) const {
    if (constant) return a0;
    double s = 0;
    for (int k = 0; k < samples; ++k) s += (*this)(double(k) / (samples - 1));
    return s / samples;
  }
};

namespace detail {

// phi and phi' as closed forms (constant a) or a dense trajectory
struct ScalarSolution {
  bool closed = false;
  double a0 = 0;
  Trajectory traj;

  double phi(double t) const { return closed ? s_of(a0, t) : traj.value(t)[0]; }
  double phip(double t) const { return closed ? c_of(a0, t) : traj.value(t)[1]; }
};

inline ScalarSolution solve_scalar(const ScalarPotential& a, double t_end,
                                   double tol) {
  ScalarSolution sol;
  if (a.constant) {
    sol.closed = true;
    sol.a0 = a.a0;
    return sol;
  }
  auto rhs = [&a](double t, const Vec& y) {
    Vec f(2);
    f << y[1], -a(t) * y[0];
    return f;
  };
  Vec y0(2);
  y0 << 0.0, 1.0;
  sol.traj = integrate(rhs, y0, 0.0, t_end, OdeOptions{.tol = tol});
  return sol;
}

inline double unwrap_scalar_angle(const ScalarSolution& sol, double bound,
                                  double t_end) {
  int n = std::max(129, int(std::ceil(3.0 * (1.0 + bound) * t_end / M_PI)) + 2);
  double theta = 0.0;
  for (int k = 1; k < n; ++k) {
    double t = t_end * k / (n - 1);
    double raw = std::atan2(sol.phi(t), sol.phip(t));
    theta += std::remainder(raw - theta, 2.0 * M_PI);
  }
  return theta;
}

}  // namespace detail

inline double prufer_angle(const ScalarPotential& a, double t_end = 1.0,
                           double tol = 1e-10) {
  if (!(t_end > 0.0 && t_end <= 1.0))
    fail(errc::bad_request, "prufer_angle: t_end out of (0, 1]");
  auto sol = detail::solve_scalar(a, t_end, tol);
  return detail::unwrap_scalar_angle(sol, a.sup_abs(), t_end);
}

inline double second_block_angle(const ScalarPotential& a, double t_end = 1.0,
                                 double tol = 1e-10) {
  if (!(t_end > 0.0 && t_end <= 1.0))
    fail(errc::bad_request, "second_block_angle: t_end out of (0, 1]");
  // the pair (u, v2) with u' = -v2, v2' = a u is the second-block frame
  // system for B = -a
  Signature sig{1, 1};
  SplitSymmetricPath path;
  if (a.constant) {
    Mat B(1, 1);
    B << -a.a0;
    path = SplitSymmetricPath::constants(sig, Mat(0, 0), B);
  } else {
    path = SplitSymmetricPath::from_blocks(
        sig, [](double) { return Mat(0, 0); },
        [a](double t) {
          Mat B(1, 1);
          B << -a(t);
          return B;
        });
  }
  auto trace = compute_phase_trace(
      fundamental_solution(decouple(path), phase_grid(path, t_end), tol));
  double traced = trace.sorted2[0].back();
  double mirrored = -prufer_angle(a, t_end, tol);
  if (std::abs(traced - mirrored) > 1e-8)
    throw Error(errc::consistency_violation,
                "second-block angle disagrees with mirrored first-block angle")
        .with("traced", traced)
        .with("mirrored", mirrored);
  return traced;
}

struct EigenvalueResult {
  int j = 0;
  double eta = 0;
  double residual = 0;
  int zeros = 0;  // interior zeros of the eigenfunction, must be j - 1
  bool tangential = false;
};

inline EigenvalueResult eta_j(const ScalarPotential& a, int j,
                              double tol_angle = 1e-9, double tol = 1e-10) {
  if (j < 1) fail(errc::bad_request, "eta_j: j must be >= 1");
  const double cap = 1e6;
  const double target = j * M_PI;
  auto g = [&](double eta) {
    return prufer_angle(a.shifted(eta), 1.0, tol) - target;
  };

  double seed = double(j) * j * M_PI * M_PI - a.mean();
  seed = std::clamp(seed, -(cap - 1), cap - 1);
  double lo = seed - 1, hi = seed + 1;
  double glo = g(lo), ghi = g(hi);
  for (double step = 2; glo > 0; step *= 2) {
    lo -= step;
    if (lo < -cap)
      throw Error(errc::bracket_failure, "no lower eta bracket within bounds")
          .with("j", (long long)j)
          .with("lo", lo);
    glo = g(lo);
  }
  for (double step = 2; ghi < 0; step *= 2) {
    hi += step;
    if (hi > cap)
      throw Error(errc::bracket_failure, "no upper eta bracket within bounds")
          .with("j", (long long)j)
          .with("hi", hi);
    ghi = g(hi);
  }

  EigenvalueResult res;
  res.j = j;
  res.eta = bracket_root(g, lo, hi, 1e-13);
  res.residual = std::abs(g(res.eta));
  if (res.residual > tol_angle)
    throw Error(errc::bracket_failure, "eta solve left a large angle residual")
        .with("eta", res.eta)
        .with("residual", res.residual);

  // independent node count via sign changes of phi; nodes landing on a zero
  // are counted directly and reset the sign comparison
  auto shifted = a.shifted(res.eta);
  auto sol = detail::solve_scalar(shifted, 1.0, tol);
  int n = std::max(513, int(std::ceil(8.0 * (1.0 + shifted.sup_abs()) / M_PI)));
  double scale = 0;
  std::vector<double> ts(n), ph(n);
  for (int k = 0; k < n; ++k) {
    ts[k] = double(k) / (n - 1);
    ph[k] = sol.phi(ts[k]);
    scale = std::max(scale, std::abs(ph[k]));
  }
  double last_zero = -1;
  bool have_prev = false;
  double prev_t = 0, prev_val = 0;
  for (int k = 0; k < n; ++k) {
    if (std::abs(ph[k]) < 1e-9 * scale) {
      if (ts[k] > 1e-12 && ts[k] < 1.0 - 1e-12 && ts[k] - last_zero > 1e-6) {
        ++res.zeros;
        last_zero = ts[k];
        if (std::abs(sol.phip(ts[k])) < 1e-10) res.tangential = true;
      }
      have_prev = false;
      continue;
    }
    if (have_prev && (prev_val < 0) != (ph[k] < 0)) {
      double z = bracket_root([&](double t) { return sol.phi(t); }, prev_t,
                              ts[k], 1e-12);
      if (z > 1e-12 && z < 1.0 - 1e-12 && z - last_zero > 1e-6) {
        ++res.zeros;
        last_zero = z;
        if (std::abs(sol.phip(z)) < 1e-10) res.tangential = true;
      }
    }
    have_prev = true;
    prev_t = ts[k];
    prev_val = ph[k];
  }
  if (res.zeros != j - 1)
    throw Error(errc::consistency_violation,
                "eigenfunction zero count disagrees with j - 1")
        .with("j", (long long)j)
        .with("zeros", (long long)res.zeros)
        .with("eta", res.eta);
  return res;
}

struct SturmComparison {
  double theta1_a = 0, theta1_b = 0;
  double theta2_a = 0, theta2_b = 0;
};

inline SturmComparison sturm_compare(const ScalarPotential& a,
                                     const ScalarPotential& b) {
  for (int k = 0; k <= 256; ++k) {
    double t = k / 256.0;
    double va = a(t), vb = b(t);
    if (va > vb + 1e-12 * (1.0 + std::abs(va) + std::abs(vb)))
      throw Error(errc::hypothesis_violated, "potentials are not ordered")
          .with("t", t)
          .with("a", va)
          .with("b", vb);
  }
  SturmComparison c;
  c.theta1_a = prufer_angle(a);
  c.theta1_b = prufer_angle(b);
  c.theta2_a = second_block_angle(a);
  c.theta2_b = second_block_angle(b);
  if (c.theta1_a > c.theta1_b + 1e-8 || c.theta2_a < c.theta2_b - 1e-8)
    throw Error(errc::consistency_violation,
                "terminal angles violate the comparison order")
        .with("theta1_a", c.theta1_a)
        .with("theta1_b", c.theta1_b);
  return c;
}

}  // namespace indef
