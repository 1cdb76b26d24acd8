#pragma once
// Maslov index of the fundamental Lagrangian path relative to the vertical,
// computed three ways: closed-form constant-split formula, terminal
// phase-angle counts, and the crossing-form signature sum over [eps, 1].
// Half-integers are stored exactly via twice_value.

#include <indef/phase.hpp>
#include <indef/roots.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

namespace indef {

struct MaslovIndex {
  long long twice_value = 0;
  std::vector<Crossing> crossings;
  double epsilon = 0;  // start of the counted window (0 for formula paths)

  double value() const { return 0.5 * double(twice_value); }
};

// #{ i >= 1 : i^2 pi^2 < a }, strict
inline int count_N(double a) {
  if (!std::isfinite(a)) fail(errc::bad_request, "count_N: a not finite");
  if (a <= M_PI * M_PI) return 0;
  int n = int(std::floor(std::sqrt(a) / M_PI));
  // strictness at the boundary
  while (n >= 1 && double(n) * n * M_PI * M_PI >= a) --n;
  while (double(n + 1) * (n + 1) * M_PI * M_PI < a) ++n;
  return n;
}

struct ConstantSplitSpectrum {
  std::vector<double> lambda;  // eigenvalues of A, sorted, n - nu entries
  std::vector<double> mu;      // eigenvalues of B, sorted, nu entries

  static ConstantSplitSpectrum from_blocks(const Mat& A, const Mat& B) {
    ConstantSplitSpectrum s;
    if (A.rows() > 0) {
      Eigen::SelfAdjointEigenSolver<Mat> ea(A);
      s.lambda.assign(ea.eigenvalues().data(),
                      ea.eigenvalues().data() + A.rows());
    }
    if (B.rows() > 0) {
      Eigen::SelfAdjointEigenSolver<Mat> eb(B);
      s.mu.assign(eb.eigenvalues().data(), eb.eigenvalues().data() + B.rows());
    }
    return s;
  }
};

namespace detail {

inline double dist_to_dirichlet_spectrum(double a) {
  if (a <= 0) return std::abs(a - M_PI * M_PI);
  double s = std::sqrt(a) / M_PI;
  double lo = std::max(1.0, std::floor(s));
  double hi = lo + 1;
  return std::min(std::abs(a - lo * lo * M_PI * M_PI),
                  std::abs(a - hi * hi * M_PI * M_PI));
}

}  // namespace detail

inline MaslovIndex maslov_constant_split(const ConstantSplitSpectrum& spec,
                                         const Signature& sig,
                                         double tol_deg = 1e-10) {
  sig.validate();
  if (int(spec.lambda.size()) != sig.d1() || int(spec.mu.size()) != sig.d2())
    fail(errc::dimension_mismatch, "spectrum does not match the signature");
  long long m = 0;
  for (double l : spec.lambda) {
    if (detail::dist_to_dirichlet_spectrum(l) < tol_deg)
      throw Error(errc::degenerate, "eigenvalue sits on the Dirichlet spectrum")
          .with("eigenvalue", l);
    m += count_N(l);
  }
  for (double u : spec.mu) {
    if (detail::dist_to_dirichlet_spectrum(-u) < tol_deg)
      throw Error(errc::degenerate, "eigenvalue sits on the Dirichlet spectrum")
          .with("eigenvalue", u);
    m -= count_N(-u);
  }
  MaslovIndex idx;
  idx.twice_value = 2 * m;
  return idx;
}

inline MaslovIndex maslov_from_phase_angles(const PhaseAngleTrace& trace,
                                            double tol_end = 1e-8) {
  for (int blk = 1; blk <= 2; ++blk) {
    const auto& sorted = blk == 1 ? trace.sorted1 : trace.sorted2;
    for (const auto& p : sorted) {
      double th = p.back();
      double dist = std::abs(th - M_PI * std::round(th / M_PI));
      if (dist < tol_end)
        throw Error(errc::degenerate_endpoint,
                    "terminal angle sits on a multiple of pi")
            .with("theta", th)
            .with("block", (long long)blk);
    }
  }
  auto ka = k_alpha(trace, trace.grid.back());
  MaslovIndex idx;
  idx.twice_value = 2 * (ka.k1_sum() - ka.k2_sum());
  return idx;
}

struct CrossingFormOptions {
  double epsilon = 0;       // 0: auto-select from the first det sign change
  bool verify_form = true;  // finite-difference omega-form check, dims <= 2
  CrossingOptions cross;
};

inline MaslovIndex maslov_crossing_form(const FundamentalSolution& F,
                                        const CrossingFormOptions& opt = {}) {
  auto trace = compute_phase_trace(F);
  double t1 = F.grid.back();

  double eps = opt.epsilon;
  if (eps <= 0) {
    // scan the block determinants from t = 0; eps is half the first
    // sign-change abscissa
    int m = std::max(4097, 4 * F.grid.size());
    double first = t1;
    bool found = false;
    for (int blk = 1; blk <= 2; ++blk) {
      int d = blk == 1 ? F.sig.d1() : F.sig.d2();
      if (d == 0) continue;
      const auto& flow = blk == 1 ? F.flow1 : F.flow2;
      auto det_at = [&](double t) { return flow.X_at(t).determinant(); };
      double t_prev = t1 / (m - 1);
      double v_prev = det_at(t_prev);
      for (int k = 2; k < m; ++k) {
        double t = t1 * k / (m - 1);
        double v = det_at(t);
        if ((v_prev < 0) != (v < 0) || v == 0.0) {
          double z = v == 0.0 ? t : bracket_root(det_at, t_prev, t, 1e-12);
          first = std::min(first, z);
          found = true;
          break;
        }
        t_prev = t;
        v_prev = v;
      }
    }
    eps = found ? first / 2 : t1 / 2;
    if (eps < 1e-4)
      throw Error(errc::epsilon_not_found,
                  "no crossing-free initial window of usable length")
          .with("first_crossing", first);
    // certify: the window below eps must be crossing-free; an
    // even-multiplicity crossing leaves the determinant sign unchanged, so
    // adjust below any crossing the scan missed
    auto pre = detect_crossings(trace, std::max(1e-5, eps / 8), eps * 0.999,
                                opt.cross);
    if (!pre.empty()) {
      eps = pre.front().t / 2;
      if (eps < 1e-4)
        throw Error(errc::epsilon_not_found,
                    "no crossing-free initial window of usable length")
            .with("first_crossing", pre.front().t);
    }
  }

  MaslovIndex idx;
  idx.epsilon = eps;
  idx.crossings = detect_crossings(trace, eps, t1, opt.cross);

  for (const auto& c : idx.crossings) {
    bool at_end = std::abs(c.t - eps) <= 1e-9 || std::abs(c.t - t1) <= 1e-9;
    idx.twice_value += (at_end ? 1 : 2) * c.signature_contribution;

    if (!opt.verify_form) continue;
    // omega-form check per kernel direction: the crossing form carries the
    // opposite sign of the clockwise angle slope, block-wise constant
    for (int blk = 1; blk <= 2; ++blk) {
      int d = blk == 1 ? F.sig.d1() : F.sig.d2();
      if (d == 0 || d > 2) continue;
      bool block_hit = false;
      for (auto& bl : c.block_labels) block_hit |= bl.first == blk;
      if (!block_hit) continue;
      const auto& flow = blk == 1 ? F.flow1 : F.flow2;
      Mat X = flow.X_at(c.t);
      Mat Xp = flow.Xp_at(c.t);
      Eigen::JacobiSVD<Mat> svd(X, Eigen::ComputeFullV);
      double h = 1e-6;
      double ta = std::max(c.t - h, 0.0), tb = std::min(c.t + h, t1);
      Mat dX = (flow.X_at(tb) - flow.X_at(ta)) / (tb - ta);
      for (int q = 0; q < d; ++q) {
        if (svd.singularValues()[q] > 1e-6 * (1.0 + X.norm())) continue;
        Vec v = svd.matrixV().col(q);
        double gamma = -(Xp * v).dot(dX * v);
        double scale = (Xp * v).squaredNorm();
        if (std::abs(gamma) < 1e-7 * (1.0 + scale))
          throw Error(errc::non_regular_crossing,
                      "crossing form degenerate on a kernel direction")
              .with("t", c.t)
              .with("gamma", gamma);
        int expect = blk == 1 ? -1 : 1;  // opposite of the +1 / -1 slope
        if ((gamma > 0 ? 1 : -1) != expect)
          throw Error(errc::consistency_violation,
                      "crossing form sign disagrees with the angle slope")
              .with("t", c.t)
              .with("gamma", gamma);
      }
    }
  }
  return idx;
}

// |m_measured - (sum N(lambda_i) - sum N(-mu_i))| <= n/2, exact in twice units
inline bool degenerate_bound(const ConstantSplitSpectrum& spec,
                             const Signature& sig,
                             const MaslovIndex& measured) {
  long long formula = 0;
  for (double l : spec.lambda) formula += count_N(l);
  for (double u : spec.mu) formula -= count_N(-u);
  return std::llabs(measured.twice_value - 2 * formula) <= sig.n;
}

}  // namespace indef
