#pragma once
// Phase angle traces of the decoupled block systems.
//
// Y^j(t) = (X'_j + iX_j)(X'_j - iX_j)^{-1} is unitary symmetric; its
// eigenvalue arguments are 2*theta. Raw angles are tracked continuously from
// zero; sorted angles rearrange the raw ones pointwise (tie persistence keeps
// them continuous through collisions). Crossings are the instants where an
// angle hits a multiple of pi; they are refined by bracketing det X_j and
// cross-checked against the kernel dimension of the X block.

#include <indef/eig.hpp>
#include <indef/error.hpp>
#include <indef/hamiltonian.hpp>
#include <indef/roots.hpp>
#include <indef/tracking.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace indef {

struct PhaseAngleTrace {
  Signature sig;
  TimeGrid grid;
  std::vector<std::vector<double>> raw1, raw2;        // [label][node]
  std::vector<std::vector<double>> sorted1, sorted2;  // pointwise nondecreasing
  FundamentalSolution F;  // kept for dense re-evaluation

  // terminal sorted angles
  std::vector<double> theta1_end() const {
    std::vector<double> v;
    for (const auto& p : sorted1) v.push_back(p.back());
    return v;
  }
  std::vector<double> theta2_end() const {
    std::vector<double> v;
    for (const auto& p : sorted2) v.push_back(p.back());
    return v;
  }
  double sum_end() const {
    double s = 0;
    for (const auto& p : sorted1) s += p.back();
    for (const auto& p : sorted2) s += p.back();
    return s;
  }
};

struct Crossing {
  double t = 0;
  int multiplicity = 0;
  std::vector<std::pair<int, int>> block_labels;  // (block 1|2, label)
  int signature_contribution = 0;                 // sum of sgn(theta') over labels
};

struct KAlphaDecomposition {
  std::vector<long long> k1, k2;
  std::vector<double> alpha1, alpha2;
  double t = 1.0;

  long long k1_sum() const { long long s = 0; for (auto v : k1) s += v; return s; }
  long long k2_sum() const { long long s = 0; for (auto v : k2) s += v; return s; }
};

namespace detail {

inline CMat block_Y(const Mat& X, const Mat& Xp, double tol_inv = 1e-12) {
  CMat P = Xp.cast<cplx>() + cplx(0, 1) * X.cast<cplx>();
  CMat Q = Xp.cast<cplx>() - cplx(0, 1) * X.cast<cplx>();
  Eigen::JacobiSVD<CMat> svd(Q, Eigen::ComputeThinU | Eigen::ComputeThinV);
  double smin = svd.singularValues().minCoeff();
  if (smin <= tol_inv * (1.0 + Q.norm()))
    throw Error(errc::not_invertible, "X' - iX is numerically singular").with("smin", smin);
  return P * Q.inverse();
}

// lift the angles of block `blk` from the node values at grid index k to time t
inline std::vector<double> lift_block_at(const PhaseAngleTrace& trace, int blk,
                                         int k, double t) {
  const auto& raw = blk == 1 ? trace.raw1 : trace.raw2;
  const auto& flow = blk == 1 ? trace.F.flow1 : trace.F.flow2;
  std::vector<double> cur(raw.size());
  for (size_t l = 0; l < raw.size(); ++l) cur[l] = raw[l][k];
  double t_k = trace.grid.points[k];
  if (t == t_k) return cur;
  TrackOptions opt;
  int steps = 1;
  while (steps <= 16) {
    std::vector<double> probe = cur;
    bool ok = true;
    for (int s = 1; s <= steps; ++s) {
      double ts = t_k + (t - t_k) * s / steps;
      auto spec = unit_circle_eigvals(block_Y(flow.X_at(ts), flow.Xp_at(ts)), 1e-6);
      auto res = match_step(probe, spec.angles, opt);
      if (res.max_disp > opt.max_disp) { ok = false; break; }
      probe = res.lifted;
    }
    if (ok) return probe;
    steps *= 2;
  }
  throw Error(errc::tracking_ambiguity, "dense angle lift failed").with("t", t);
}

}  // namespace detail

// Grid fine enough for angle tracking: |theta'| <= max(1, sup ||coeff||).
inline TimeGrid phase_grid(const SplitSymmetricPath& path, double t1 = 1.0,
                           int base = 257) {
  double bound = 1.0;
  for (int k = 0; k <= 32; ++k) {
    double t = t1 * k / 32.0;
    if (path.sig.d1() > 0) bound = std::max(bound, path.A(t).norm());
    if (path.sig.d2() > 0) bound = std::max(bound, path.B(t).norm());
  }
  int need = int(std::ceil(t1 * bound * 8.0 / M_PI)) + 2;
  return TimeGrid::uniform(std::max(base, need), 0.0, t1);
}

inline PhaseAngleTrace compute_phase_trace(const FundamentalSolution& F) {
  PhaseAngleTrace trace;
  trace.sig = F.sig;
  trace.grid = F.grid;
  trace.F = F;

  const auto& times = F.grid.points;
  for (int blk = 1; blk <= 2; ++blk) {
    int d = blk == 1 ? F.sig.d1() : F.sig.d2();
    auto& raw = blk == 1 ? trace.raw1 : trace.raw2;
    auto& sorted = blk == 1 ? trace.sorted1 : trace.sorted2;
    raw.assign(d, {});
    sorted.assign(d, {});
    if (d == 0) continue;

    const auto& flow = blk == 1 ? F.flow1 : F.flow2;
    const auto& Xs = blk == 1 ? F.X1 : F.X2;
    const auto& Xps = blk == 1 ? F.X1p : F.X2p;

    // unitarity/symmetry contract of Y at the nodes
    for (size_t k = 0; k < times.size(); ++k) {
      CMat Y = detail::block_Y(Xs[k], Xps[k]);
      double udev = (Y.adjoint() * Y - CMat::Identity(d, d)).norm();
      double sdev = (Y - Y.transpose()).norm();
      if (udev > 1e-8 || sdev > 1e-8)
        throw Error(errc::not_unitary, "Y block failed unitarity/symmetry check")
            .with("t", times[k])
            .with("unitary_dev", udev)
            .with("symmetry_dev", sdev);
    }

    auto provider = [&](double t) {
      // exact node values when available, dense frames otherwise
      auto it = std::lower_bound(times.begin(), times.end(), t - 1e-15);
      if (it != times.end() && std::abs(*it - t) < 1e-15) {
        size_t k = size_t(it - times.begin());
        return unit_circle_eigvals(detail::block_Y(Xs[k], Xps[k]), 1e-6);
      }
      return unit_circle_eigvals(detail::block_Y(flow.X_at(t), flow.Xp_at(t)), 1e-6);
    };
    auto paths = track_angles(times, provider);
    for (int l = 0; l < d; ++l) raw[l] = std::move(paths[l]);

    // pointwise sort with tie persistence
    std::vector<int> perm(d);
    std::iota(perm.begin(), perm.end(), 0);
    for (int l = 0; l < d; ++l) sorted[l].resize(times.size());
    for (size_t k = 0; k < times.size(); ++k) {
      std::stable_sort(perm.begin(), perm.end(),
                       [&](int a, int b) { return raw[a][k] < raw[b][k]; });
      for (int l = 0; l < d; ++l) sorted[l][k] = raw[perm[l]][k];
    }
  }
  return trace;
}

struct CrossingOptions {
  // candidate threshold sits above the sqrt(eps) eigenvalue-splitting noise
  // of coalesced labels
  double tol_cross = 1e-7;       // |theta - m*pi| candidate threshold at nodes
  double t_refine = 1e-12;       // bisection width in t
  double tol_transverse = 1e-7;  // minimal |theta'| at a crossing
  double merge_tol = 1e-9;       // coincident-instant merging
};

inline std::vector<Crossing> detect_crossings(const PhaseAngleTrace& trace,
                                              double t_lo, double t_hi,
                                              const CrossingOptions& opt = {}) {
  if (!(0 <= t_lo && t_lo < t_hi && t_hi <= trace.grid.back() + 1e-15))
    fail(errc::bad_request, "detect_crossings: bad window");
  struct Hit {
    double t;
    int blk, label;
    double slope;
  };
  std::vector<Hit> hits;
  const auto& times = trace.grid.points;

  for (int blk = 1; blk <= 2; ++blk) {
    const auto& raw = blk == 1 ? trace.raw1 : trace.raw2;
    for (size_t l = 0; l < raw.size(); ++l) {
      const auto& th = raw[l];
      for (size_t k = 0; k + 1 < times.size(); ++k) {
        double a = std::max(times[k], t_lo), b = std::min(times[k + 1], t_hi);
        if (!(a < b)) continue;
        // candidate multiples of pi strictly bracketed by the node values,
        // plus near-touch candidates at either node
        double va = th[k], vb = th[k + 1];
        double guard = 2 * opt.tol_cross / M_PI;
        long long m_lo = (long long)std::ceil(std::min(va, vb) / M_PI - guard);
        long long m_hi = (long long)std::floor(std::max(va, vb) / M_PI + guard);
        for (long long m = m_lo; m <= m_hi; ++m) {
          double target = m * M_PI;
          auto angle_at = [&](double t) {
            return detail::lift_block_at(trace, blk, int(k), t)[l] - target;
          };
          double ga = va - target, gb = vb - target;
          double t_star;
          if (std::abs(ga) < opt.tol_cross && times[k] >= t_lo) {
            t_star = times[k];
          } else if (std::abs(gb) < opt.tol_cross) {
            t_star = times[k + 1];
          } else if ((ga < 0) != (gb < 0)) {
            t_star = bracket_root(angle_at, times[k], times[k + 1], opt.t_refine);
          } else {
            continue;
          }
          if (t_star < t_lo - 1e-12 || t_star > t_hi + 1e-12) continue;
          // slope via central difference of the lifted angle
          double h = std::max(1e-7, 1e-9 * (times.back() - times.front()));
          double tl = std::max(t_star - h, times.front());
          double tr = std::min(t_star + h, times.back());
          double slope = (detail::lift_block_at(trace, blk, int(k), tr)[l] -
                          detail::lift_block_at(trace, blk, int(k), tl)[l]) /
                         (tr - tl);
          if (std::abs(slope) < opt.tol_transverse)
            throw Error(errc::tangential_crossing, "crossing fails transversality")
                .with("t", t_star)
                .with("slope", slope);
          hits.push_back({t_star, blk, int(l), slope});
        }
      }
    }
  }

  std::sort(hits.begin(), hits.end(), [](const Hit& a, const Hit& b) { return a.t < b.t; });
  std::vector<Crossing> out;
  size_t i = 0;
  while (i < hits.size()) {
    size_t j = i;
    Crossing c;
    c.t = hits[i].t;
    while (j < hits.size() && hits[j].t - c.t <= opt.merge_tol) {
      // a label can appear only once per merged instant
      bool dup = false;
      for (auto& bl : c.block_labels)
        if (bl.first == hits[j].blk && bl.second == hits[j].label) dup = true;
      if (!dup) {
        c.block_labels.push_back({hits[j].blk, hits[j].label});
        c.signature_contribution += hits[j].slope > 0 ? 1 : -1;
      }
      ++j;
    }
    c.multiplicity = int(c.block_labels.size());
    // kernel-dimension cross-check at the refined instant
    int kerdim = 0;
    for (int blk = 1; blk <= 2; ++blk) {
      int d = blk == 1 ? trace.sig.d1() : trace.sig.d2();
      if (d == 0) continue;
      const auto& flow = blk == 1 ? trace.F.flow1 : trace.F.flow2;
      Mat X = flow.X_at(c.t);
      auto sv = X.jacobiSvd().singularValues();
      for (int q = 0; q < d; ++q)
        if (sv[q] <= 1e-6 * (1.0 + X.norm())) ++kerdim;
    }
    if (kerdim != c.multiplicity)
      throw Error(errc::consistency_violation,
                  "crossing multiplicity disagrees with kernel dimension")
          .with("t", c.t)
          .with("angles", (long long)c.multiplicity)
          .with("kernel", (long long)kerdim);
    out.push_back(std::move(c));
    i = j;
  }
  return out;
}

inline KAlphaDecomposition k_alpha(const PhaseAngleTrace& trace, double t) {
  if (!(t > 0 && t <= trace.grid.back() + 1e-15))
    fail(errc::bad_request, "k_alpha: t out of (0, 1]");
  const auto& times = trace.grid.points;
  auto value_at = [&](const std::vector<double>& path) {
    auto it = std::lower_bound(times.begin(), times.end(), t - 1e-15);
    size_t k = std::min<size_t>(size_t(it - times.begin()), times.size() - 1);
    if (std::abs(times[k] - t) < 1e-12) return path[k];
    size_t k0 = k > 0 ? k - 1 : 0;
    double w = (t - times[k0]) / (times[k] - times[k0]);
    return (1 - w) * path[k0] + w * path[k];
  };
  // k = ceil(x/pi) - 1 and alpha = x - k*pi in (0, pi]; values within 1e-12
  // of an exact multiple snap to alpha = pi
  auto split = [](double x) {
    double r = x / M_PI;
    double n = std::round(r);
    long long k;
    if (std::abs(r - n) < 1e-12)
      k = (long long)n - 1;
    else
      k = (long long)std::ceil(r) - 1;
    return std::pair<long long, double>(k, x - double(k) * M_PI);
  };
  KAlphaDecomposition dec;
  dec.t = t;
  for (const auto& p : trace.sorted1) {
    auto [k, a] = split(value_at(p));
    dec.k1.push_back(k);
    dec.alpha1.push_back(a);
  }
  for (const auto& p : trace.sorted2) {
    auto [k, a] = split(-value_at(p));
    dec.k2.push_back(k);
    dec.alpha2.push_back(a);
  }
  return dec;
}

}  // namespace indef
