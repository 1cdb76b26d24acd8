#pragma once
// Continuous tracking of eigenvalue arguments along a matrix path.
//
// Spectra carry the raw arguments of e^{2i*theta}; unwrapping happens in the
// doubled variable and is halved afterwards, so consecutive tracked angles
// differ by less than pi/2 by construction. Labels are matched step-to-step
// by the cheapest of the d cyclic-order-preserving alignments of the two
// circularly sorted lists. When a step moves an angle by more than pi/8 the
// step is halved via the spectrum provider; a plain precomputed sequence
// cannot refine and reports TrackingAmbiguity instead.

#include <indef/eig.hpp>
#include <indef/error.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <type_traits>
#include <vector>

namespace indef {

struct TrackOptions {
  // splitting a near-double eigenvalue of a 2x2..8x8 matrix is conditioned
  // like sqrt(eps), so coalescence tolerances must sit above ~1e-8
  double tol_match = 1e-7;
  double tol_coal = 1e-7;
  double max_disp = M_PI / 8;  // per-step cap on |delta theta|
  int max_depth = 48;
};

namespace detail {

inline double wrap_pi(double x) {
  double w = std::remainder(x, 2.0 * M_PI);
  if (w <= -M_PI) w = M_PI;
  return w;
}

struct MatchResult {
  std::vector<double> lifted;  // new theta per label
  double max_disp = 0;
};

// theta_prev: current lifted angles; raw: arguments of e^{2i theta} at the
// next sample. Displacements are computed in the doubled variable. Only the
// d cyclic alignments of the two circularly sorted lists are candidates:
// eigenangle curves of a continuous unitary path exchange cyclic order only
// by meeting, so an order-preserving match keeps every lifted path
// continuous even when two angles sit closer together than the step motion
// (a free min-cost assignment can swap such labels and tear the lift).
inline MatchResult match_step(const std::vector<double>& theta_prev,
                              const std::vector<double>& raw,
                              const TrackOptions& opt) {
  const int d = int(theta_prev.size());
  MatchResult res;
  res.lifted.resize(d);
  if (d == 0) return res;

  auto circ = [](double x) {  // representative in [0, 2pi)
    double w = std::fmod(x, 2.0 * M_PI);
    if (w < 0) w += 2.0 * M_PI;
    return w;
  };
  std::vector<int> ord_prev(d), ord_raw(d);
  std::iota(ord_prev.begin(), ord_prev.end(), 0);
  std::iota(ord_raw.begin(), ord_raw.end(), 0);
  std::stable_sort(ord_prev.begin(), ord_prev.end(), [&](int a, int b) {
    return circ(2.0 * theta_prev[a]) < circ(2.0 * theta_prev[b]);
  });
  std::stable_sort(ord_raw.begin(), ord_raw.end(),
                   [&](int a, int b) { return circ(raw[a]) < circ(raw[b]); });

  int best_s = 0;
  double best_cost = std::numeric_limits<double>::infinity();
  for (int s = 0; s < d; ++s) {
    double cost = 0;
    for (int i = 0; i < d; ++i)
      cost += std::abs(wrap_pi(raw[ord_raw[(i + s) % d]] -
                               2.0 * theta_prev[ord_prev[i]]));
    if (cost < best_cost - opt.tol_match) {
      best_cost = cost;
      best_s = s;
    }
  }

  for (int i = 0; i < d; ++i) {
    const int l = ord_prev[i];
    double dl =
        0.5 * wrap_pi(raw[ord_raw[(i + best_s) % d]] - 2.0 * theta_prev[l]);
    res.lifted[l] = theta_prev[l] + dl;
    res.max_disp = std::max(res.max_disp, std::abs(dl));
  }
  return res;
}

}  // namespace detail

// Provider-backed tracking; provider(t) -> UnitCircleSpectrum.
template <class Provider>
  requires std::is_invocable_v<Provider&, double>
std::vector<std::vector<double>> track_angles(const std::vector<double>& times,
                                              Provider&& provider,
                                              std::vector<double> init = {},
                                              const TrackOptions& opt = {}) {
  if (times.size() < 2) fail(errc::bad_request, "track_angles: need >= 2 times");
  UnitCircleSpectrum first = provider(times.front());
  const int d = first.size();
  if (init.empty()) init.assign(d, 0.0);
  if (int(init.size()) != d)
    fail(errc::bad_request, "track_angles: init size mismatch");

  std::vector<std::vector<double>> paths(d, std::vector<double>(times.size()));
  for (int l = 0; l < d; ++l) paths[l][0] = init[l];

  std::vector<double> cur = init;
  for (size_t k = 1; k < times.size(); ++k) {
    // segment [times[k-1], times[k]], refined on demand
    struct Seg { double t; std::vector<double> raw; };
    double t_a = times[k - 1];
    std::vector<Seg> stack;  // pending right endpoints, nearest last
    stack.push_back({times[k], provider(times[k]).angles});
    int depth = 0;
    while (!stack.empty()) {
      Seg seg = stack.back();
      auto res = detail::match_step(cur, seg.raw, opt);
      if (res.max_disp > opt.max_disp && d > 0) {
        if (depth >= opt.max_depth || seg.t - t_a < 1e-13)
          throw Error(errc::tracking_ambiguity,
                      "angle step exceeds the displacement cap; refinement exhausted")
              .with("t", seg.t)
              .with("max_disp", res.max_disp);
        double tm = 0.5 * (t_a + seg.t);
        stack.push_back({tm, provider(tm).angles});
        ++depth;
        continue;
      }
      stack.pop_back();
      cur = res.lifted;
      t_a = seg.t;
    }
    for (int l = 0; l < d; ++l) paths[l][k] = cur[l];
  }
  return paths;
}

// Precomputed-sequence tracking (no refinement possible).
inline std::vector<std::vector<double>> track_angles(
    const std::vector<double>& times,
    const std::vector<UnitCircleSpectrum>& spectra,
    std::vector<double> init = {}, TrackOptions opt = {}) {
  if (times.size() != spectra.size())
    fail(errc::bad_request, "track_angles: times/spectra size mismatch");
  opt.max_depth = 0;
  return track_angles(
      times,
      [&](double t) -> UnitCircleSpectrum {
        // only ever queried at the given times (max_depth = 0)
        auto it = std::lower_bound(times.begin(), times.end(), t - 1e-15);
        size_t k = std::min<size_t>(size_t(it - times.begin()), times.size() - 1);
        return spectra[k];
      },
      std::move(init), opt);
}

}  // namespace indef
