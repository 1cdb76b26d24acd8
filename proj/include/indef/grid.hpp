#pragma once
// TimeGrid (discretization of [0,1]) and Trajectory (dense ODE output).
//
// A Trajectory keeps the integrator's accepted nodes together with the RHS
// values there, so any intermediate state is recovered by cubic Hermite
// interpolation; grid-synchronized states are sampled from that.

#include <indef/error.hpp>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <vector>

namespace indef {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

struct TimeGrid {
  std::vector<double> points;

  static TimeGrid uniform(int count, double t0 = 0.0, double t1 = 1.0) {
    if (count < 2) fail(errc::bad_request, "TimeGrid needs at least 2 points");
    TimeGrid g;
    g.points.resize(count);
    for (int i = 0; i < count; ++i)
      g.points[i] = t0 + (t1 - t0) * double(i) / double(count - 1);
    g.points.front() = t0;
    g.points.back() = t1;
    return g;
  }

  int size() const { return int(points.size()); }
  double front() const { return points.front(); }
  double back() const { return points.back(); }

  void validate() const {
    if (points.size() < 2) fail(errc::bad_request, "grid too short");
    for (size_t i = 1; i < points.size(); ++i)
      if (!(points[i] > points[i - 1]))
        fail(errc::bad_request, "grid not strictly increasing");
  }
};

// Dense trajectory: nodes t[k] with states y[k] and derivatives f[k].
struct Trajectory {
  std::vector<double> t;
  std::vector<Vec> y;
  std::vector<Vec> f;

  int dim() const { return t.empty() ? 0 : int(y.front().size()); }
  double t0() const { return t.front(); }
  double t1() const { return t.back(); }

  int interval_of(double s) const {
    // index k with t[k] <= s <= t[k+1], clamped at the ends
    auto it = std::upper_bound(t.begin(), t.end(), s);
    int k = int(it - t.begin()) - 1;
    return std::clamp(k, 0, int(t.size()) - 2);
  }

  Vec value(double s) const {
    if (t.size() == 1) return y.front();
    int k = interval_of(s);
    double h = t[k + 1] - t[k];
    double x = (s - t[k]) / h;
    double x2 = x * x, x3 = x2 * x;
    double h00 = 2 * x3 - 3 * x2 + 1, h10 = x3 - 2 * x2 + x;
    double h01 = -2 * x3 + 3 * x2, h11 = x3 - x2;
    return h00 * y[k] + (h10 * h) * f[k] + h01 * y[k + 1] + (h11 * h) * f[k + 1];
  }

  Vec derivative(double s) const {
    if (t.size() == 1) return f.front();
    int k = interval_of(s);
    double h = t[k + 1] - t[k];
    double x = (s - t[k]) / h;
    double x2 = x * x;
    double d00 = (6 * x2 - 6 * x) / h, d10 = 3 * x2 - 4 * x + 1;
    double d01 = (-6 * x2 + 6 * x) / h, d11 = 3 * x2 - 2 * x;
    return d00 * y[k] + d10 * f[k] + d01 * y[k + 1] + d11 * f[k + 1];
  }

  // States re-sampled on an output grid (exact at shared nodes).
  std::vector<Vec> sample(const TimeGrid& grid) const {
    std::vector<Vec> out;
    out.reserve(grid.points.size());
    for (double s : grid.points) out.push_back(value(s));
    return out;
  }
};

}  // namespace indef
