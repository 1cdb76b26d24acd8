#pragma once
// Nonlinear problem layer.  A problem couples an expression-backed
// coefficient matrix S(t, x) with its diagonal asymptotes S_0 and S_inf.
// This header provides the hypothesis checks (V0)-(V3), the linearized
// systems frozen along shooting trajectories, the separation radii
// alpha_0 / alpha_inf, the elastic trajectory bound, the cylinder maxima
// lambda_bar with their per-hyperplane sorting permutations, the vectors
// delta_bar(h), and the admissible sets S / S' / T together with the
// sufficiency and emptiness reports.

#include <indef/error.hpp>
#include <indef/expr.hpp>
#include <indef/grid.hpp>
#include <indef/hamiltonian.hpp>
#include <indef/maslov.hpp>
#include <indef/ode.hpp>
#include <indef/par.hpp>
#include <indef/phase.hpp>
#include <indef/sturm.hpp>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <shared_mutex>
#include <string>
#include <utility>
#include <vector>

namespace indef {

// Strictness margin for the sign conditions defining T: inequalities on
// delta_bar(h) are accepted only beyond this gap, so roundoff at the
// boundary can only shrink the reported set, never grow it.
inline constexpr double kStrictMargin = 1e-9;

struct ProblemOptions {
  double tol_ode = 1e-10;     // trajectory / fundamental-solution tolerance
  double tol_nd = 1e-6;       // nondegeneracy floor for the X(1) blocks
  double tol_pattern = 1e-9;  // split / diagonal off-pattern ceiling
  double tol_heur = 1e-3;     // remainder threshold at the extreme radii
  int t_samples = 17;         // time nodes for sampled checks
  int radius_samples = 9;     // geometric ladder between r_lo and r_hi
  double r_lo = 1e-4;
  double r_hi = 1e4;
  int cyl_grid = 33;          // cylinder tensor resolution per axis
  int hmax = 32;              // enumeration cap per component
  double eps_override = 0;    // 0: derive the margin from the S window
  double bounds_lo = 1e-3;    // alpha radius ladder for the separation scan
  double bounds_hi = 1e3;
  int bounds_per_decade = 4;
  int grid_base = 257;        // phase-trace grid floor
  int threads = 0;            // 0: TOOL_THREADS / hardware count
};

// ---------------------------------------------------------------------------
// Diagonal asymptote paths

struct DiagonalPath {
  Signature sig;
  std::vector<ScalarPotential> entries;  // n diagonal entries, functions of t
  bool constant = true;

  static DiagonalPath from_exprs(Signature sig, const std::vector<Expr>& diag) {
    sig.validate();
    if (int(diag.size()) != sig.n)
      fail(errc::dimension_mismatch, "diagonal must have n entries");
    DiagonalPath d;
    d.sig = sig;
    d.entries.reserve(diag.size());
    for (const Expr& e : diag) {
      d.entries.push_back(ScalarPotential::from_expr(e));
      d.constant = d.constant && d.entries.back().constant;
    }
    return d;
  }

  static DiagonalPath constants(Signature sig, const Vec& values) {
    sig.validate();
    if (int(values.size()) != sig.n)
      fail(errc::dimension_mismatch, "diagonal must have n entries");
    DiagonalPath d;
    d.sig = sig;
    for (int i = 0; i < sig.n; ++i) d.entries.emplace_back(values[i]);
    return d;
  }

  Vec at(double t) const {
    Vec v(sig.n);
    for (int i = 0; i < sig.n; ++i) v[i] = entries[i](t);
    return v;
  }

  SplitSymmetricPath path() const {
    const int d1 = sig.d1(), d2 = sig.d2();
    if (constant) {
      Vec v = at(0.0);
      return SplitSymmetricPath::constants(sig, Mat(v.head(d1).asDiagonal()),
                                           Mat(v.tail(d2).asDiagonal()));
    }
    auto ent = std::make_shared<const std::vector<ScalarPotential>>(entries);
    auto A = [ent, d1](double t) {
      Mat M = Mat::Zero(d1, d1);
      for (int i = 0; i < d1; ++i) M(i, i) = (*ent)[size_t(i)](t);
      return M;
    };
    auto B = [ent, d1, d2](double t) {
      Mat M = Mat::Zero(d2, d2);
      for (int i = 0; i < d2; ++i) M(i, i) = (*ent)[size_t(d1 + i)](t);
      return M;
    };
    return SplitSymmetricPath::from_blocks(sig, A, B);
  }
};

// ---------------------------------------------------------------------------
// The problem record

namespace detail {

inline Mat eval_expr_matrix(const std::vector<std::vector<Expr>>& table,
                            double t, const Vec& x) {
  const int n = int(table.size());
  EvalEnv env{t, x.data(), int(x.size())};
  Mat S(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) S(i, j) = table[size_t(i)][size_t(j)].eval(env);
  return S;
}

class LSystemCache;  // below

}  // namespace detail

struct NonlinearProblem {
  Signature sig;
  std::shared_ptr<const std::vector<std::vector<Expr>>> S_entries;
  DiagonalPath S0, Sinf;
  ProblemOptions opt;
  std::string name;
  std::shared_ptr<detail::LSystemCache> cache;

  Mat S_at(double t, const Vec& x) const {
    return detail::eval_expr_matrix(*S_entries, t, x);
  }
  double S_diag_at(int k, double t, const Vec& x) const {
    EvalEnv env{t, x.data(), int(x.size())};
    return (*S_entries)[size_t(k)][size_t(k)].eval(env);
  }
  bool x_dependent() const {
    for (const auto& row : *S_entries)
      for (const Expr& e : row)
        if (e.depends_on_x()) return true;
    return false;
  }
  bool t_dependent() const {
    for (const auto& row : *S_entries)
      for (const Expr& e : row)
        if (e.depends_on_t()) return true;
    return false;
  }
};

// ---------------------------------------------------------------------------
// Direction sets: every +-{0,1}^n sign pattern, normalized.  Deterministic
// and symmetric under both coordinate permutations and reflections, which is
// what the sampled checks below rely on.

inline std::vector<Vec> direction_set(int n) {
  if (n < 1) fail(errc::bad_request, "dimension must be positive");
  std::vector<Vec> dirs;
  for (int mask = 1; mask < (1 << n); ++mask) {
    Vec d = Vec::Zero(n);
    for (int i = 0; i < n; ++i)
      if (mask & (1 << i)) d[i] = 1.0;
    d.normalize();
    dirs.push_back(d);
    dirs.push_back(-d);
  }
  return dirs;
}

// Directions spanning the coordinate hyperplane W_i = {x_i = 0}.
inline std::vector<Vec> hyperplane_directions(int n, int i) {
  if (i < 0 || i >= n) fail(errc::bad_request, "hyperplane index out of range");
  std::vector<int> free_axes;
  for (int k = 0; k < n; ++k)
    if (k != i) free_axes.push_back(k);
  std::vector<Vec> dirs;
  const int m = int(free_axes.size());
  for (int mask = 1; mask < (1 << m); ++mask) {
    Vec d = Vec::Zero(n);
    for (int k = 0; k < m; ++k)
      if (mask & (1 << k)) d[free_axes[size_t(k)]] = 1.0;
    d.normalize();
    dirs.push_back(d);
    dirs.push_back(-d);
  }
  return dirs;
}

inline std::vector<double> radius_ladder(double lo, double hi, int count) {
  if (!(lo > 0) || !(hi > lo) || count < 2)
    fail(errc::bad_request, "radius ladder needs 0 < lo < hi and >= 2 samples");
  std::vector<double> r(static_cast<size_t>(count));
  const double step = std::log(hi / lo) / (count - 1);
  for (int k = 0; k < count; ++k) r[size_t(k)] = lo * std::exp(step * k);
  r.front() = lo;
  r.back() = hi;
  return r;
}

// ---------------------------------------------------------------------------
// Linearized systems along shooting trajectories

struct LSystem {
  Vec alpha;
  Signature sig;
  std::shared_ptr<const Trajectory> traj;  // state (u, u') on [0, 1]
  SplitSymmetricPath path;                 // t -> S(t, u_alpha(t))
  double split_dev = 0;  // worst sampled off-pattern/asymmetry along the orbit

  Vec u(double t) const { return traj->value(t).head(sig.n); }
  Vec du(double t) const { return traj->value(t).tail(sig.n); }

  // max |(u, u')| over the stored nodes and interval midpoints
  double state_sup() const {
    double m = 0;
    for (const auto& y : traj->y) m = std::max(m, y.norm());
    for (size_t k = 0; k + 1 < traj->t.size(); ++k)
      m = std::max(m, traj->value(0.5 * (traj->t[k] + traj->t[k + 1])).norm());
    return m;
  }
};

namespace detail {

struct LRecord {
  LSystem sys;
  std::once_flag trace_once;
  std::shared_ptr<const PhaseAngleTrace> trace;
};

// Bounded cache keyed by the exact bits of alpha.  Lookups take a shared
// lock; insertion and eviction are single-writer under the exclusive lock.
class LSystemCache {
 public:
  std::shared_ptr<LRecord> find(const std::vector<double>& key) {
    std::shared_lock<std::shared_mutex> lk(mtx_);
    auto it = map_.find(key);
    if (it == map_.end()) return nullptr;
    it->second.stamp->store(clock_.fetch_add(1, std::memory_order_relaxed),
                            std::memory_order_relaxed);
    return it->second.rec;
  }

  std::shared_ptr<LRecord> insert(const std::vector<double>& key,
                                  std::shared_ptr<LRecord> rec) {
    std::unique_lock<std::shared_mutex> lk(mtx_);
    auto it = map_.find(key);
    if (it != map_.end()) return it->second.rec;  // lost the race: keep first
    Slot s;
    s.rec = std::move(rec);
    s.stamp = std::make_shared<std::atomic<std::uint64_t>>(
        clock_.fetch_add(1, std::memory_order_relaxed));
    auto ins = map_.emplace(key, std::move(s)).first;
    if (map_.size() > kCap) evict_oldest();
    return ins->second.rec;
  }

 private:
  struct Slot {
    std::shared_ptr<LRecord> rec;
    std::shared_ptr<std::atomic<std::uint64_t>> stamp;
  };
  static constexpr size_t kCap = 256;

  void evict_oldest() {
    auto victim = map_.begin();
    for (auto it = map_.begin(); it != map_.end(); ++it)
      if (it->second.stamp->load(std::memory_order_relaxed) <
          victim->second.stamp->load(std::memory_order_relaxed))
        victim = it;
    map_.erase(victim);
  }

  std::shared_mutex mtx_;
  std::atomic<std::uint64_t> clock_{0};
  std::map<std::vector<double>, Slot> map_;
};

inline LSystem build_l_system(const NonlinearProblem& P, const Vec& alpha) {
  P.sig.validate();
  const int n = P.sig.n;
  if (int(alpha.size()) != n)
    fail(errc::dimension_mismatch, "alpha must have n components");
  if (!alpha.allFinite()) fail(errc::bad_request, "alpha must be finite");

  const Vec jd = P.sig.j_diag();
  Vec z0 = Vec::Zero(2 * n);
  z0.tail(n) = jd.cwiseProduct(alpha);  // u'(0) = J alpha (J is its own inverse)

  auto table = P.S_entries;
  auto rhs = [table, jd, n](double t, const Vec& z) {
    Vec u = z.head(n);
    Mat S = eval_expr_matrix(*table, t, u);
    Vec out(2 * n);
    out.head(n) = z.tail(n);
    out.tail(n) = -jd.cwiseProduct(S * u);
    return out;
  };

  Trajectory traj;
  try {
    OdeOptions ode;
    ode.tol = P.opt.tol_ode;
    traj = integrate(rhs, z0, 0.0, 1.0, ode);
  } catch (Error& e) {
    if (e.code == errc::non_finite)
      throw Error(errc::non_finite,
                  "shooting trajectory blew up before t = 1; the model "
                  "violates global continuability")
          .with("alpha_norm", alpha.norm());
    throw;
  }

  LSystem L;
  L.alpha = alpha;
  L.sig = P.sig;
  L.traj = std::make_shared<const Trajectory>(std::move(traj));

  const int d1 = P.sig.d1(), d2 = P.sig.d2();
  auto tp = L.traj;
  // Sampled split/symmetry audit of S along the orbit.
  double dev = 0, scale = 1;
  for (int k = 0; k <= 32; ++k) {
    double t = double(k) / 32.0;
    Mat S = eval_expr_matrix(*table, t, tp->value(t).head(n));
    scale = std::max(scale, S.cwiseAbs().maxCoeff());
    dev = std::max(dev, (S - S.transpose()).cwiseAbs().maxCoeff());
    if (d1 > 0 && d2 > 0)
      dev = std::max(dev, S.topRightCorner(d1, d2).cwiseAbs().maxCoeff());
  }
  L.split_dev = dev;
  if (dev > 1e-8 * scale)
    throw Error(errc::hypothesis_violated,
                "coefficient matrix is not split symmetric along the "
                "shooting trajectory")
        .with("deviation", dev)
        .with("alpha_norm", alpha.norm());

  bool const_path = true;
  bool t_dep = false, x_dep = false;
  for (const auto& row : *table)
    for (const Expr& e : row) {
      t_dep = t_dep || e.depends_on_t();
      x_dep = x_dep || e.depends_on_x();
    }
  const_path = !t_dep && (!x_dep || alpha.isZero(0.0));

  if (const_path) {
    Mat S = eval_expr_matrix(*table, 0.0, Vec::Zero(n));
    Mat A = 0.5 * (S.topLeftCorner(d1, d1) +
                   S.topLeftCorner(d1, d1).transpose().eval());
    Mat B = 0.5 * (S.bottomRightCorner(d2, d2) +
                   S.bottomRightCorner(d2, d2).transpose().eval());
    L.path = SplitSymmetricPath::constants(P.sig, A, B);
  } else {
    auto A = [table, tp, n, d1](double t) {
      Mat S = eval_expr_matrix(*table, t, tp->value(t).head(n));
      return Mat(0.5 * (S.topLeftCorner(d1, d1) +
                        S.topLeftCorner(d1, d1).transpose().eval()));
    };
    auto B = [table, tp, n, d1, d2](double t) {
      Mat S = eval_expr_matrix(*table, t, tp->value(t).head(n));
      return Mat(0.5 * (S.bottomRightCorner(d2, d2) +
                        S.bottomRightCorner(d2, d2).transpose().eval()));
    };
    L.path = SplitSymmetricPath::from_blocks(P.sig, A, B);
  }
  return L;
}

inline std::shared_ptr<LRecord> l_record(const NonlinearProblem& P,
                                         const Vec& alpha) {
  if (!P.cache) fail(errc::bad_request, "problem has no trajectory cache");
  std::vector<double> key(alpha.data(), alpha.data() + alpha.size());
  if (auto hit = P.cache->find(key)) return hit;
  auto rec = std::make_shared<LRecord>();
  rec->sys = build_l_system(P, alpha);
  return P.cache->insert(key, std::move(rec));
}

}  // namespace detail

inline NonlinearProblem make_problem_exprs(Signature sig,
                                           std::vector<std::vector<Expr>> S,
                                           std::vector<Expr> s0_diag,
                                           std::vector<Expr> sinf_diag,
                                           ProblemOptions opt = {},
                                           std::string name = {}) {
  sig.validate();
  const int n = sig.n;
  if (int(S.size()) != n)
    fail(errc::dimension_mismatch, "S must be an n x n expression matrix");
  for (const auto& row : S) {
    if (int(row.size()) != n)
      fail(errc::dimension_mismatch, "S must be an n x n expression matrix");
    for (const Expr& e : row)
      if (e.max_x_index() > n)
        throw Error(errc::unknown_identifier,
                    "coordinate index exceeds the problem dimension")
            .with("max_index", (long long)e.max_x_index())
            .with("n", (long long)n);
  }
  NonlinearProblem P;
  P.sig = sig;
  P.S_entries =
      std::make_shared<const std::vector<std::vector<Expr>>>(std::move(S));
  P.S0 = DiagonalPath::from_exprs(sig, s0_diag);
  P.Sinf = DiagonalPath::from_exprs(sig, sinf_diag);
  P.opt = opt;
  P.name = std::move(name);
  P.cache = std::make_shared<detail::LSystemCache>();
  return P;
}

inline NonlinearProblem make_problem(
    Signature sig, const std::vector<std::vector<std::string>>& S,
    const std::vector<std::string>& s0_diag,
    const std::vector<std::string>& sinf_diag, ProblemOptions opt = {},
    std::string name = {}) {
  std::vector<std::vector<Expr>> es;
  for (const auto& row : S) {
    std::vector<Expr> er;
    for (const auto& s : row) er.push_back(parse_expr(s));
    es.push_back(std::move(er));
  }
  std::vector<Expr> e0, ei;
  for (const auto& s : s0_diag) e0.push_back(parse_expr(s));
  for (const auto& s : sinf_diag) ei.push_back(parse_expr(s));
  return make_problem_exprs(sig, std::move(es), std::move(e0), std::move(ei),
                            opt, std::move(name));
}

// The linearized system frozen along the trajectory through alpha.
inline LSystem l_system(const NonlinearProblem& P, const Vec& alpha) {
  return detail::l_record(P, alpha)->sys;
}

// Phase-angle trace of the frozen system, computed once per alpha and shared.
inline std::shared_ptr<const PhaseAngleTrace> l_system_trace(
    const NonlinearProblem& P, const Vec& alpha) {
  auto rec = detail::l_record(P, alpha);
  std::call_once(rec->trace_once, [&] {
    auto dec = decouple(rec->sys.path);
    auto grid = phase_grid(rec->sys.path, 1.0, P.opt.grid_base);
    auto F = fundamental_solution(dec, grid, P.opt.tol_ode);
    rec->trace =
        std::make_shared<const PhaseAngleTrace>(compute_phase_trace(F));
  });
  return rec->trace;
}

// ---------------------------------------------------------------------------
// Hypothesis checks (V0)-(V3)

enum class CondStatus { pass, heuristic_pass, fail };

inline const char* cond_status_name(CondStatus s) {
  switch (s) {
    case CondStatus::pass: return "pass";
    case CondStatus::heuristic_pass: return "heuristic-pass";
    case CondStatus::fail: return "fail";
  }
  return "?";
}

struct ConditionReport {
  CondStatus v0 = CondStatus::fail;
  CondStatus vinf = CondStatus::fail;
  CondStatus v1 = CondStatus::fail;
  CondStatus v2 = CondStatus::fail;
  CondStatus v3 = CondStatus::fail;
  std::vector<double> radii;  // ascending sample ladder
  std::vector<double> v0_remainder;    // sup |S(t,x)x - S0(t)x| / |x| at |x| = r
  std::vector<double> vinf_remainder;  // same against S_inf
  double v1_off = 0;        // largest sampled cross-block entry
  double v3_off = 0;        // largest sampled off-diagonal entry on any W_i
  double v2_sigma_s0 = 0;   // smallest singular value of the X(1) blocks, S0
  double v2_sigma_sinf = 0; // and S_inf
  bool ok() const {
    return v0 != CondStatus::fail && vinf != CondStatus::fail &&
           v1 == CondStatus::pass && v2 == CondStatus::pass &&
           v3 == CondStatus::pass;
  }
};

namespace detail {

inline double min_terminal_sigma(const DiagonalPath& D, double tol) {
  auto F = fundamental_solution(decouple(D.path()), TimeGrid::uniform(65), tol);
  double s = std::numeric_limits<double>::infinity();
  if (D.sig.d1() > 0) {
    Eigen::JacobiSVD<Mat> svd(F.X1.back());
    s = std::min(s, svd.singularValues().minCoeff());
  }
  if (D.sig.d2() > 0) {
    Eigen::JacobiSVD<Mat> svd(F.X2.back());
    s = std::min(s, svd.singularValues().minCoeff());
  }
  return s;
}

}  // namespace detail

inline ConditionReport verify_conditions(const NonlinearProblem& P) {
  const auto& opt = P.opt;
  const int n = P.sig.n, d1 = P.sig.d1();
  ConditionReport R;
  R.radii = radius_ladder(opt.r_lo, opt.r_hi, opt.radius_samples);
  R.v0_remainder.assign(R.radii.size(), 0.0);
  R.vinf_remainder.assign(R.radii.size(), 0.0);

  const auto dirs = direction_set(n);
  const TimeGrid tg = TimeGrid::uniform(opt.t_samples);

  for (size_t k = 0; k < R.radii.size(); ++k) {
    const double r = R.radii[k];
    for (double t : tg.points) {
      const Vec s0v = P.S0.at(t), sinfv = P.Sinf.at(t);
      for (const Vec& d : dirs) {
        const Vec x = r * d;
        const Mat S = P.S_at(t, x);
        R.v0_remainder[k] =
            std::max(R.v0_remainder[k], (S * x - s0v.cwiseProduct(x)).norm() / r);
        R.vinf_remainder[k] = std::max(R.vinf_remainder[k],
                                       (S * x - sinfv.cwiseProduct(x)).norm() / r);
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j)
            if ((i < d1) != (j < d1))
              R.v1_off = std::max(R.v1_off, std::abs(S(i, j)));
      }
    }
  }

  // (V0): remainder must shrink monotonically toward r_lo and be small there.
  // Finite sampling cannot prove the limit, so success is heuristic only.
  auto slack = [](double v) { return v * (1 + 1e-12) + 1e-300; };
  bool mono0 = true, monoI = true;
  for (size_t k = 0; k + 1 < R.radii.size(); ++k) {
    if (R.v0_remainder[k] > slack(R.v0_remainder[k + 1])) mono0 = false;
    if (R.vinf_remainder[k + 1] > slack(R.vinf_remainder[k])) monoI = false;
  }
  R.v0 = (mono0 && R.v0_remainder.front() < opt.tol_heur)
             ? CondStatus::heuristic_pass
             : CondStatus::fail;
  R.vinf = (monoI && R.vinf_remainder.back() < opt.tol_heur)
               ? CondStatus::heuristic_pass
               : CondStatus::fail;
  R.v1 = (R.v1_off <= opt.tol_pattern) ? CondStatus::pass : CondStatus::fail;

  // (V3): S diagonal on every coordinate hyperplane.
  for (int i = 0; i < n; ++i) {
    for (const Vec& d : hyperplane_directions(n, i)) {
      for (double r : R.radii) {
        for (double t : tg.points) {
          const Mat S = P.S_at(t, r * d);
          for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b)
              if (a != b) R.v3_off = std::max(R.v3_off, std::abs(S(a, b)));
        }
      }
    }
  }
  R.v3 = (R.v3_off <= opt.tol_pattern) ? CondStatus::pass : CondStatus::fail;

  // (V2): both asymptotic problems nondegenerate.
  R.v2_sigma_s0 = detail::min_terminal_sigma(P.S0, opt.tol_ode);
  R.v2_sigma_sinf = detail::min_terminal_sigma(P.Sinf, opt.tol_ode);
  R.v2 = (R.v2_sigma_s0 > opt.tol_nd && R.v2_sigma_sinf > opt.tol_nd)
             ? CondStatus::pass
             : CondStatus::fail;
  return R;
}

// ---------------------------------------------------------------------------
// Asymptotic closeness profile

struct AsymptoticRow {
  double radius = 0;
  double dist_s0 = 0;    // max over directions of int_0^1 |S_alpha - S0| dt
  double dist_sinf = 0;  // same against S_inf
  double ydist_s0 = 0;   // max over directions of sup_t |Y_alpha - Y_{S0}|
  double ydist_sinf = 0;
};

namespace detail {

inline double block_spectral_gap(const SplitSymmetricPath& a,
                                 const DiagonalPath& b, double t) {
  double g = 0;
  const int d1 = a.sig.d1(), d2 = a.sig.d2();
  const Vec bv = b.at(t);
  if (d1 > 0) {
    Mat D = a.A(t) - Mat(bv.head(d1).asDiagonal());
    Eigen::SelfAdjointEigenSolver<Mat> es(D);
    g = std::max(g, es.eigenvalues().cwiseAbs().maxCoeff());
  }
  if (d2 > 0) {
    Mat D = a.B(t) - Mat(bv.tail(d2).asDiagonal());
    Eigen::SelfAdjointEigenSolver<Mat> es(D);
    g = std::max(g, es.eigenvalues().cwiseAbs().maxCoeff());
  }
  return g;
}

inline double spectral_norm_c(const CMat& M) {
  Eigen::JacobiSVD<CMat> svd(M);
  return svd.singularValues().size() > 0 ? svd.singularValues()(0) : 0.0;
}

}  // namespace detail

inline std::vector<AsymptoticRow> asymptotic_profile(
    const NonlinearProblem& P, const std::vector<double>& radii) {
  for (size_t k = 0; k < radii.size(); ++k) {
    if (!(radii[k] > 0)) fail(errc::bad_request, "radii must be positive");
    if (k > 0 && radii[k] <= radii[k - 1])
      fail(errc::bad_request, "radii must be strictly increasing");
  }
  const TimeGrid tg = TimeGrid::uniform(65);
  const auto F0 = fundamental_solution(decouple(P.S0.path()), tg, P.opt.tol_ode);
  const auto Fi =
      fundamental_solution(decouple(P.Sinf.path()), tg, P.opt.tol_ode);
  const auto dirs = direction_set(P.sig.n);

  std::vector<AsymptoticRow> table(radii.size());
  for (size_t k = 0; k < radii.size(); ++k) {
    AsymptoticRow row;
    row.radius = radii[k];
    for (const Vec& d : dirs) {
      const LSystem L = l_system(P, radii[k] * d);
      const auto Fa = fundamental_solution(decouple(L.path), tg, P.opt.tol_ode);
      // composite Simpson over the 65-node grid
      double i0 = 0, ii = 0;
      for (size_t m = 0; m + 2 < tg.points.size(); m += 2) {
        const double h = tg.points[m + 2] - tg.points[m];
        double w[3] = {h / 6, 4 * h / 6, h / 6};
        for (int q = 0; q < 3; ++q) {
          const double t = tg.points[m + size_t(q)];
          i0 += w[q] * detail::block_spectral_gap(L.path, P.S0, t);
          ii += w[q] * detail::block_spectral_gap(L.path, P.Sinf, t);
        }
      }
      row.dist_s0 = std::max(row.dist_s0, i0);
      row.dist_sinf = std::max(row.dist_sinf, ii);
      for (size_t m = 0; m < tg.points.size(); ++m) {
        if (P.sig.d1() > 0) {
          const CMat Ya = detail::block_Y(Fa.X1[m], Fa.X1p[m]);
          row.ydist_s0 = std::max(
              row.ydist_s0,
              detail::spectral_norm_c(Ya - detail::block_Y(F0.X1[m], F0.X1p[m])));
          row.ydist_sinf = std::max(
              row.ydist_sinf,
              detail::spectral_norm_c(Ya - detail::block_Y(Fi.X1[m], Fi.X1p[m])));
        }
        if (P.sig.d2() > 0) {
          const CMat Ya = detail::block_Y(Fa.X2[m], Fa.X2p[m]);
          row.ydist_s0 = std::max(
              row.ydist_s0,
              detail::spectral_norm_c(Ya - detail::block_Y(F0.X2[m], F0.X2p[m])));
          row.ydist_sinf = std::max(
              row.ydist_sinf,
              detail::spectral_norm_c(Ya - detail::block_Y(Fi.X2[m], Fi.X2p[m])));
        }
      }
    }
    table[k] = row;
  }
  return table;
}

// ---------------------------------------------------------------------------
// Maslov index of a coefficient path, choosing the cheapest valid route.

inline MaslovIndex maslov_of_path(const SplitSymmetricPath& path,
                                  double tol = 1e-10, int grid_base = 257) {
  if (path.constant) {
    auto spec = ConstantSplitSpectrum::from_blocks(path.A0, path.B0);
    bool degenerate = false;
    for (double l : spec.lambda)
      degenerate = degenerate || detail::dist_to_dirichlet_spectrum(l) < 1e-10;
    for (double m : spec.mu)
      degenerate = degenerate || detail::dist_to_dirichlet_spectrum(-m) < 1e-10;
    if (!degenerate) return maslov_constant_split(spec, path.sig);
  }
  auto F = fundamental_solution(decouple(path), phase_grid(path, 1.0, grid_base),
                                tol);
  try {
    return maslov_from_phase_angles(compute_phase_trace(F));
  } catch (const Error& e) {
    if (e.code != errc::degenerate_endpoint) throw;
  }
  return maslov_crossing_form(F);
}

namespace detail {

inline long long floordiv(long long a, long long b) {
  long long q = a / b, r = a % b;
  return (r != 0 && ((r < 0) != (b < 0))) ? q - 1 : q;
}

}  // namespace detail

// Default admissibility margin: half the smallest distance from an
// attainable level q*pi, q in the open index window, to the window's ends,
// capped strictly below pi/2.  Falls back to pi/4 when the window is empty.
inline double default_eps(const Signature& sig, const MaslovIndex& m0,
                          const MaslovIndex& m_inf) {
  const long long lo2 = m0.twice_value + 2 * sig.d1();
  const long long hi2 = m_inf.twice_value - 2 * sig.nu;
  long long best2 = -1;
  const long long qlo = detail::floordiv(lo2, 2) + 1;
  const long long qhi = detail::floordiv(hi2 - 1, 2);
  for (long long q = qlo; q <= qhi; ++q) {
    if (sig.nu == 0 && q < sig.n) continue;      // sums of h_i >= 1 only
    if (sig.nu == sig.n && q > -sig.n) continue; // negated sums only
    const long long m = std::min(2 * q - lo2, hi2 - 2 * q);
    if (best2 < 0 || m < best2) best2 = m;
  }
  if (best2 < 0) return M_PI / 4;
  return std::min(0.5 * (double(best2) * (M_PI / 2)), M_PI / 2 - 1e-9);
}

// ---------------------------------------------------------------------------
// Separation radii alpha_0 < alpha_inf

struct BoundsProfileRow {
  double radius = 0;
  double sum_min = 0, sum_max = 0;  // range of <Theta_alpha(1), 1> over dirs
  double zero_rel = 0;   // max over dirs of sum - <Theta_0(1), 1>
  double zero_idx = 0;   // max over dirs of sum - (m0 + n - nu) pi
  double inf_idx = 0;    // min over dirs of sum - (m_inf - nu) pi
  double inf_rel = 0;    // min over dirs of sum - <Theta_inf(1), 1>  (diagnostic)
  double tilde = 0;      // min over dirs/components of theta - theta_inf
};

struct AlphaBounds {
  double alpha0 = 0;
  double alpha_inf = 0;
  double alpha_tilde_inf = std::numeric_limits<double>::infinity();
  double eps = 0;
  MaslovIndex m0, m_inf;
  std::vector<BoundsProfileRow> profile;
};

inline AlphaBounds find_alpha_bounds(const NonlinearProblem& P, double eps) {
  if (!(eps > 0)) fail(errc::bad_request, "eps must be positive");
  const auto& opt = P.opt;
  const int n = P.sig.n, nu = P.sig.nu, d1 = P.sig.d1(), d2 = P.sig.d2();

  AlphaBounds out;
  out.eps = eps;
  out.m0 = maslov_of_path(P.S0.path(), opt.tol_ode, opt.grid_base);
  out.m_inf = maslov_of_path(P.Sinf.path(), opt.tol_ode, opt.grid_base);

  const double sum0 = l_system_trace(P, Vec::Zero(n))->sum_end();
  const auto trace_inf = compute_phase_trace(fundamental_solution(
      decouple(P.Sinf.path()), phase_grid(P.Sinf.path(), 1.0, opt.grid_base),
      opt.tol_ode));
  const std::vector<double> inf1 = trace_inf.theta1_end();
  const std::vector<double> inf2 = trace_inf.theta2_end();
  const double sum_inf = trace_inf.sum_end();

  const double thr0 = (out.m0.value() + n - nu) * M_PI;
  const double thr_inf = (out.m_inf.value() - nu) * M_PI;

  const int decades =
      std::max(1, int(std::round(std::log10(opt.bounds_hi / opt.bounds_lo))));
  const int nr = decades * opt.bounds_per_decade + 1;
  const std::vector<double> radii =
      radius_ladder(opt.bounds_lo, opt.bounds_hi, nr);
  const auto dirs = direction_set(n);

  struct Cell {
    double sum = 0, tilde = 0;
  };
  std::vector<Cell> cells(radii.size() * dirs.size());
  detail::parallel_for(
      int(cells.size()),
      [&](int idx) {
        const size_t k = size_t(idx) / dirs.size();
        const size_t dI = size_t(idx) % dirs.size();
        auto tr = l_system_trace(P, radii[k] * dirs[dI]);
        Cell c;
        c.sum = tr->sum_end();
        c.tilde = std::numeric_limits<double>::infinity();
        const auto e1 = tr->theta1_end(), e2 = tr->theta2_end();
        for (int i = 0; i < d1; ++i)
          c.tilde = std::min(c.tilde, e1[size_t(i)] - inf1[size_t(i)]);
        for (int i = 0; i < d2; ++i)
          c.tilde = std::min(c.tilde, e2[size_t(i)] - inf2[size_t(i)]);
        cells[size_t(idx)] = c;
      },
      opt.threads);

  out.profile.resize(radii.size());
  for (size_t k = 0; k < radii.size(); ++k) {
    BoundsProfileRow row;
    row.radius = radii[k];
    row.sum_min = std::numeric_limits<double>::infinity();
    row.sum_max = -row.sum_min;
    row.zero_rel = row.zero_idx = -std::numeric_limits<double>::infinity();
    row.inf_idx = row.inf_rel = row.tilde =
        std::numeric_limits<double>::infinity();
    for (size_t dI = 0; dI < dirs.size(); ++dI) {
      const Cell& c = cells[k * dirs.size() + dI];
      row.sum_min = std::min(row.sum_min, c.sum);
      row.sum_max = std::max(row.sum_max, c.sum);
      row.zero_rel = std::max(row.zero_rel, c.sum - sum0);
      row.zero_idx = std::max(row.zero_idx, c.sum - thr0);
      row.inf_idx = std::min(row.inf_idx, c.sum - thr_inf);
      row.inf_rel = std::min(row.inf_rel, c.sum - sum_inf);
      row.tilde = std::min(row.tilde, c.tilde);
    }
    out.profile[k] = row;
  }

  // alpha_0: largest prefix of the ladder on which every sampled direction
  // stays eps-below both the Theta_0 sum and the (m0 + n - nu) pi level.
  double a0 = 0;
  for (const auto& row : out.profile) {
    if (row.zero_rel < eps && row.zero_idx < eps)
      a0 = row.radius;
    else
      break;
  }

  // alpha_inf: smallest ladder radius whose 10x horizon keeps every sampled
  // direction eps-above the (m_inf - nu) pi level.  The per-component
  // variant below gives alpha~_inf, possibly +inf.
  auto suffix_ok = [&](size_t start, auto&& pred) {
    const double horizon = 10 * out.profile[start].radius * (1 + 1e-12);
    for (size_t k = start; k < out.profile.size(); ++k) {
      if (out.profile[k].radius > horizon) break;
      if (!pred(out.profile[k])) return false;
    }
    return true;
  };
  double ainf = 0;
  bool have_inf = false;
  double atilde = std::numeric_limits<double>::infinity();
  for (size_t k = 0; k < out.profile.size(); ++k) {
    if (out.profile[k].radius * 10 > opt.bounds_hi * (1 + 1e-9)) break;
    if (!have_inf &&
        suffix_ok(k, [&](const BoundsProfileRow& r) { return r.inf_idx > -eps; })) {
      ainf = out.profile[k].radius;
      have_inf = true;
    }
    if (std::isinf(atilde) &&
        suffix_ok(k, [&](const BoundsProfileRow& r) {
          return r.tilde > -eps / double(n);
        })) {
      atilde = out.profile[k].radius;
    }
    if (have_inf && !std::isinf(atilde)) break;
  }

  if (!(a0 > 0) || !have_inf) {
    Error err(errc::no_separation,
              "no separation radii alpha_0 < alpha_inf within the search "
              "ladder");
    err.with("ladder_lo", radii.front()).with("ladder_hi", radii.back());
    std::string prof;
    for (const auto& row : out.profile) {
      prof += std::to_string(row.radius) + ": zero_rel=" +
              std::to_string(row.zero_rel) + " zero_idx=" +
              std::to_string(row.zero_idx) + " inf_idx=" +
              std::to_string(row.inf_idx) + "\n";
    }
    err.with("profile", prof);
    throw err;
  }
  out.alpha_inf = ainf;
  out.alpha0 = std::min(a0, ainf);
  out.alpha_tilde_inf = atilde;
  return out;
}

// ---------------------------------------------------------------------------
// Elastic a-priori trajectory bound

struct ElasticBound {
  double R_traj = 0;
  double M_hat = 0;     // sampled sup of |S(t, x)| over |x| <= 10 alpha_inf
  double sup_observed = 0;  // largest Monte Carlo |(u, u')| at |alpha| = alpha_inf
  int rounds = 1;
  bool exponent_capped = false;
};

inline ElasticBound elastic_bound(const NonlinearProblem& P, double alpha_inf) {
  if (!(alpha_inf > 0)) fail(errc::bad_request, "alpha_inf must be positive");
  const int n = P.sig.n;
  const auto dirs = direction_set(n);
  const TimeGrid tg = TimeGrid::uniform(P.opt.t_samples);

  double M = 0;
  {
    auto sample = [&](const Vec& x) {
      for (double t : tg.points) {
        Mat S = P.S_at(t, x);
        S = 0.5 * (S + S.transpose().eval());
        Eigen::SelfAdjointEigenSolver<Mat> es(S);
        M = std::max(M, es.eigenvalues().cwiseAbs().maxCoeff());
      }
    };
    sample(Vec::Zero(n));
    for (double r :
         radius_ladder(alpha_inf * 1e-3, alpha_inf * 10, P.opt.radius_samples))
      for (const Vec& d : dirs) sample(r * d);
  }

  ElasticBound out;
  out.M_hat = M;
  std::mt19937 gen(20240817u);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<Vec> alphas(100);
  for (auto& a : alphas) {
    a = Vec(n);
    do {
      for (int i = 0; i < n; ++i) a[i] = gauss(gen);
    } while (a.norm() < 1e-8);
    a *= alpha_inf / a.norm();
  }

  for (int round = 1; round <= 5; ++round) {
    out.rounds = round;
    double expo = std::max(1.0, out.M_hat);
    const double la = std::log(alpha_inf);
    if (la + expo > 690.0) {
      expo = 690.0 - la;
      out.exponent_capped = true;
    }
    out.R_traj = alpha_inf * std::exp(expo);
    double sup = 0;
    for (const Vec& a : alphas)
      sup = std::max(sup, l_system(P, a).state_sup());
    out.sup_observed = sup;
    if (sup <= out.R_traj) return out;
    out.M_hat = std::max(2 * out.M_hat, std::log(sup / alpha_inf) + 1);
  }
  throw Error(errc::bound_violated,
              "sampled trajectories exceeded the elastic bound after 5 "
              "enlargements")
      .with("R_traj", out.R_traj)
      .with("sup_observed", out.sup_observed);
}

// ---------------------------------------------------------------------------
// Cylinder maxima

struct CylinderMaxima {
  Signature sig;
  double radius = 0;  // disk radius of the cylinders C_i = [0,1] x D_i
  int grid = 33;
  long long refine_steps = 0;
  Mat lambda_bar;  // (i, k): sup of S_kk over C_i, refined from the grid max
  bool time_dependent = false;
  std::vector<double> t_nodes;
  std::vector<std::vector<std::vector<double>>> lambda_t;  // [i][k][node]
};

namespace detail {

// Compass search in (t, free coordinates of W_i), clamped to the cylinder.
template <class Eval>
double pattern_refine(Eval&& value, double R, const std::vector<int>& axes,
                      double t0, Vec x0, double best, bool move_t,
                      long long& steps) {
  double t = t0;
  Vec x = x0;
  double step_x = axes.empty() ? 0 : std::max(1e-12, R / 16.0);
  double step_t = move_t ? 1.0 / 32.0 : 0.0;
  for (int it = 0; it < 200; ++it) {
    if (step_x < 1e-10 * (1 + R) && step_t < 1e-12) break;
    bool improved = false;
    double cand_best = best, cand_t = t;
    Vec cand_x = x;
    auto consider = [&](double tt, const Vec& xx) {
      double v = value(tt, xx);
      ++steps;
      if (v > cand_best) {
        cand_best = v;
        cand_t = tt;
        cand_x = xx;
      }
    };
    if (move_t) {
      consider(std::min(1.0, t + step_t), x);
      consider(std::max(0.0, t - step_t), x);
    }
    for (int a : axes) {
      for (double s : {step_x, -step_x}) {
        Vec xx = x;
        xx[a] += s;
        const double nr = xx.norm();
        if (nr > R) xx *= R / nr;
        consider(t, xx);
      }
    }
    if (cand_best > best) {
      best = cand_best;
      t = cand_t;
      x = cand_x;
      improved = true;
    }
    if (!improved) {
      step_x *= 0.5;
      step_t *= 0.5;
    }
  }
  return best;
}

}  // namespace detail

inline CylinderMaxima cylinder_maxima(const NonlinearProblem& P, double R_traj,
                                      bool time_dependent = false) {
  if (!(R_traj > 0)) fail(errc::bad_request, "cylinder radius must be positive");
  const int n = P.sig.n;
  if (n > 4 && P.opt.cyl_grid > 9)
    fail(errc::bad_request,
         "cylinder sampling is limited to n <= 4 at this resolution");

  CylinderMaxima out;
  out.sig = P.sig;
  out.radius = R_traj;
  out.grid = std::max(3, P.opt.cyl_grid) | 1;  // odd: the grid contains 0
  out.time_dependent = time_dependent;
  out.lambda_bar = Mat::Constant(n, n, -std::numeric_limits<double>::infinity());

  const int g = out.grid;
  std::vector<double> axis(static_cast<size_t>(g));
  for (int k = 0; k < g; ++k)
    axis[size_t(k)] = -R_traj + 2 * R_traj * double(k) / double(g - 1);
  const TimeGrid tgrid = TimeGrid::uniform(time_dependent ? P.opt.t_samples : g);
  if (time_dependent) out.t_nodes = tgrid.points;

  struct Best {
    double val = -std::numeric_limits<double>::infinity();
    double t = 0;
    Vec x;
  };
  // [i][k] grid argmax; in time-dependent mode also per t-node values
  std::vector<std::vector<Best>> best(static_cast<size_t>(n), std::vector<Best>(static_cast<size_t>(n)));
  std::vector<std::vector<std::vector<Best>>> best_t;
  if (time_dependent)
    best_t.assign(size_t(n),
                  std::vector<std::vector<Best>>(
                      size_t(n), std::vector<Best>(tgrid.points.size())));

  std::atomic<long long> steps{0};
  detail::parallel_for(
      n,
      [&](int i) {
        std::vector<int> axes;
        for (int k = 0; k < n; ++k)
          if (k != i) axes.push_back(k);
        const int m = int(axes.size());
        std::vector<int> idx(size_t(m), 0);
        Vec x = Vec::Zero(n);
        long long local_steps = 0;
        for (;;) {
          double nr2 = 0;
          for (int a = 0; a < m; ++a) {
            x[axes[size_t(a)]] = axis[size_t(idx[size_t(a)])];
            nr2 += x[axes[size_t(a)]] * x[axes[size_t(a)]];
          }
          if (nr2 <= R_traj * R_traj * (1 + 1e-12)) {
            for (size_t mT = 0; mT < tgrid.points.size(); ++mT) {
              const double t = tgrid.points[mT];
              for (int k = 0; k < n; ++k) {
                const double v = P.S_diag_at(k, t, x);
                ++local_steps;
                auto& b = best[size_t(i)][size_t(k)];
                if (v > b.val) {
                  b.val = v;
                  b.t = t;
                  b.x = x;
                }
                if (time_dependent) {
                  auto& bt = best_t[size_t(i)][size_t(k)][mT];
                  if (v > bt.val) {
                    bt.val = v;
                    bt.t = t;
                    bt.x = x;
                  }
                }
              }
            }
          }
          int a = 0;
          while (a < m) {
            if (++idx[size_t(a)] < g) break;
            idx[size_t(a)] = 0;
            ++a;
          }
          if (a == m) break;
        }
        steps.fetch_add(local_steps, std::memory_order_relaxed);
        // refinement from each grid argmax
        for (int k = 0; k < n; ++k) {
          auto& b = best[size_t(i)][size_t(k)];
          if (b.x.size() == 0) b.x = Vec::Zero(n);
          long long rs = 0;
          auto value = [&](double t, const Vec& xx) {
            return P.S_diag_at(k, t, xx);
          };
          b.val = detail::pattern_refine(value, R_traj, axes, b.t, b.x, b.val,
                                         /*move_t=*/true, rs);
          if (time_dependent) {
            for (size_t mT = 0; mT < tgrid.points.size(); ++mT) {
              auto& bt = best_t[size_t(i)][size_t(k)][mT];
              if (bt.x.size() == 0) bt.x = Vec::Zero(n);
              auto value_t = [&](double, const Vec& xx) {
                return P.S_diag_at(k, tgrid.points[mT], xx);
              };
              bt.val = detail::pattern_refine(value_t, R_traj, axes, bt.t,
                                              bt.x, bt.val, /*move_t=*/false,
                                              rs);
            }
          }
          steps.fetch_add(rs, std::memory_order_relaxed);
        }
      },
      P.opt.threads);

  out.refine_steps = steps.load();
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k)
      out.lambda_bar(i, k) = best[size_t(i)][size_t(k)].val;
  if (time_dependent) {
    out.lambda_t.assign(
        size_t(n), std::vector<std::vector<double>>(
                       size_t(n), std::vector<double>(tgrid.points.size())));
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < n; ++k)
        for (size_t mT = 0; mT < tgrid.points.size(); ++mT) {
          out.lambda_t[size_t(i)][size_t(k)][mT] =
              best_t[size_t(i)][size_t(k)][mT].val;
          // the envelope over time can only sharpen the constant bound
          out.lambda_bar(i, k) = std::max(
              out.lambda_bar(i, k), best_t[size_t(i)][size_t(k)][mT].val);
        }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Sorting permutations, Delta-bar, delta_bar(h)

struct HVector {
  std::vector<long long> h;
  long long inner_j = 0;  // sum over the first block minus sum over the second

  static HVector make(const Signature& sig, std::vector<long long> comps) {
    if (int(comps.size()) != sig.n)
      fail(errc::dimension_mismatch, "h must have n components");
    for (long long c : comps)
      if (c < 1) fail(errc::bad_request, "h components must be >= 1");
    HVector v;
    v.h = std::move(comps);
    v.inner_j = 0;
    for (int i = 0; i < sig.n; ++i)
      v.inner_j += (i < sig.d1()) ? v.h[size_t(i)] : -v.h[size_t(i)];
    return v;
  }
};

// Permutation sorting hyperplane i's own block of lambda_bar ascending;
// block = 1 or 2, positions are 0-based within the block.
inline std::vector<std::vector<int>> sigma_block(const CylinderMaxima& CM,
                                                 int block) {
  const int n = CM.sig.n, d1 = CM.sig.d1();
  const int off = (block == 1) ? 0 : d1;
  const int len = (block == 1) ? d1 : CM.sig.d2();
  std::vector<std::vector<int>> sig(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    std::vector<int> p(static_cast<size_t>(len));
    for (int k = 0; k < len; ++k) p[size_t(k)] = k;
    std::stable_sort(p.begin(), p.end(), [&](int a, int b) {
      return CM.lambda_bar(i, off + a) < CM.lambda_bar(i, off + b);
    });
    sig[size_t(i)] = std::move(p);
  }
  return sig;
}

// Diagonal of Delta-bar: entry i is position i of hyperplane i's own block,
// after sorting that block ascending.
inline Vec delta_diag(const CylinderMaxima& CM) {
  const int n = CM.sig.n, d1 = CM.sig.d1();
  const auto s1 = sigma_block(CM, 1), s2 = sigma_block(CM, 2);
  Vec d(n);
  for (int i = 0; i < n; ++i) {
    if (i < d1)
      d[i] = CM.lambda_bar(i, s1[size_t(i)][size_t(i)]);
    else
      d[i] = CM.lambda_bar(i, d1 + s2[size_t(i)][size_t(i - d1)]);
  }
  return d;
}

namespace detail {

inline ScalarPotential interp_potential(std::vector<double> ts,
                                        std::vector<double> vs) {
  return ScalarPotential(std::function<double(double)>(
      [ts = std::move(ts), vs = std::move(vs)](double t) {
        if (t <= ts.front()) return vs.front();
        if (t >= ts.back()) return vs.back();
        const auto it = std::upper_bound(ts.begin(), ts.end(), t);
        const size_t k = size_t(it - ts.begin());
        const double w = (t - ts[k - 1]) / (ts[k] - ts[k - 1]);
        return (1 - w) * vs[k - 1] + w * vs[k];
      }));
}

// Pointwise-sorted path of hyperplane i's block, taken at sorted position
// `pos`, negated for the second block so it feeds eta_j directly.
inline ScalarPotential sorted_block_potential(const CylinderMaxima& CM, int i,
                                              int block, int pos) {
  const int d1 = CM.sig.d1();
  const int off = (block == 1) ? 0 : d1;
  const int len = (block == 1) ? d1 : CM.sig.d2();
  std::vector<double> vals(CM.t_nodes.size());
  std::vector<double> blockv(static_cast<size_t>(len));
  for (size_t m = 0; m < CM.t_nodes.size(); ++m) {
    for (int k = 0; k < len; ++k)
      blockv[size_t(k)] = CM.lambda_t[size_t(i)][size_t(off + k)][m];
    std::sort(blockv.begin(), blockv.end());
    vals[m] = (block == 1) ? blockv[size_t(pos)] : -blockv[size_t(pos)];
  }
  return interp_potential(CM.t_nodes, std::move(vals));
}

}  // namespace detail

// delta_bar(h): componentwise Dirichlet gaps of the comparison problem.
// First block: eta_{h_i} of the sorted maximum; second block: eta_{h_i} of
// its negative.  Constant data uses the closed form h^2 pi^2 -/+ lambda.
inline Vec delta_bar(const NonlinearProblem& P, const CylinderMaxima& CM,
                     const HVector& h) {
  const int n = P.sig.n, d1 = P.sig.d1();
  if (int(h.h.size()) != n)
    fail(errc::dimension_mismatch, "h must have n components");
  const Vec dd = delta_diag(CM);
  Vec out(n);
  for (int i = 0; i < n; ++i) {
    const double hh = double(h.h[size_t(i)]);
    if (!CM.time_dependent) {
      out[i] = (i < d1) ? hh * hh * M_PI * M_PI - dd[i]
                        : hh * hh * M_PI * M_PI + dd[i];
    } else {
      auto pot = (i < d1)
                     ? detail::sorted_block_potential(CM, i, 1, i)
                     : detail::sorted_block_potential(CM, i, 2, i - d1);
      out[i] = eta_j(pot, int(h.h[size_t(i)])).eta;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// The admissible sets S, S', T

struct TMember {
  HVector h;
  Vec delta;       // delta_bar(h)
  double margin;   // smallest signed slack of the strict sign conditions
};

struct TSet {
  std::vector<TMember> members;  // T, lexicographic in h
  MaslovIndex m0, m_inf;
  std::vector<std::vector<int>> sigma1, sigma2;
  Vec delta_diagonal;
  std::vector<HVector> s_set;  // condition (c) alone, components <= hmax
  bool s_truncated = false;
  std::vector<HVector> s_prime;  // mirrored window, when m_inf + n < m0
  bool s_prime_truncated = false;
  bool t_truncated = false;
  int hmax = 32;
};

namespace detail {

// Is some h with one component pinned to hmax+1 (the rest in [1, hmax+1])
// inside the open window lo2 < 2 <h, j> < hi2?
inline bool window_reaches_beyond(const Signature& sig, int hmax,
                                  long long lo2, long long hi2) {
  const long long C = hmax + 1;
  const long long qlo = floordiv(lo2, 2) + 1;
  const long long qhi = floordiv(hi2 - 1, 2);
  if (qlo > qhi) return false;
  for (int pin = 0; pin < sig.n; ++pin) {
    const bool first = pin < sig.d1();
    const long long f = sig.d1() - (first ? 1 : 0);
    const long long s = sig.d2() - (first ? 0 : 1);
    const long long base = first ? C : -C;
    const long long qmin = base + f - s * C;
    const long long qmax = base + f * C - s;
    if (std::max(qmin, qlo) <= std::min(qmax, qhi)) return true;
  }
  return false;
}

template <class Fn>
void odometer(const std::vector<long long>& caps, Fn&& fn) {
  const int n = int(caps.size());
  for (long long c : caps)
    if (c < 1) return;
  std::vector<long long> h(size_t(n), 1);
  for (;;) {
    fn(h);
    int a = 0;
    while (a < n) {
      if (++h[size_t(a)] <= caps[size_t(a)]) break;
      h[size_t(a)] = 1;
      ++a;
    }
    if (a == n) break;
  }
}

}  // namespace detail

inline TSet enumerate_T(const NonlinearProblem& P, const CylinderMaxima& CM,
                        const MaslovIndex& m0, const MaslovIndex& m_inf) {
  const int n = P.sig.n, nu = P.sig.nu, d1 = P.sig.d1();
  const long long hmax = P.opt.hmax;
  TSet out;
  out.m0 = m0;
  out.m_inf = m_inf;
  out.hmax = int(hmax);
  out.sigma1 = sigma_block(CM, 1);
  out.sigma2 = sigma_block(CM, 2);
  out.delta_diagonal = delta_diag(CM);

  const long long lo2 = m0.twice_value + 2 * (n - nu);
  const long long hi2 = m_inf.twice_value - 2 * nu;

  // component slack for condition (a)/(b), as a function of the index
  auto delta_comp = [&](int i, long long j) -> double {
    if (!CM.time_dependent) {
      const double v = double(j) * double(j) * M_PI * M_PI;
      return (i < d1) ? v - out.delta_diagonal[i] : v + out.delta_diagonal[i];
    }
    auto pot = (i < d1) ? detail::sorted_block_potential(CM, i, 1, i)
                        : detail::sorted_block_potential(CM, i, 2, i - d1);
    return eta_j(pot, int(j)).eta;
  };

  // Caps.  Second block: (b) gives a hard ceiling (eta is increasing in j).
  // First block: (c) bounds the first-block sum once the second is capped.
  std::vector<long long> caps(size_t(n), 0);
  bool feasible = true;
  long long cap2_sum = 0;
  for (int i = d1; i < n; ++i) {
    long long c = 0;
    for (long long j = 1; j <= hmax + 1; ++j) {
      if (delta_comp(i, j) < -kStrictMargin)
        c = j;
      else
        break;
    }
    if (c > hmax) {
      out.t_truncated = true;
      c = hmax;
    }
    caps[size_t(i)] = c;
    cap2_sum += c;
    if (c < 1) feasible = false;
  }
  for (int i = 0; i < d1; ++i) {
    long long c = detail::floordiv(hi2 - 1, 2) + cap2_sum - (d1 - 1);
    if (c > hmax) {
      out.t_truncated = true;
      c = hmax;
    }
    caps[size_t(i)] = std::max(c, 0ll);
    if (caps[size_t(i)] < 1) feasible = false;
  }

  if (feasible) {
    detail::odometer(caps, [&](const std::vector<long long>& h) {
      long long q = 0;
      for (int i = 0; i < n; ++i) q += (i < d1) ? h[size_t(i)] : -h[size_t(i)];
      if (!(lo2 < 2 * q && 2 * q < hi2)) return;
      HVector hv = HVector::make(P.sig, h);
      const Vec delta = delta_bar(P, CM, hv);
      double margin = std::numeric_limits<double>::infinity();
      for (int i = 0; i < n; ++i)
        margin = std::min(margin, (i < d1) ? delta[i] : -delta[i]);
      if (margin > kStrictMargin) {
        TMember m;
        m.h = std::move(hv);
        m.delta = delta;
        m.margin = margin;
        out.members.push_back(std::move(m));
      }
    });
  }

  // S: condition (c) alone, components capped at hmax.
  std::vector<long long> full(size_t(n), hmax);
  detail::odometer(full, [&](const std::vector<long long>& h) {
    long long q = 0;
    for (int i = 0; i < n; ++i) q += (i < d1) ? h[size_t(i)] : -h[size_t(i)];
    if (lo2 < 2 * q && 2 * q < hi2)
      out.s_set.push_back(HVector::make(P.sig, h));
  });
  out.s_truncated =
      detail::window_reaches_beyond(P.sig, int(hmax), lo2, hi2);

  // S': the mirrored window, populated only when m_inf + n < m0.
  if (m_inf.twice_value + 2 * n < m0.twice_value) {
    const long long lo2p = m_inf.twice_value + 2 * (n - nu);
    const long long hi2p = m0.twice_value - 2 * nu;
    detail::odometer(full, [&](const std::vector<long long>& h) {
      long long q = 0;
      for (int i = 0; i < n; ++i) q += (i < d1) ? h[size_t(i)] : -h[size_t(i)];
      if (lo2p < 2 * q && 2 * q < hi2p)
        out.s_prime.push_back(HVector::make(P.sig, h));
    });
    out.s_prime_truncated =
        detail::window_reaches_beyond(P.sig, int(hmax), lo2p, hi2p);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Sufficiency report

struct SufficiencyReport {
  bool cond_i = false;    // every second-block comparison value < -pi^2
  bool cond_ii = false;   // index window valid under degeneracy slack
  bool cond_iii = false;  // sharp window for the nondegenerate comparison
  bool delta_nondegenerate = false;
  bool gap_thm2 = false;  // m0 + 2n < m_inf
  bool theorem2 = false;
  bool theorem3 = false;
  MaslovIndex delta_index;
  std::vector<long long> witness_thm2, witness_thm3;
};

inline SufficiencyReport sufficiency_checks(const NonlinearProblem& P,
                                            const CylinderMaxima& CM,
                                            const MaslovIndex& m0,
                                            const MaslovIndex& m_inf,
                                            const MaslovIndex& delta_index) {
  const int n = P.sig.n, nu = P.sig.nu, d1 = P.sig.d1();
  SufficiencyReport R;
  R.delta_index = delta_index;
  const Vec dd = delta_diag(CM);

  R.cond_i = true;
  for (int i = d1; i < n; ++i)
    R.cond_i = R.cond_i && dd[i] < -M_PI * M_PI;

  R.delta_nondegenerate = true;
  for (int i = 0; i < n; ++i) {
    const double a = (i < d1) ? dd[i] : -dd[i];
    R.delta_nondegenerate =
        R.delta_nondegenerate && detail::dist_to_dirichlet_spectrum(a) > 1e-10;
  }

  // windows in twice-units so half-integer indices stay exact
  const long long t = delta_index.twice_value;
  R.cond_ii = (m0.twice_value - n + 2 * nu < t) &&
              (t < m_inf.twice_value - 5 * n + 2 * nu);
  R.cond_iii =
      (m0.twice_value < t) && (t < m_inf.twice_value - 2 * n);
  R.gap_thm2 = m0.twice_value + 4 * n < m_inf.twice_value;

  R.theorem2 = R.gap_thm2 && R.cond_i && R.cond_ii;
  R.theorem3 = R.delta_nondegenerate && R.cond_i && R.cond_iii;

  auto witness = [&](long long bump) {
    std::vector<long long> w(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i)
      w[size_t(i)] = (i < d1) ? count_N(dd[i]) + bump : count_N(-dd[i]);
    return w;
  };
  if (R.theorem2) R.witness_thm2 = witness(2);
  if (R.theorem3) R.witness_thm3 = witness(1);
  return R;
}

// ---------------------------------------------------------------------------
// Emptiness report

struct EmptinessReport {
  bool radial = false;       // S constant on every sampled sphere
  double radial_dev = 0;     // worst deviation seen on an orbit
  bool threshold_empty = false;  // alpha_inf >= alpha~_inf forces T empty
  bool implic_ok = false;        // alpha_inf < alpha~_inf
};

inline EmptinessReport emptiness_checks(const NonlinearProblem& P,
                                        const AlphaBounds& bounds,
                                        const TSet& TS) {
  const int n = P.sig.n;
  EmptinessReport R;

  // orbit sampling: axis patterns plus fixed pseudo-random directions
  std::vector<Vec> dirs = direction_set(n);
  {
    std::mt19937 gen(1234567u);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int k = 0; k < 16; ++k) {
      Vec d(n);
      do {
        for (int i = 0; i < n; ++i) d[i] = gauss(gen);
      } while (d.norm() < 1e-8);
      d.normalize();
      dirs.push_back(d);
    }
  }
  const TimeGrid tg = TimeGrid::uniform(P.opt.t_samples);
  double dev = 0;
  for (double r : radius_ladder(P.opt.r_lo, P.opt.r_hi, P.opt.radius_samples)) {
    for (double t : tg.points) {
      const Mat ref = P.S_at(t, r * dirs.front());
      for (size_t k = 1; k < dirs.size(); ++k) {
        const Mat S = P.S_at(t, r * dirs[k]);
        dev = std::max(dev, (S - ref).cwiseAbs().maxCoeff());
      }
    }
  }
  R.radial_dev = dev;
  R.radial = dev < 1e-10;
  if (R.radial && !TS.members.empty())
    throw Error(errc::consistency_violation,
                "T must be empty for a radially symmetric problem")
        .with("members", (long long)TS.members.size());

  R.implic_ok = bounds.alpha_inf < bounds.alpha_tilde_inf;
  R.threshold_empty = !(bounds.alpha_inf < bounds.alpha_tilde_inf);
  if (R.threshold_empty && !TS.members.empty())
    throw Error(errc::consistency_violation,
                "T must be empty when alpha_inf >= alpha~_inf")
        .with("alpha_inf", bounds.alpha_inf)
        .with("alpha_tilde_inf", bounds.alpha_tilde_inf);
  return R;
}

// ---------------------------------------------------------------------------
// Orchestration: the full problem analysis short of solving

struct ModelPipeline {
  ConditionReport conditions;
  MaslovIndex m0, m_inf;
  double eps = 0;
  AlphaBounds bounds;
  ElasticBound elastic;
  CylinderMaxima cm;
  TSet tset;
  MaslovIndex delta_index;
  bool delta_degenerate = false;
  SufficiencyReport sufficiency;
  EmptinessReport emptiness;
};

inline ModelPipeline run_model_pipeline(const NonlinearProblem& P) {
  ModelPipeline out;
  out.conditions = verify_conditions(P);
  out.m0 = maslov_of_path(P.S0.path(), P.opt.tol_ode, P.opt.grid_base);
  out.m_inf = maslov_of_path(P.Sinf.path(), P.opt.tol_ode, P.opt.grid_base);
  out.eps = P.opt.eps_override > 0 ? P.opt.eps_override
                                   : default_eps(P.sig, out.m0, out.m_inf);
  out.bounds = find_alpha_bounds(P, out.eps);
  out.elastic = elastic_bound(P, out.bounds.alpha_inf);
  out.cm = cylinder_maxima(P, out.elastic.R_traj);
  out.tset = enumerate_T(P, out.cm, out.m0, out.m_inf);

  const Vec dd = delta_diag(out.cm);
  for (int i = 0; i < P.sig.n; ++i) {
    const double a = (i < P.sig.d1()) ? dd[i] : -dd[i];
    out.delta_degenerate = out.delta_degenerate ||
                           detail::dist_to_dirichlet_spectrum(a) < 1e-10;
  }
  out.delta_index = maslov_of_path(
      DiagonalPath::constants(P.sig, dd).path(), P.opt.tol_ode, P.opt.grid_base);
  out.sufficiency =
      sufficiency_checks(P, out.cm, out.m0, out.m_inf, out.delta_index);
  out.emptiness = emptiness_checks(P, out.bounds, out.tset);
  return out;
}

}  // namespace indef
