#pragma once

// Shooting field on conical shells: Miranda-type sign conditions, certified
// zero finding by box subdivision + damped quasi-Newton, and the 2^n orthant
// sweep that produces nodal-certified solution records.

#include <indef/model.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

namespace indef {

struct ShootOptions {
  double tol_f = 1e-8;      // terminal field residual, sup norm
  double tol_u = 1e-6;      // terminal boundary residual |u(1)|
  double tol_angle = 1e-6;  // terminal phase-angle certificate
  int max_depth = 40;       // box subdivision depth
  long long max_evals = 20000;
  int newton_iters = 60;
  int face_radii = 5;       // radii sampled per shell face
};

// One closed orthant of the annulus r <= |x| <= R; zeros are allowed on the
// coordinate faces, coordinates of the opposite sign are excluded.
struct ConicalShell {
  double r = 0, R = 0;
  std::vector<int> orthant;  // entries in {+1, -1}

  static ConicalShell make(double r, double R, std::vector<int> orthant) {
    if (!(r > 0) || !(R > r))
      fail(errc::bad_request, "conical shell needs 0 < r < R");
    if (orthant.empty()) fail(errc::bad_request, "orthant must be nonempty");
    for (int s : orthant)
      if (s != 1 && s != -1)
        fail(errc::bad_request, "orthant entries must be +1 or -1");
    ConicalShell sh;
    sh.r = r;
    sh.R = R;
    sh.orthant = std::move(orthant);
    return sh;
  }

  int n() const { return int(orthant.size()); }

  bool contains(const Vec& x, double slack = 1e-9) const {
    if (int(x.size()) != n()) return false;
    const double scale = 1 + x.cwiseAbs().maxCoeff();
    for (int i = 0; i < n(); ++i)
      if (x[i] * orthant[size_t(i)] < -slack * scale) return false;
    const double nr = x.norm();
    return nr >= r - slack * (1 + r) && nr <= R + slack * (1 + R);
  }

  // Nearest point of the shell in the "project signs, then rescale" sense.
  Vec clip(const Vec& x) const {
    Vec y = x;
    for (int i = 0; i < n(); ++i)
      if (y[i] * orthant[size_t(i)] < 0) y[i] = 0;
    const double nr = y.norm();
    if (nr == 0) {
      y = Vec::Constant(n(), (r + R) / (2 * std::sqrt(double(n()))));
      for (int i = 0; i < n(); ++i) y[i] *= orthant[size_t(i)];
      return y;
    }
    if (nr < r) y *= r / nr;
    if (nr > R) y *= R / nr;
    return y;
  }

  // Maximal axis-aligned box inscribed in the shell (corner norms r and R).
  void box(Vec& lo, Vec& hi) const {
    const double a = r / std::sqrt(double(n()));
    const double b = R / std::sqrt(double(n()));
    lo.resize(n());
    hi.resize(n());
    for (int i = 0; i < n(); ++i) {
      if (orthant[size_t(i)] > 0) {
        lo[i] = a;
        hi[i] = b;
      } else {
        lo[i] = -b;
        hi[i] = -a;
      }
    }
  }
};

// Terminal-angle targets: h_i pi on the first block, -h_i pi on the second.
inline Vec field_targets(Signature sig, const HVector& h) {
  sig.validate();
  const int n = sig.n, d1 = n - sig.nu;
  if (int(h.h.size()) != n)
    fail(errc::dimension_mismatch, "h does not match the problem dimension");
  Vec tg(n);
  for (int i = 0; i < d1; ++i) tg[i] = double(h.h[size_t(i)]) * M_PI;
  for (int j = d1; j < n; ++j) tg[j] = -double(h.h[size_t(j)]) * M_PI;
  return tg;
}

struct FieldEval {
  Vec alpha;
  Vec f;                // theta_terminal - targets, componentwise
  Vec theta_terminal;   // ascending-sorted terminal angles, block 1 then 2
  std::shared_ptr<const PhaseAngleTrace> trace;
};

inline FieldEval field_f(const NonlinearProblem& P, const Vec& alpha,
                         const HVector& h) {
  const int n = P.sig.n, d1 = n - P.sig.nu;
  FieldEval out;
  out.alpha = alpha;
  out.trace = l_system_trace(P, alpha);
  const auto t1 = out.trace->theta1_end();
  const auto t2 = out.trace->theta2_end();
  out.theta_terminal.resize(n);
  for (int i = 0; i < d1; ++i) out.theta_terminal[i] = t1[size_t(i)];
  for (int j = 0; j < P.sig.nu; ++j) out.theta_terminal[d1 + j] = t2[size_t(j)];
  out.f = out.theta_terminal - field_targets(P.sig, h);
  return out;
}

// ---------------------------------------------------------------------------
// Miranda-type sign conditions on the shell

struct MirandaFace {
  int index = 0;            // which coordinate hyperplane
  double max_f = 0, min_f = 0;
  Vec max_at, min_at;
  bool negative_ok = false;  // f_index < 0 on every sample
  bool positive_ok = false;  // reversed variant: f_index > 0 on every sample
  int samples = 0;
};

struct MirandaReport {
  ConicalShell shell;
  HVector h;
  bool inner_ok = false, outer_ok = false;
  double inner_worst = 0, outer_worst = 0;  // max sum f inner / min sum f outer
  Vec inner_worst_at, outer_worst_at;
  std::vector<MirandaFace> faces;
  int samples = 0;

  bool ok() const {
    if (!inner_ok || !outer_ok) return false;
    for (const auto& f : faces)
      if (!f.negative_ok && !f.positive_ok) return false;
    return true;
  }
};

inline MirandaReport miranda_conditions(const NonlinearProblem& P,
                                        const HVector& h,
                                        const ConicalShell& shell,
                                        ShootOptions opt = {}) {
  const int n = P.sig.n;
  if (shell.n() != n)
    fail(errc::dimension_mismatch, "shell does not match the problem dimension");
  MirandaReport rep;
  rep.shell = shell;
  rep.h = h;
  const auto compatible = [&](const Vec& d) {
    for (int i = 0; i < n; ++i)
      if (d[i] * shell.orthant[size_t(i)] < 0) return false;
    return true;
  };

  const double inf = std::numeric_limits<double>::infinity();
  rep.inner_worst = -inf;
  rep.outer_worst = inf;
  for (const Vec& d : direction_set(n)) {
    if (!compatible(d)) continue;
    const double vi = field_f(P, shell.r * d, h).f.sum();
    const double vo = field_f(P, shell.R * d, h).f.sum();
    rep.samples += 2;
    if (vi > rep.inner_worst) {
      rep.inner_worst = vi;
      rep.inner_worst_at = shell.r * d;
    }
    if (vo < rep.outer_worst) {
      rep.outer_worst = vo;
      rep.outer_worst_at = shell.R * d;
    }
  }
  rep.inner_ok = rep.inner_worst < 0;
  rep.outer_ok = rep.outer_worst > 0;

  const auto radii =
      radius_ladder(shell.r, shell.R, std::max(2, opt.face_radii));
  for (int i = 0; i < n; ++i) {
    MirandaFace fc;
    fc.index = i;
    fc.max_f = -inf;
    fc.min_f = inf;
    for (const Vec& d : hyperplane_directions(n, i)) {
      if (!compatible(d)) continue;
      for (double rr : radii) {
        const Vec a = rr * d;
        const double v = field_f(P, a, h).f[i];
        ++fc.samples;
        ++rep.samples;
        if (v > fc.max_f) {
          fc.max_f = v;
          fc.max_at = a;
        }
        if (v < fc.min_f) {
          fc.min_f = v;
          fc.min_at = a;
        }
      }
    }
    fc.negative_ok = fc.max_f < 0;
    fc.positive_ok = fc.min_f > 0;
    rep.faces.push_back(std::move(fc));
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Certified zero finding on the inscribed box

namespace detail {

struct BoxSearchResult {
  bool converged = false;
  Vec alpha;
  double residual = std::numeric_limits<double>::infinity();
  long long evals = 0;
  int depth_reached = 0;
  bool depth_exhausted = false;
};

// Recursive subdivision of the inscribed box with conservative face-sign
// screening, interleaved with damped quasi-Newton attempts from the best
// sample. The field is an arbitrary callable so the search is test-injectable.
inline BoxSearchResult miranda_box_search(
    const std::function<Vec(const Vec&)>& field, const ConicalShell& shell,
    const ShootOptions& opt) {
  const int n = shell.n();
  BoxSearchResult out;

  const auto resid = [](const Vec& f) { return f.cwiseAbs().maxCoeff(); };
  const auto F = [&](const Vec& a) -> Vec {
    ++out.evals;
    Vec f = field(a);
    const double r = resid(f);
    if (r < out.residual) {
      out.residual = r;
      out.alpha = a;
    }
    return f;
  };

  // Damped quasi-Newton with forward-difference Jacobian, iterates clipped
  // to the shell so sign structure and radii are never abandoned.
  const auto newton = [&](Vec a) -> bool {
    Vec fa = F(a);
    for (int it = 0; it < opt.newton_iters; ++it) {
      if (out.evals > opt.max_evals) return false;
      const double ra = resid(fa);
      if (ra < opt.tol_f) {
        out.converged = true;
        out.alpha = a;
        out.residual = ra;
        return true;
      }
      Mat J(n, n);
      const double hk = 1e-6 * (1 + a.norm());
      for (int k = 0; k < n; ++k) {
        Vec ak = a;
        ak[k] += hk;
        J.col(k) = (F(ak) - fa) / hk;
      }
      const Vec d = J.fullPivLu().solve(-fa);
      if (!d.allFinite()) return false;
      const double base = fa.squaredNorm();
      bool accepted = false;
      for (double lam = 1.0; lam >= 1.0 / 1024; lam *= 0.5) {
        const Vec cand = shell.clip(a + lam * d);
        const Vec fc = F(cand);
        if (fc.squaredNorm() <= (1 - 1e-4 * lam) * base) {
          a = cand;
          fa = fc;
          accepted = true;
          break;
        }
      }
      if (!accepted) return false;
    }
    return false;
  };

  struct Box {
    Vec lo, hi;
    int depth = 0;
    double score = 0;
  };
  const auto center_of = [](const Box& b) -> Vec { return 0.5 * (b.lo + b.hi); };

  // Conservative screening: discard only when some component keeps one strict
  // sign on the whole sampled opposing face pair.
  const auto screen_keep = [&](const Box& b) -> bool {
    for (int i = 0; i < n; ++i) {
      bool all_pos = true, all_neg = true;
      for (int side = 0; side < 2; ++side) {
        const double ci = side == 0 ? b.lo[i] : b.hi[i];
        std::vector<int> idx(static_cast<size_t>(std::max(0, n - 1)), 0);
        for (;;) {
          if (out.evals > opt.max_evals) return true;  // budget: keep, decide later
          Vec a(n);
          a[i] = ci;
          int kfree = 0;
          for (int k = 0; k < n; ++k) {
            if (k == i) continue;
            const int g = idx[size_t(kfree++)];
            a[k] = g == 0 ? b.lo[k] : g == 1 ? 0.5 * (b.lo[k] + b.hi[k]) : b.hi[k];
          }
          const Vec f = F(a);
          if (resid(f) < opt.tol_f) {
            out.converged = true;
            out.alpha = a;
            out.residual = resid(f);
            return true;
          }
          if (!(f[i] > opt.tol_f)) all_pos = false;
          if (!(f[i] < -opt.tol_f)) all_neg = false;
          int adv = 0;
          while (adv < n - 1) {
            if (++idx[size_t(adv)] < 3) break;
            idx[size_t(adv)] = 0;
            ++adv;
          }
          if (adv == n - 1) break;
        }
      }
      if (all_pos || all_neg) return false;
    }
    return true;
  };

  Box root;
  shell.box(root.lo, root.hi);
  {
    const Vec c = center_of(root);
    const Vec fc = F(c);
    if (resid(fc) < opt.tol_f) {
      out.converged = true;
      out.alpha = c;
      out.residual = resid(fc);
      return out;
    }
  }
  if (newton(out.alpha)) return out;

  const auto cmp = [](const Box& a, const Box& b) { return a.score > b.score; };
  std::vector<Box> heap;
  root.score = out.residual;
  heap.push_back(root);
  double last_newton_best = out.residual;

  while (!heap.empty() && out.evals < opt.max_evals && !out.converged) {
    std::pop_heap(heap.begin(), heap.end(), cmp);
    Box b = heap.back();
    heap.pop_back();
    out.depth_reached = std::max(out.depth_reached, b.depth);
    if (b.depth >= opt.max_depth) {
      out.depth_exhausted = true;
      continue;
    }
    int axis = 0;
    for (int k = 1; k < n; ++k)
      if (b.hi[k] - b.lo[k] > b.hi[axis] - b.lo[axis]) axis = k;
    const double mid = 0.5 * (b.lo[axis] + b.hi[axis]);
    Box c1 = b, c2 = b;
    c1.hi[axis] = mid;
    c2.lo[axis] = mid;
    ++c1.depth;
    ++c2.depth;
    for (Box* cb : {&c1, &c2}) {
      if (out.converged) break;
      if (!screen_keep(*cb)) continue;
      if (out.converged) break;
      const Vec c = center_of(*cb);
      const Vec fc = F(c);
      if (resid(fc) < opt.tol_f) {
        out.converged = true;
        out.alpha = c;
        out.residual = resid(fc);
        break;
      }
      cb->score = resid(fc);
      heap.push_back(*cb);
      std::push_heap(heap.begin(), heap.end(), cmp);
    }
    if (!out.converged && out.residual < 0.75 * last_newton_best) {
      last_newton_best = out.residual;
      if (newton(out.alpha)) break;
    }
  }
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Solution records and the orthant sweep

struct SolutionRecord {
  HVector h;
  std::vector<int> orthant;
  Vec alpha_star;
  double residual_field = 0;  // |f(alpha*)| sup norm
  double residual_bvp = 0;    // |u(1)|
  double certificate_dev = 0; // worst terminal-angle deviation from target
  Vec theta_terminal;
  Vec theta_targets;
  bool degenerate_family = false;  // a whole family of zeros was detected
  long long evals = 0;
};

inline SolutionRecord miranda_solve(const NonlinearProblem& P, const HVector& h,
                                    const ConicalShell& shell,
                                    ShootOptions opt = {}) {
  if (shell.n() != P.sig.n)
    fail(errc::dimension_mismatch, "shell does not match the problem dimension");
  const auto field = [&](const Vec& a) { return field_f(P, a, h).f; };
  const auto res = detail::miranda_box_search(field, shell, opt);
  if (!res.converged)
    throw Error(errc::not_found,
                "no certified zero of the shooting field in the shell")
        .with("best_residual", res.residual)
        .with("evals", res.evals)
        .with("depth_reached", (long long)res.depth_reached);

  SolutionRecord rec;
  rec.h = h;
  rec.orthant = shell.orthant;
  rec.alpha_star = res.alpha;
  rec.evals = res.evals;
  const auto fe = field_f(P, res.alpha, h);
  rec.residual_field = fe.f.cwiseAbs().maxCoeff();
  rec.theta_terminal = fe.theta_terminal;
  rec.theta_targets = field_targets(P.sig, h);
  rec.certificate_dev =
      (fe.theta_terminal - rec.theta_targets).cwiseAbs().maxCoeff();
  rec.residual_bvp = l_system(P, res.alpha).u(1.0).norm();
  if (rec.residual_bvp >= opt.tol_u || rec.certificate_dev >= opt.tol_angle)
    throw Error(errc::certificate_mismatch,
                "field residual is small but the terminal certificate fails")
        .with("residual_field", rec.residual_field)
        .with("residual_bvp", rec.residual_bvp)
        .with("certificate_dev", rec.certificate_dev);

  // Probe a second, well-separated point: if the field vanishes there too the
  // zero is not isolated (linear resonant case) and the record says so.
  Vec probe = shell.clip(res.alpha * 1.6);
  if ((probe - res.alpha).norm() < 0.05 * (shell.R - shell.r))
    probe = shell.clip(res.alpha * 0.6);
  if ((probe - res.alpha).norm() > 0.02 * (shell.R - shell.r)) {
    const Vec fp = field_f(P, probe, h).f;
    if (fp.cwiseAbs().maxCoeff() < opt.tol_f) rec.degenerate_family = true;
  }
  return rec;
}

struct OrthantOutcome {
  std::vector<int> orthant;
  bool found = false;
  SolutionRecord record;  // valid when found
  std::string error;      // error name when not found
  std::string message;
  double best_residual = std::numeric_limits<double>::quiet_NaN();
};

struct SweepResult {
  HVector h;
  bool h_admissible = true;  // caller's knowledge: h is in the admissible set
  std::vector<SolutionRecord> records;
  std::vector<OrthantOutcome> outcomes;
};

// Shell radii from the separation bounds; collapsed bounds (degenerate or
// fully radial problems) get a symmetric widening so the shell stays valid.
inline std::pair<double, double> shell_radii(const AlphaBounds& b) {
  if (b.alpha_inf > b.alpha0 * (1 + 1e-9)) return {b.alpha0, b.alpha_inf};
  return {0.5 * b.alpha0, 2.0 * b.alpha0};
}

inline SweepResult solve_all_orthants(const NonlinearProblem& P,
                                      const HVector& h, double r, double R,
                                      ShootOptions opt = {},
                                      bool h_admissible = true) {
  const int n = P.sig.n;
  if (!(r > 0) || !(R > r))
    fail(errc::bad_request, "orthant sweep needs 0 < r < R");
  SweepResult out;
  out.h = h;
  out.h_admissible = h_admissible;
  const int total = 1 << n;
  out.outcomes.resize(static_cast<size_t>(total));
  detail::parallel_for(
      total,
      [&](int k) {
        std::vector<int> signs(static_cast<size_t>(n));
        for (int i = 0; i < n; ++i)
          signs[size_t(i)] = ((k >> i) & 1) ? -1 : 1;
        auto& oc = out.outcomes[size_t(k)];
        oc.orthant = signs;
        try {
          oc.record = miranda_solve(P, h, ConicalShell::make(r, R, signs), opt);
          oc.found = true;
        } catch (const Error& e) {
          oc.error = errc_name(e.code);
          oc.message = e.what();
          const auto it = e.detail.find("best_residual");
          if (it != e.detail.end()) {
            try {
              oc.best_residual = std::stod(it->second);
            } catch (...) {
            }
          }
        }
      },
      P.opt.threads);

  for (const auto& oc : out.outcomes)
    if (oc.found) out.records.push_back(oc.record);
  for (size_t a = 0; a < out.records.size(); ++a)
    for (size_t b = a + 1; b < out.records.size(); ++b) {
      const double d =
          (out.records[a].alpha_star - out.records[b].alpha_star).norm();
      if (!(d > r))
        throw Error(errc::consistency_violation,
                    "orthant solutions are not pairwise distinct")
            .with("distance", d)
            .with("required", r);
    }
  return out;
}

// Convenience form: runs the model pipeline to obtain the shell and the
// admissible set, then sweeps.
inline SweepResult solve_all_orthants(const NonlinearProblem& P,
                                      const HVector& h,
                                      ShootOptions opt = {}) {
  const auto pipe = run_model_pipeline(P);
  bool in_t = false;
  for (const auto& m : pipe.tset.members) in_t = in_t || m.h.h == h.h;
  const auto rr = shell_radii(pipe.bounds);
  return solve_all_orthants(P, h, rr.first, rr.second, opt, in_t);
}

}  // namespace indef
