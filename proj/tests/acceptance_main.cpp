// Acceptance suite: ten end-to-end checks, one line of output each. Runs
// standalone (no test framework) so the output reads as a plain checklist;
// exits nonzero if any line fails.

#include <indef/builtins.hpp>
#include <indef/maslov.hpp>
#include <indef/shooting.hpp>
#include <indef/sturm.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <string>
#include <utility>
#include <vector>

using namespace indef;

namespace {

constexpr double PI2 = M_PI * M_PI;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fnum(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

std::string hlist(const std::vector<std::vector<long long>>& hs) {
  std::string out = "{";
  for (size_t i = 0; i < hs.size(); ++i) {
    out += i ? " (" : "(";
    for (size_t k = 0; k < hs[i].size(); ++k)
      out += (k ? "," : "") + std::to_string(hs[i][k]);
    out += ")";
  }
  return out + "}";
}

// piecewise closed form for the terminal angle of u'' + a u = 0, u(0) = 0
double closed_form_angle(double a) {
  if (a == 0.0) return M_PI / 4;
  if (a > 0) {
    double s = std::sqrt(a);
    double k = std::floor(s / M_PI);
    double rem = s - k * M_PI;
    return k * M_PI + std::atan2(std::sin(rem), s * std::cos(rem));
  }
  double c = std::sqrt(-a);
  return std::atan(std::tanh(c) / c);
}

FundamentalSolution make_F(const Signature& sig, const Mat& A, const Mat& B) {
  auto path = SplitSymmetricPath::constants(sig, A, B);
  return fundamental_solution(decouple(path), phase_grid(path));
}

Mat diag_of(const std::vector<double>& v) {
  const auto d = Eigen::Index(v.size());
  Mat M = Mat::Zero(d, d);
  for (Eigen::Index i = 0; i < d; ++i) M(i, i) = v[size_t(i)];
  return M;
}

int kernel_dim(const Mat& X) {
  if (X.rows() == 0) return 0;
  Eigen::JacobiSVD<Mat> svd(X);
  const auto& s = svd.singularValues();
  const double thr = 1e-4 * std::max(1.0, s(0));
  int k = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) < thr) ++k;
  return k;
}

bool off_spectrum(double a, double margin) {
  return detail::dist_to_dirichlet_spectrum(a) >= margin;
}

// draw a diagonal split spectrum with every eigenvalue clear of k^2 pi^2
void draw_spectrum(std::mt19937& rng, const Signature& sig, double margin,
                   std::vector<double>& lam, std::vector<double>& mu) {
  std::uniform_real_distribution<double> dv(-100.0, 100.0);
  lam.clear();
  mu.clear();
  while (int(lam.size()) < sig.d1()) {
    double v = dv(rng);
    if (off_spectrum(v, margin)) lam.push_back(v);
  }
  while (int(mu.size()) < sig.d2()) {
    double v = dv(rng);
    if (off_spectrum(-v, margin)) mu.push_back(v);
  }
}

// --- criterion 1: scalar terminal angles against closed forms ---------------

Outcome criterion_scalar_angles() {
  const std::pair<double, double> cases[] = {
      {0.0, M_PI / 4},
      {-1.0, std::atan(std::tanh(1.0))},
      {PI2, M_PI},
      {4 * PI2, 2 * M_PI},
      {50.0, closed_form_angle(50.0)},
  };
  double worst = 0;
  for (const auto& c : cases)
    worst = std::max(worst,
                     std::abs(prufer_angle(ScalarPotential(c.first)) - c.second));
  return {worst <= 1e-6, "worst deviation " + fnum(worst) + " over 5 potentials"};
}

// --- criterion 2: eta roots against the constant-potential formula ----------

Outcome criterion_eta_formula() {
  std::mt19937 rng(190819);
  std::uniform_real_distribution<double> da(-100.0, 100.0);
  double worst = 0;
  int bad_nodes = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const double a = da(rng);
    ScalarPotential pot(a);
    for (int j = 1; j <= 5; ++j) {
      auto r = eta_j(pot, j);
      worst = std::max(worst, std::abs(r.eta - (double(j) * j * PI2 - a)));
      if (r.zeros != j - 1) ++bad_nodes;
    }
  }
  std::string d = "worst |eta_j - (j^2 pi^2 - a)| = " + fnum(worst) +
                  " over 100 roots";
  if (bad_nodes) d += ", " + std::to_string(bad_nodes) + " wrong node counts";
  return {worst <= 1e-8 && bad_nodes == 0, d};
}

// --- criterion 3: three index methods agree on random split spectra ---------

Outcome criterion_method_agreement() {
  std::mt19937 rng(33550336);
  long long worst = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 1 + int(rng() % 4);
    const int nu = int(rng() % unsigned(n + 1));
    Signature sig{n, nu};
    std::vector<double> lam, mu;
    draw_spectrum(rng, sig, 0.1, lam, mu);
    auto F = make_F(sig, diag_of(lam), diag_of(mu));
    const long long formula = maslov_constant_split({lam, mu}, sig).twice_value;
    const long long angles =
        maslov_from_phase_angles(compute_phase_trace(F)).twice_value;
    const long long form = maslov_crossing_form(F).twice_value;
    worst = std::max({worst, std::llabs(formula - angles),
                      std::llabs(formula - form)});
  }
  return {worst == 0,
          "50 random systems (n <= 4), max index disagreement " +
              std::to_string(worst)};
}

// --- criterion 4: second-block mirror identity and comparison monotonicity --

Outcome criterion_mirror_monotone() {
  std::mt19937 rng(777);
  std::uniform_real_distribution<double> dc(-30.0, 30.0);
  std::uniform_real_distribution<double> dpos(0.0, 25.0);
  auto trig = [](double c0, double c1, double c2) {
    return ScalarPotential([c0, c1, c2](double t) {
      return c0 + c1 * std::sin(M_PI * t) + c2 * std::cos(2 * M_PI * t);
    });
  };
  double worst_mirror = 0;
  for (int trial = 0; trial < 20; ++trial) {
    auto pot = trig(dc(rng), dc(rng), dc(rng));
    worst_mirror = std::max(
        worst_mirror, std::abs(second_block_angle(pot) + prufer_angle(pot)));
  }
  double worst_violation = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const double c0 = dc(rng), c1 = dc(rng), c2 = dc(rng);
    const double d0 = dpos(rng), d1 = dpos(rng);
    auto lo = trig(c0, c1, c2);
    ScalarPotential hi([c0, c1, c2, d0, d1](double t) {
      const double s = std::sin(M_PI * t);
      return c0 + c1 * s + c2 * std::cos(2 * M_PI * t) + d0 + d1 * s * s;
    });
    worst_violation =
        std::max(worst_violation, prufer_angle(lo) - prufer_angle(hi));
  }
  return {worst_mirror <= 1e-8 && worst_violation <= 1e-8,
          "mirror deviation " + fnum(worst_mirror) +
              ", worst monotonicity violation " + fnum(worst_violation)};
}

// --- criterion 5: crossing multiplicities equal X-block kernel dimensions ---

Outcome criterion_crossing_kernels() {
  std::mt19937 rng(424242);
  int crossings = 0, mismatches = 0, max_mult = 0;
  auto check = [&](const FundamentalSolution& F) {
    auto tr = compute_phase_trace(F);
    for (const auto& c : detect_crossings(tr, 0.01, 1.0)) {
      const int kd =
          kernel_dim(F.flow1.X_at(c.t)) + kernel_dim(F.flow2.X_at(c.t));
      if (c.multiplicity != kd ||
          c.block_labels.size() != size_t(c.multiplicity))
        ++mismatches;
      ++crossings;
      max_mult = std::max(max_mult, c.multiplicity);
    }
  };
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 1 + int(rng() % 4);
    const int nu = int(rng() % unsigned(n + 1));
    Signature sig{n, nu};
    std::vector<double> lam, mu;
    draw_spectrum(rng, sig, 0.05, lam, mu);
    check(make_F(sig, diag_of(lam), diag_of(mu)));
  }
  // coincident pair: both angles of one block cross at the same instant
  const double a = (1.2 * M_PI) * (1.2 * M_PI);
  check(make_F(Signature{2, 0}, a * Mat::Identity(2, 2), Mat(0, 0)));
  check(make_F(Signature{2, 2}, Mat(0, 0), -a * Mat::Identity(2, 2)));
  // rotated block: kernels of a non-diagonal X(t)
  const double th = 0.6;
  Mat Q(2, 2);
  Q << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
  Mat D = Mat::Zero(2, 2);
  D(0, 0) = 30.0;
  D(1, 1) = 70.0;
  check(make_F(Signature{2, 0}, Q * D * Q.transpose(), Mat(0, 0)));
  return {mismatches == 0 && crossings >= 10 && max_mult >= 2,
          std::to_string(crossings) + " crossings, max multiplicity " +
              std::to_string(max_mult) + ", " + std::to_string(mismatches) +
              " kernel mismatches"};
}

// --- criterion 6: admissible set matches the worked enumeration -------------

Outcome criterion_worked_enumeration() {
  auto P = make_problem(Signature{2, 1}, {{"50", "0"}, {"0", "-50"}},
                        {"50", "-50"}, {"50", "-50"}, {}, "constant");
  CylinderMaxima cm;
  cm.sig = P.sig;
  cm.radius = 1;
  cm.lambda_bar = Mat(2, 2);
  cm.lambda_bar << 50.0, -50.0, 50.0, -50.0;
  MaslovIndex m0, m_inf;
  m0.twice_value = 0;
  m_inf.twice_value = 10;
  auto ts = enumerate_T(P, cm, m0, m_inf);
  std::vector<std::vector<long long>> got;
  double worst_margin = std::numeric_limits<double>::infinity();
  for (const auto& m : ts.members) {
    got.push_back(m.h.h);
    worst_margin = std::min(worst_margin, m.margin);
  }
  const std::vector<std::vector<long long>> want = {
      {3, 1}, {4, 1}, {4, 2}, {5, 2}};

  // independent brute force over the capped lattice
  std::vector<std::vector<long long>> brute;
  for (long long h2 = 1; h2 <= 32; ++h2)
    for (long long h1 = 1; h1 <= 32; ++h1) {
      const bool above = h1 * h1 * PI2 - 50 > 1e-9;
      const bool below = h2 * h2 * PI2 - 50 < -1e-9;
      const long long q2 = 2 * (h1 - h2);
      if (above && below && 2 < q2 && q2 < 8) brute.push_back({h1, h2});
    }

  const bool pass = got == want && got == brute && worst_margin > 1e-9;
  return {pass, "members " + hlist(got) + (got == brute ? " == " : " != ") +
                    "brute force, min margin " + fnum(worst_margin)};
}

// --- criterion 7: radial problems yield empty admissible sets ---------------

Outcome criterion_radial_empty() {
  const char* names[] = {"radial-n2-nu0", "radial-n2-nu1", "radial-n2-nu2",
                         "radial-n3-nu1", "radial-n3-nu2"};
  int empty = 0, radial = 0;
  double worst_dev = 0;
  for (const char* name : names) {
    auto L = load_builtin(name);
    auto pipe = run_model_pipeline(L.problem);
    if (pipe.tset.members.empty()) ++empty;
    if (pipe.emptiness.radial) ++radial;
    worst_dev = std::max(worst_dev, pipe.emptiness.radial_dev);
  }
  return {empty == 5 && radial == 5,
          std::to_string(empty) + "/5 empty, " + std::to_string(radial) +
              "/5 detected radial, max orbit deviation " + fnum(worst_dev)};
}

// --- criterion 8: the family problem yields four certified solutions --------

Outcome criterion_family_solutions() {
  const auto t0 = std::chrono::steady_clock::now();
  auto L = load_builtin("family");
  auto pipe = run_model_pipeline(L.problem);
  if (!pipe.conditions.ok())
    return {false, "structural conditions failed"};
  if (pipe.tset.members.empty())
    return {false, "admissible set came back empty"};
  const auto rr = shell_radii(pipe.bounds);
  std::vector<std::vector<long long>> hs;
  int sweeps_ok = 0;
  double worst_f = 0, worst_u = 0, worst_cert = 0;
  for (const auto& m : pipe.tset.members) {
    hs.push_back(m.h.h);
    auto sweep = solve_all_orthants(L.problem, m.h, rr.first, rr.second, L.shoot);
    if (sweep.records.size() == 4) ++sweeps_ok;
    for (const auto& rec : sweep.records) {
      worst_f = std::max(worst_f, rec.residual_field);
      worst_u = std::max(worst_u, rec.residual_bvp);
      worst_cert = std::max(worst_cert, rec.certificate_dev);
    }
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  const bool pass = sweeps_ok == int(pipe.tset.members.size()) &&
                    worst_f < 1e-8 && worst_u < 1e-6 && worst_cert < 1e-6 &&
                    secs < 600.0;
  return {pass, "types " + hlist(hs) + ", " + std::to_string(sweeps_ok) + "/" +
                    std::to_string(pipe.tset.members.size()) +
                    " sweeps with 4 solutions; field " + fnum(worst_f) +
                    ", boundary " + fnum(worst_u) + ", certificate " +
                    fnum(worst_cert)};
}

// --- criterion 9: degenerate spectra stay within the half-integer bound -----

Outcome criterion_degenerate_bound() {
  std::mt19937 rng(271828);
  long long worst = 0;
  int deg_throws = 0, end_throws = 0;
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 1 + int(rng() % 4);
    const int nu = int(rng() % unsigned(n + 1));
    Signature sig{n, nu};
    std::vector<double> lam, mu;
    draw_spectrum(rng, sig, 0.1, lam, mu);
    // park one eigenvalue exactly on the Dirichlet spectrum
    const int slot = int(rng() % unsigned(n));
    const double k = 1.0 + double(rng() % 3);
    if (slot < sig.d1())
      lam[size_t(slot)] = k * k * PI2;
    else
      mu[size_t(slot - sig.d1())] = -k * k * PI2;

    long long naive = 0;
    for (double v : lam) naive += count_N(v);
    for (double v : mu) naive -= count_N(-v);

    auto F = make_F(sig, diag_of(lam), diag_of(mu));
    const long long form = maslov_crossing_form(F).twice_value;
    const long long dev = std::llabs(form - 2 * naive);
    if (dev > n) worst = std::max(worst, dev);
    worst = std::max(worst, dev - n);  // excess over the allowed slack

    try {
      maslov_constant_split({lam, mu}, sig);
    } catch (const Error& e) {
      if (e.code == errc::degenerate) ++deg_throws;
    }
    try {
      maslov_from_phase_angles(compute_phase_trace(F));
    } catch (const Error& e) {
      if (e.code == errc::degenerate_endpoint) ++end_throws;
    }
  }
  return {worst <= 0 && deg_throws == 10 && end_throws == 10,
          "10 degenerate spectra, worst excess over n/2 slack " +
              std::to_string(std::max(worst, 0LL)) + "; " +
              std::to_string(deg_throws) + "+" + std::to_string(end_throws) +
              "/10+10 degeneracy throws"};
}

// --- criterion 10: results stable under eps halving and grid doubling -------

std::vector<double> terminal_angles(const NonlinearProblem& P) {
  std::vector<double> out;
  auto push_tr = [&out](const PhaseAngleTrace& tr) {
    for (double v : tr.theta1_end()) out.push_back(v);
    for (double v : tr.theta2_end()) out.push_back(v);
  };
  for (const DiagonalPath* D : {&P.S0, &P.Sinf}) {
    auto path = D->path();
    push_tr(compute_phase_trace(fundamental_solution(
        decouple(path), phase_grid(path, 1.0, P.opt.grid_base), P.opt.tol_ode)));
  }
  const int n = P.sig.n;
  Vec alt(n);
  for (int i = 0; i < n; ++i) alt[i] = (i % 2 == 0) ? 1.3 : -1.3;
  const Vec alphas[] = {Vec(Vec::Zero(n)), Vec(0.6 * Vec::Ones(n)), alt};
  for (const Vec& a : alphas) push_tr(*l_system_trace(P, a));
  return out;
}

std::vector<std::vector<long long>> h_lists(const std::vector<HVector>& hs) {
  std::vector<std::vector<long long>> out;
  for (const auto& h : hs) out.push_back(h.h);
  return out;
}

Outcome criterion_refinement_stability() {
  const char* names[] = {"constant", "resonant", "nondegenerate-fail"};
  int stable = 0;
  double worst_shift = 0;
  std::string bad;
  for (const char* name : names) {
    auto base = load_builtin(name);
    auto p1 = run_model_pipeline(base.problem);

    auto fine = load_builtin(name);  // fresh copy, fresh trace cache
    fine.problem.opt.eps_override = p1.eps / 2;
    fine.problem.opt.grid_base = 2 * base.problem.opt.grid_base;
    auto p2 = run_model_pipeline(fine.problem);

    bool ok = p1.m0.twice_value == p2.m0.twice_value &&
              p1.m_inf.twice_value == p2.m_inf.twice_value &&
              p1.delta_index.twice_value == p2.delta_index.twice_value &&
              p1.bounds.m0.twice_value == p2.bounds.m0.twice_value &&
              p1.bounds.m_inf.twice_value == p2.bounds.m_inf.twice_value &&
              p1.delta_degenerate == p2.delta_degenerate &&
              p1.conditions.ok() == p2.conditions.ok() &&
              p1.sufficiency.theorem2 == p2.sufficiency.theorem2 &&
              p1.sufficiency.theorem3 == p2.sufficiency.theorem3 &&
              p1.sufficiency.witness_thm2 == p2.sufficiency.witness_thm2 &&
              p1.sufficiency.witness_thm3 == p2.sufficiency.witness_thm3 &&
              p1.emptiness.radial == p2.emptiness.radial &&
              p1.emptiness.threshold_empty == p2.emptiness.threshold_empty;
    ok = ok && h_lists(p1.tset.s_set) == h_lists(p2.tset.s_set);
    std::vector<std::vector<long long>> m1, m2;
    for (const auto& m : p1.tset.members) m1.push_back(m.h.h);
    for (const auto& m : p2.tset.members) m2.push_back(m.h.h);
    ok = ok && m1 == m2;

    const auto a1 = terminal_angles(base.problem);
    const auto a2 = terminal_angles(fine.problem);
    double shift = 0;
    if (a1.size() != a2.size()) {
      ok = false;
    } else {
      for (size_t i = 0; i < a1.size(); ++i)
        shift = std::max(shift, std::abs(a1[i] - a2[i]));
    }
    worst_shift = std::max(worst_shift, shift);
    ok = ok && shift < 1e-6;
    if (ok)
      ++stable;
    else if (bad.empty())
      bad = name;
  }
  std::string d = std::to_string(stable) +
                  "/3 problems stable, max terminal-angle shift " +
                  fnum(worst_shift);
  if (stable != 3) d += " (first failure: " + bad + ")";
  return {stable == 3, d};
}

struct Criterion {
  const char* title;
  Outcome (*fn)();
};

}  // namespace

int main() {
  const Criterion list[] = {
      {"scalar terminal angles match closed forms", criterion_scalar_angles},
      {"eta roots match the constant-potential formula", criterion_eta_formula},
      {"three index methods agree on random split spectra",
       criterion_method_agreement},
      {"second-block mirror identity and angle monotonicity",
       criterion_mirror_monotone},
      {"crossing multiplicities equal X-block kernel dimensions",
       criterion_crossing_kernels},
      {"admissible set matches the worked enumeration",
       criterion_worked_enumeration},
      {"radial problems come back with empty admissible sets",
       criterion_radial_empty},
      {"the family problem yields four certified solutions per type",
       criterion_family_solutions},
      {"degenerate spectra stay within the half-integer slack",
       criterion_degenerate_bound},
      {"indices and angles stable under eps/grid refinement",
       criterion_refinement_stability},
  };
  int failures = 0;
  int idx = 0;
  for (const auto& c : list) {
    ++idx;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome oc;
    try {
      oc = c.fn();
    } catch (const std::exception& e) {
      oc = {false, std::string("unexpected exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    std::printf("criterion %2d %s %s (%s; %.1f s)\n", idx,
                oc.pass ? "PASS" : "FAIL", c.title, oc.detail.c_str(), secs);
    std::fflush(stdout);
    if (!oc.pass) ++failures;
  }
  if (failures)
    std::printf("%d of 10 criteria FAILED\n", failures);
  else
    std::printf("all 10 criteria passed\n");
  return failures ? 1 : 0;
}
