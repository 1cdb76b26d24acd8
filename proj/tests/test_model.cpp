#include <catch2/catch_amalgamated.hpp>

#include <indef/model.hpp>

#include <cmath>
#include <limits>
#include <vector>

using namespace indef;

namespace {

const double PI2 = M_PI * M_PI;

// Sigmoid family: Gaussian dips carved into saturating plateaus, keyed so
// that each hyperplane sees the other entry's plateau.
NonlinearProblem family_problem(ProblemOptions opt = {}) {
  return make_problem(
      Signature{2, 1},
      {{"5 + tanh(r^2)*(235 - 100*exp(-(x1/0.25)^2))", "0"},
       {"0", "-50 + tanh(r^2)*(42 - 35*exp(-(x2/0.25)^2))"}},
      {"5", "-50"}, {"240", "-8"}, opt, "sigmoid-family");
}

NonlinearProblem radial_problem(ProblemOptions opt = {}) {
  return make_problem(Signature{2, 1},
                      {{"5 + 2*tanh(r^2)", "0"}, {"0", "-50 + 3*tanh(r^2)"}},
                      {"5", "-50"}, {"7", "-47"}, opt, "radial");
}

NonlinearProblem constant_problem(double a, double b, ProblemOptions opt = {}) {
  auto num = [](double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
  };
  return make_problem(Signature{2, 1}, {{num(a), "0"}, {"0", num(b)}},
                      {num(a), num(b)}, {num(a), num(b)}, opt, "constant");
}

CylinderMaxima hand_cm(Signature sig, const std::vector<std::vector<double>>& rows) {
  CylinderMaxima cm;
  cm.sig = sig;
  cm.radius = 1;
  cm.lambda_bar = Mat(sig.n, sig.n);
  for (int i = 0; i < sig.n; ++i)
    for (int k = 0; k < sig.n; ++k)
      cm.lambda_bar(i, k) = rows[size_t(i)][size_t(k)];
  return cm;
}

MaslovIndex hand_index(long long twice) {
  MaslovIndex m;
  m.twice_value = twice;
  return m;
}

std::vector<std::vector<long long>> member_hs(const TSet& ts) {
  std::vector<std::vector<long long>> out;
  for (const auto& m : ts.members) out.push_back(m.h.h);
  return out;
}

}  // namespace

TEST_CASE("direction sets cover all sign patterns", "[model]") {
  for (int n = 1; n <= 4; ++n) {
    auto dirs = direction_set(n);
    CHECK(int(dirs.size()) == 2 * ((1 << n) - 1));
    for (const Vec& d : dirs) CHECK(d.norm() == Catch::Approx(1.0).margin(1e-12));
  }
  auto hd = hyperplane_directions(3, 1);
  CHECK(hd.size() == 6);
  for (const Vec& d : hd) {
    CHECK(d[1] == 0.0);
    CHECK(d.norm() == Catch::Approx(1.0).margin(1e-12));
  }
}

TEST_CASE("problem construction rejects malformed input", "[model]") {
  CHECK_THROWS_AS(make_problem(Signature{2, 1}, {{"1", "0"}}, {"1", "1"},
                               {"1", "1"}),
                  Error);
  try {
    make_problem(Signature{2, 1}, {{"x3", "0"}, {"0", "1"}}, {"1", "-1"},
                 {"1", "-1"});
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code == errc::unknown_identifier);
  }
  CHECK_THROWS_AS(HVector::make(Signature{2, 1}, {0, 1}), Error);
  CHECK_THROWS_AS(HVector::make(Signature{2, 1}, {1, 2, 3}), Error);
  CHECK(HVector::make(Signature{3, 1}, {1, 2, 3}).inner_j == 0);
}

TEST_CASE("constant diagonal problem passes every condition", "[model]") {
  auto P = constant_problem(5.0, -5.0);
  auto R = verify_conditions(P);
  CHECK(R.v0 == CondStatus::heuristic_pass);
  CHECK(R.vinf == CondStatus::heuristic_pass);
  CHECK(R.v1 == CondStatus::pass);
  CHECK(R.v2 == CondStatus::pass);
  CHECK(R.v3 == CondStatus::pass);
  CHECK(R.ok());
  CHECK(R.v1_off == 0.0);
  CHECK(R.v3_off == 0.0);
  CHECK(R.v0_remainder.front() == 0.0);
  CHECK(R.vinf_remainder.back() == 0.0);
}

TEST_CASE("cross-block coupling fails the split check", "[model]") {
  auto P = make_problem(Signature{2, 1}, {{"5", "1"}, {"1", "-5"}},
                        {"5", "-5"}, {"5", "-5"});
  auto R = verify_conditions(P);
  CHECK(R.v1 == CondStatus::fail);
  CHECK(R.v1_off == Catch::Approx(1.0).margin(1e-12));
  CHECK(R.v3 == CondStatus::fail);  // off-diagonal on the hyperplanes too
  CHECK_FALSE(R.ok());
}

TEST_CASE("Dirichlet-spectrum asymptote fails the nondegeneracy check",
          "[model]") {
  auto P = make_problem(Signature{2, 1},
                        {{"9.869604401089358", "0"}, {"0", "-5"}},
                        {"9.869604401089358", "-5"},
                        {"9.869604401089358", "-5"});
  auto R = verify_conditions(P);
  CHECK(R.v2 == CondStatus::fail);
  CHECK(R.v2_sigma_s0 < 1e-6);
  CHECK_FALSE(R.ok());
}

TEST_CASE("frozen system at alpha = 0 is the small asymptote", "[model]") {
  auto P = family_problem();
  auto L = l_system(P, Vec::Zero(2));
  for (double t : {0.0, 0.3, 0.7, 1.0}) CHECK(L.u(t).norm() == 0.0);
  CHECK(L.path.constant);
  CHECK(L.path.A0(0, 0) == Catch::Approx(5.0).margin(1e-12));
  CHECK(L.path.B0(0, 0) == Catch::Approx(-50.0).margin(1e-12));
}

TEST_CASE("linear problems reproduce the closed-form trajectory", "[model]") {
  auto P = constant_problem(4.0, -9.0);
  Vec a(2);
  a << 1.5, -2.0;
  auto L = l_system(P, a);
  CHECK(L.path.constant);
  // u1'' + 4 u1 = 0 with u1'(0) = a1; u2'' = -9 u2 with u2'(0) = -a2
  for (double t : {0.2, 0.5, 0.8, 1.0}) {
    Vec u = L.u(t);
    CHECK(u[0] == Catch::Approx(1.5 * std::sin(2 * t) / 2).margin(1e-8));
    CHECK(u[1] == Catch::Approx(2.0 * std::sin(3 * t) / 3).margin(1e-8));
  }
}

TEST_CASE("hyperplane data stays on its hyperplane", "[model]") {
  auto P = family_problem();
  Vec a(2);
  a << 3.0, 0.0;
  auto L = l_system(P, a);
  for (double t : {0.25, 0.5, 0.75, 1.0}) CHECK(L.u(t)[1] == 0.0);
  // frozen coefficients agree with the matrix evaluated along the orbit
  const double t = 0.7;
  CHECK(L.path.A(t)(0, 0) ==
        Catch::Approx(P.S_diag_at(0, t, L.u(t))).margin(1e-12));
  CHECK(L.path.B(t)(0, 0) ==
        Catch::Approx(P.S_diag_at(1, t, L.u(t))).margin(1e-12));

  Vec b(2);
  b << 0.0, 2.0;
  auto Lb = l_system(P, b);
  for (double t2 : {0.25, 0.5, 0.75, 1.0}) CHECK(Lb.u(t2)[0] == 0.0);
}

TEST_CASE("trajectory cache shares records", "[model]") {
  auto P = family_problem();
  Vec a(2);
  a << 3.0, 1.0;
  auto L1 = l_system(P, a);
  auto L2 = l_system(P, a);
  CHECK(L1.traj.get() == L2.traj.get());
  auto t1 = l_system_trace(P, a);
  auto t2 = l_system_trace(P, a);
  CHECK(t1.get() == t2.get());
}

TEST_CASE("asymptotic profile decays toward both asymptotes", "[model]") {
  auto P = family_problem();
  auto table = asymptotic_profile(P, {1e-6, 25.0, 50.0, 100.0});
  REQUIRE(table.size() == 4);
  CHECK(table[0].dist_s0 < 1e-5);
  CHECK(table[0].ydist_s0 < 1e-5);
  // doubling the radius never increases the distance to S_inf
  CHECK(table[2].dist_sinf <= table[1].dist_sinf + 1e-9);
  CHECK(table[3].dist_sinf <= table[2].dist_sinf + 1e-9);
  CHECK_THROWS_AS(asymptotic_profile(P, {1.0, 1.0}), Error);
  CHECK_THROWS_AS(asymptotic_profile(P, {-1.0}), Error);
}

TEST_CASE("asymptote indices from the counting formula", "[model]") {
  auto P = family_problem();
  CHECK(maslov_of_path(P.S0.path()).twice_value == -4);
  CHECK(maslov_of_path(P.Sinf.path()).twice_value == 8);
}

TEST_CASE("default margin halves the smallest window slack", "[model]") {
  // window (-1, 3): admissible levels 0, 1, 2; worst slack pi, halved
  CHECK(default_eps(Signature{2, 1}, hand_index(-4), hand_index(8)) ==
        Catch::Approx(M_PI / 2 - 1e-9).margin(1e-15));
  // empty window: conventional fallback
  CHECK(default_eps(Signature{2, 1}, hand_index(0), hand_index(0)) ==
        Catch::Approx(M_PI / 4).margin(1e-15));
}

TEST_CASE("separation radii split the shooting sphere", "[model]") {
  auto P = family_problem();
  const double eps = default_eps(Signature{2, 1}, hand_index(-4), hand_index(8));
  auto b = find_alpha_bounds(P, eps);
  CHECK(b.m0.twice_value == -4);
  CHECK(b.m_inf.twice_value == 8);
  CHECK(b.alpha0 > 0);
  CHECK(b.alpha0 < b.alpha_inf);
  CHECK(std::isinf(b.alpha_tilde_inf));
  CHECK_THROWS_AS(find_alpha_bounds(P, -1.0), Error);
}

TEST_CASE("no separation is reported with the profile", "[model]") {
  // constant problem whose declared large asymptote is far above the data
  auto P = make_problem(Signature{2, 1}, {{"5", "0"}, {"0", "-50"}},
                        {"5", "-50"}, {"1000", "-1"});
  try {
    find_alpha_bounds(P, 0.5);
    FAIL("expected NoSeparation");
  } catch (const Error& e) {
    CHECK(e.code == errc::no_separation);
    CHECK(e.detail.count("profile") == 1);
  }
}

TEST_CASE("elastic bound covers the sampled trajectories", "[model]") {
  auto P = family_problem();
  auto eb = elastic_bound(P, 30.0);
  CHECK(eb.rounds == 1);
  CHECK(eb.M_hat >= 239.0);
  CHECK(eb.sup_observed > 0);
  CHECK(eb.sup_observed < eb.R_traj);
  auto eb2 = elastic_bound(P, 30.0);
  CHECK(eb2.R_traj == eb.R_traj);
  CHECK(eb2.sup_observed == eb.sup_observed);
  CHECK_THROWS_AS(elastic_bound(P, 0.0), Error);
}

TEST_CASE("cylinder maxima saturate the sigmoid plateaus", "[model]") {
  auto P = make_problem(Signature{2, 1},
                        {{"5 + 40*tanh(x2^2)", "0"}, {"0", "-60 + 10*tanh(x1^2)"}},
                        {"5", "-60"}, {"45", "-50"});
  auto cm = cylinder_maxima(P, 30.0);
  // W_1 = {x1 = 0}: the first entry climbs its plateau, the second is pinned
  CHECK(cm.lambda_bar(0, 0) == Catch::Approx(45.0).margin(1e-9));
  CHECK(cm.lambda_bar(0, 1) == -60.0);
  CHECK(cm.lambda_bar(1, 0) == 5.0);
  CHECK(cm.lambda_bar(1, 1) == Catch::Approx(-50.0).margin(1e-9));

  // refinement has already converged at the default grid
  ProblemOptions fine;
  fine.cyl_grid = 65;
  auto Pf = make_problem(Signature{2, 1},
                         {{"5 + 40*tanh(x2^2)", "0"}, {"0", "-60 + 10*tanh(x1^2)"}},
                         {"5", "-60"}, {"45", "-50"}, fine);
  auto cmf = cylinder_maxima(Pf, 30.0);
  CHECK((cm.lambda_bar - cmf.lambda_bar).cwiseAbs().maxCoeff() < 1e-3);

  // enlarging the cylinder can only push the maxima up
  auto cm2 = cylinder_maxima(P, 60.0);
  for (int i = 0; i < 2; ++i)
    for (int k = 0; k < 2; ++k)
      CHECK(cm2.lambda_bar(i, k) >= cm.lambda_bar(i, k) - 1e-12);

  auto Pc = constant_problem(7.0, -3.0);
  auto cmc = cylinder_maxima(Pc, 5.0);
  for (int i = 0; i < 2; ++i) {
    CHECK(cmc.lambda_bar(i, 0) == 7.0);
    CHECK(cmc.lambda_bar(i, 1) == -3.0);
  }
  CHECK_THROWS_AS(cylinder_maxima(P, 0.0), Error);
}

TEST_CASE("time-dependent maxima agree with the envelope", "[model]") {
  auto P = make_problem(Signature{2, 1},
                        {{"5 + 40*tanh(x2^2)", "0"}, {"0", "-60 + 10*tanh(x1^2)"}},
                        {"5", "-60"}, {"45", "-50"});
  auto cm = cylinder_maxima(P, 30.0);
  auto cmt = cylinder_maxima(P, 30.0, /*time_dependent=*/true);
  CHECK(cmt.time_dependent);
  CHECK((cm.lambda_bar - cmt.lambda_bar).cwiseAbs().maxCoeff() < 1e-6);
  auto h = HVector::make(Signature{2, 1}, {3, 1});
  Vec d_const = delta_bar(P, cm, h);
  Vec d_time = delta_bar(P, cmt, h);
  CHECK((d_const - d_time).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("delta bar sorts each hyperplane's own block", "[model]") {
  Signature sig{3, 1};
  auto cm = hand_cm(sig, {{30, 10, -60}, {20, 40, -70}, {99, 98, -80}});
  Vec dd = delta_diag(cm);
  CHECK(dd[0] == 10.0);
  CHECK(dd[1] == 40.0);
  CHECK(dd[2] == -80.0);
  auto s1 = sigma_block(cm, 1);
  CHECK(s1[0] == std::vector<int>{1, 0});
  CHECK(s1[1] == std::vector<int>{0, 1});
  CHECK(s1[2] == std::vector<int>{1, 0});

  auto P = make_problem(sig, {{"1", "0", "0"}, {"0", "1", "0"}, {"0", "0", "-1"}},
                        {"1", "1", "-1"}, {"1", "1", "-1"});
  Vec d = delta_bar(P, cm, HVector::make(sig, {1, 2, 3}));
  CHECK(d[0] == Catch::Approx(PI2 - 10).margin(1e-12));
  CHECK(d[1] == Catch::Approx(4 * PI2 - 40).margin(1e-12));
  CHECK(d[2] == Catch::Approx(9 * PI2 - 80).margin(1e-12));

  // worked scalar pair
  auto cm2 = hand_cm(Signature{2, 1}, {{50, -50}, {50, -50}});
  auto P2 = constant_problem(50, -50);
  Vec d2 = delta_bar(P2, cm2, HVector::make(Signature{2, 1}, {3, 1}));
  CHECK(d2[0] == Catch::Approx(9 * PI2 - 50).margin(1e-12));
  CHECK(d2[1] == Catch::Approx(PI2 - 50).margin(1e-12));
  auto cm0 = hand_cm(Signature{2, 1}, {{0, 0}, {0, 0}});
  Vec d0 = delta_bar(P2, cm0, HVector::make(Signature{2, 1}, {1, 1}));
  CHECK(d0[0] == Catch::Approx(PI2).margin(1e-12));
  CHECK(d0[1] == Catch::Approx(PI2).margin(1e-12));
}

TEST_CASE("the admissible set matches the worked enumeration", "[model]") {
  auto P = constant_problem(50, -50);
  auto cm = hand_cm(Signature{2, 1}, {{50, -50}, {50, -50}});
  auto ts = enumerate_T(P, cm, hand_index(0), hand_index(10));
  CHECK(member_hs(ts) == std::vector<std::vector<long long>>{
                             {3, 1}, {4, 1}, {4, 2}, {5, 2}});
  for (const auto& m : ts.members) CHECK(m.margin > 1e-9);

  // independent brute force over the capped lattice
  std::vector<std::vector<long long>> brute;
  for (long long h2 = 1; h2 <= 32; ++h2)
    for (long long h1 = 1; h1 <= 32; ++h1) {
      const bool a = h1 * h1 * PI2 - 50 > 1e-9;
      const bool b = h2 * h2 * PI2 - 50 < -1e-9;
      const long long q2 = 2 * (h1 - h2);
      if (a && b && 2 < q2 && q2 < 8) brute.push_back({h1, h2});
    }
  CHECK(member_hs(ts) == brute);

  // members always satisfy condition (c) alone as well
  for (const auto& m : ts.members) {
    bool found = false;
    for (const auto& s : ts.s_set) found = found || s.h == m.h.h;
    CHECK(found);
  }
  // S holds every h1 - h2 in {2, 3} with components up to hmax
  CHECK(ts.s_set.size() == 59);
  CHECK(ts.s_truncated);
  CHECK(ts.s_prime.empty());

  // a second-block ceiling above -pi^2 empties the set
  auto cm_bad = hand_cm(Signature{2, 1}, {{50, -5}, {50, -5}});
  auto ts_bad = enumerate_T(P, cm_bad, hand_index(0), hand_index(10));
  CHECK(ts_bad.members.empty());

  // an index gap of at most n leaves no room
  auto ts_gap = enumerate_T(P, cm, hand_index(0), hand_index(4));
  CHECK(ts_gap.members.empty());
  CHECK(ts_gap.s_set.empty());
}

TEST_CASE("sufficiency windows and witnesses", "[model]") {
  auto P = constant_problem(50, -50);

  auto cm = hand_cm(Signature{2, 1}, {{50, -50}, {50, -50}});
  auto di = maslov_of_path(DiagonalPath::constants(Signature{2, 1},
                                                   delta_diag(cm)).path());
  CHECK(di.twice_value == 0);
  auto R = sufficiency_checks(P, cm, hand_index(0), hand_index(10), di);
  CHECK(R.cond_i);
  CHECK(R.delta_nondegenerate);
  CHECK_FALSE(R.cond_iii);  // the window is open at the left edge
  CHECK_FALSE(R.theorem2);
  CHECK_FALSE(R.theorem3);

  auto cm2 = hand_cm(Signature{2, 1}, {{150, -50}, {150, -50}});
  auto di2 = maslov_of_path(DiagonalPath::constants(Signature{2, 1},
                                                    delta_diag(cm2)).path());
  CHECK(di2.twice_value == 2);
  auto R2 = sufficiency_checks(P, cm2, hand_index(0), hand_index(14), di2);
  CHECK(R2.cond_i);
  CHECK(R2.cond_iii);
  CHECK(R2.theorem3);
  CHECK(R2.witness_thm3 == std::vector<long long>{4, 2});

  auto cm3 = hand_cm(Signature{2, 1}, {{150, -5}, {150, -5}});
  auto di3 = maslov_of_path(DiagonalPath::constants(Signature{2, 1},
                                                    delta_diag(cm3)).path());
  auto R3 = sufficiency_checks(P, cm3, hand_index(0), hand_index(14), di3);
  CHECK_FALSE(R3.cond_i);
  CHECK_FALSE(R3.theorem2);
  CHECK_FALSE(R3.theorem3);
}

TEST_CASE("radial problems are flagged and force emptiness", "[model]") {
  auto P = radial_problem();
  AlphaBounds b;
  b.alpha_inf = 1.0;
  b.alpha_tilde_inf = 2.0;
  TSet empty_ts;
  auto R = emptiness_checks(P, b, empty_ts);
  CHECK(R.radial);
  CHECK(R.radial_dev < 1e-10);
  CHECK(R.implic_ok);
  CHECK_FALSE(R.threshold_empty);

  TSet fake;
  fake.members.resize(1);
  try {
    emptiness_checks(P, b, fake);
    FAIL("expected a consistency violation");
  } catch (const Error& e) {
    CHECK(e.code == errc::consistency_violation);
  }

  auto Pf = family_problem();
  auto Rf = emptiness_checks(Pf, b, empty_ts);
  CHECK_FALSE(Rf.radial);

  // threshold variant: alpha_inf at or past alpha~_inf empties T
  AlphaBounds b2;
  b2.alpha_inf = 5.0;
  b2.alpha_tilde_inf = 5.0;
  auto R2 = emptiness_checks(Pf, b2, empty_ts);
  CHECK(R2.threshold_empty);
  CHECK_FALSE(R2.implic_ok);
  try {
    emptiness_checks(Pf, b2, fake);
    FAIL("expected a consistency violation");
  } catch (const Error& e) {
    CHECK(e.code == errc::consistency_violation);
  }
}

TEST_CASE("the family pipeline lands on the nodal window", "[model]") {
  auto P = family_problem();
  auto pipe = run_model_pipeline(P);

  CHECK(pipe.conditions.ok());
  CHECK(pipe.m0.twice_value == -4);
  CHECK(pipe.m_inf.twice_value == 8);
  CHECK(pipe.eps == Catch::Approx(M_PI / 2 - 1e-9).margin(1e-15));
  CHECK(pipe.bounds.alpha0 > 0);
  CHECK(pipe.bounds.alpha0 < pipe.bounds.alpha_inf);
  CHECK(std::isinf(pipe.bounds.alpha_tilde_inf));

  // the saturated plateaus are met exactly on the far cylinder
  CHECK(pipe.cm.lambda_bar(0, 0) == Catch::Approx(140.0).margin(1e-8));
  CHECK(pipe.cm.lambda_bar(0, 1) == Catch::Approx(-8.0).margin(1e-8));
  CHECK(pipe.cm.lambda_bar(1, 0) == Catch::Approx(240.0).margin(1e-8));
  CHECK(pipe.cm.lambda_bar(1, 1) == Catch::Approx(-43.0).margin(1e-8));

  CHECK(member_hs(pipe.tset) ==
        std::vector<std::vector<long long>>{{4, 2}});
  CHECK(pipe.delta_index.twice_value == 2);
  CHECK_FALSE(pipe.delta_degenerate);
  CHECK(pipe.sufficiency.theorem3);
  CHECK(pipe.sufficiency.witness_thm3 == std::vector<long long>{4, 2});
  CHECK_FALSE(pipe.sufficiency.theorem2);  // the wide window needs more gap
  CHECK_FALSE(pipe.emptiness.radial);
  CHECK(pipe.emptiness.implic_ok);
}

TEST_CASE("the radial pipeline proves emptiness", "[model]") {
  auto P = radial_problem();
  auto pipe = run_model_pipeline(P);
  CHECK(pipe.conditions.ok());
  CHECK(pipe.tset.members.empty());
  CHECK(pipe.emptiness.radial);
}
