// Command-line driver: problem-file ingestion, analysis commands, and
// report/plot-data emission.  One command per process; JSON to stdout
// (CSV for the phase command), machine-readable errors to stderr.

#include <indef/report.hpp>
#include <indef/sturm.hpp>

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

using indef::ordered_json;

struct CommonArgs {
  std::string problem;
  std::string out_dir;
  std::vector<long long> h;
  std::vector<double> alpha;
  std::string asymptote;
  double tol_f = 0;
  int grid = 0;
  int hmax = 0;
};

void add_problem_flags(CLI::App* cmd, CommonArgs& a) {
  // --h is a data flag here, so help must not claim the single-dash -h
  cmd->set_help_flag("--help", "print this help message and exit");
  cmd->add_option("--problem", a.problem,
                  "problem file path, or builtin:<name>")
      ->required();
  cmd->add_option("--out", a.out_dir, "directory to copy the payload into");
  cmd->add_option("--grid", a.grid, "override the phase-trace grid floor")
      ->check(CLI::PositiveNumber);
}

indef::LoadedProblem load_with_overrides(const CommonArgs& a) {
  indef::LoadedProblem L = indef::resolve_problem(a.problem);
  if (a.grid > 0) L.problem.opt.grid_base = a.grid;
  if (a.hmax > 0) L.problem.opt.hmax = a.hmax;
  if (a.tol_f > 0) L.shoot.tol_f = a.tol_f;
  return L;
}

void emit(const std::string& payload, const std::string& out_dir,
          const std::string& filename) {
  std::cout << payload;
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    std::ofstream f(std::filesystem::path(out_dir) / filename,
                    std::ios::binary);
    if (!f)
      throw indef::Error(indef::errc::bad_request,
                         "cannot write into the output directory")
          .with("dir", out_dir);
    f << payload;
  }
}

ordered_json header_json(const indef::LoadedProblem& L) {
  ordered_json j;
  j["version"] = indef::k_tool_version;
  j["problem"] = indef::problem_json(L.problem, L.description);
  return j;
}

// Phase trace of a diagonal asymptote path, on its own adaptive grid.
indef::PhaseAngleTrace asymptote_trace(const indef::DiagonalPath& D,
                                       const indef::ProblemOptions& opt) {
  auto path = D.path();
  auto grid = indef::phase_grid(path, 1.0, opt.grid_base);
  auto F = indef::fundamental_solution(indef::decouple(path), grid, opt.tol_ode);
  return indef::compute_phase_trace(F);
}

// One index computed by every applicable method, plus the dispatcher's value.
ordered_json maslov_methods_json(const indef::DiagonalPath& D,
                                 const indef::ProblemOptions& opt) {
  ordered_json j;
  auto path = D.path();
  auto grid = indef::phase_grid(path, 1.0, opt.grid_base);
  auto F = indef::fundamental_solution(indef::decouple(path), grid, opt.tol_ode);
  auto trace = indef::compute_phase_trace(F);

  std::vector<long long> twice_seen;
  const auto attempt = [&](const char* name, auto&& fn) {
    try {
      indef::MaslovIndex m = fn();
      j[name] = indef::index_json(m);
      twice_seen.push_back(m.twice_value);
    } catch (const indef::Error& e) {
      j[name] = ordered_json{{"error", indef::errc_name(e.code)},
                             {"message", e.what()}};
    }
  };
  attempt("phase_angles", [&] { return indef::maslov_from_phase_angles(trace); });
  attempt("crossing_form", [&] { return indef::maslov_crossing_form(F); });
  if (D.constant) {
    attempt("constant_split", [&] {
      const indef::Vec v = D.at(0.0);
      const int d1 = D.sig.d1();
      indef::ConstantSplitSpectrum sp;
      sp.lambda.assign(v.data(), v.data() + d1);
      sp.mu.assign(v.data() + d1, v.data() + D.sig.n);
      return indef::maslov_constant_split(sp, D.sig);
    });
  }
  bool agree = true;
  for (long long t : twice_seen) agree = agree && t == twice_seen.front();
  j["methods_agree"] = agree;
  j["index"] =
      indef::index_json(indef::maslov_of_path(path, opt.tol_ode, opt.grid_base));
  return j;
}

int run_verify(const CommonArgs& a) {
  auto L = load_with_overrides(a);
  ordered_json j = header_json(L);
  j["conditions"] = indef::conditions_json(indef::verify_conditions(L.problem));
  emit(j.dump(2) + "\n", a.out_dir, "verify.json");
  return 0;
}

int run_phase(const CommonArgs& a) {
  auto L = load_with_overrides(a);
  const auto& P = L.problem;
  if (a.alpha.empty() == a.asymptote.empty())
    throw indef::Error(indef::errc::bad_request,
                       "phase needs exactly one of --alpha and --asymptote");
  std::string csv;
  if (!a.alpha.empty()) {
    indef::Vec al;
    if (int(a.alpha.size()) == P.sig.n) {
      al = Eigen::Map<const indef::Vec>(a.alpha.data(), P.sig.n);
    } else if (a.alpha.size() == 1) {
      al = indef::Vec::Constant(P.sig.n, a.alpha.front());
    } else {
      throw indef::Error(indef::errc::dimension_mismatch,
                         "--alpha needs n components (or one, broadcast)")
          .with("n", (long long)P.sig.n)
          .with("got", (long long)a.alpha.size());
    }
    csv = indef::trace_csv(*indef::l_system_trace(P, al));
  } else {
    const auto& D = a.asymptote == "s0" ? P.S0 : P.Sinf;
    csv = indef::trace_csv(asymptote_trace(D, P.opt));
  }
  emit(csv, a.out_dir, "phase.csv");
  return 0;
}

int run_maslov(const CommonArgs& a) {
  auto L = load_with_overrides(a);
  const auto& P = L.problem;
  ordered_json j = header_json(L);
  j["m0"] = maslov_methods_json(P.S0, P.opt);
  j["m_inf"] = maslov_methods_json(P.Sinf, P.opt);
  try {
    const auto m0 = indef::maslov_of_path(P.S0.path(), P.opt.tol_ode,
                                          P.opt.grid_base);
    const auto mi = indef::maslov_of_path(P.Sinf.path(), P.opt.tol_ode,
                                          P.opt.grid_base);
    const double eps = P.opt.eps_override > 0
                           ? P.opt.eps_override
                           : indef::default_eps(P.sig, m0, mi);
    const auto bounds = indef::find_alpha_bounds(P, eps);
    const auto elastic = indef::elastic_bound(P, bounds.alpha_inf);
    const auto cm = indef::cylinder_maxima(P, elastic.R_traj);
    const indef::Vec dd = indef::delta_diag(cm);
    ordered_json d = maslov_methods_json(
        indef::DiagonalPath::constants(P.sig, dd), P.opt);
    d["delta_diagonal"] = indef::vec_json(dd);
    j["delta"] = std::move(d);
  } catch (const indef::Error& e) {
    j["delta"] = indef::error_json(e);
  }
  emit(j.dump(2) + "\n", a.out_dir, "maslov.json");
  return 0;
}

int run_eta(const CommonArgs& a) {
  auto L = load_with_overrides(a);
  const auto& P = L.problem;
  ordered_json j = header_json(L);
  ordered_json rows = ordered_json::array();
  const int d1 = P.sig.d1();
  for (const char* source : {"S0", "Sinf"}) {
    const auto& D = std::string(source) == "S0" ? P.S0 : P.Sinf;
    for (int i = 0; i < P.sig.n; ++i) {
      const auto& entry = D.entries[size_t(i)];
      // second-block equations carry the opposite sign, so compare against
      // the negated entry there
      indef::ScalarPotential pot =
          i < d1 ? entry
                 : (entry.constant
                        ? indef::ScalarPotential(-entry(0.0))
                        : indef::ScalarPotential(std::function<double(double)>(
                              [entry](double t) { return -entry(t); })));
      ordered_json row;
      row["source"] = source;
      row["index"] = i + 1;
      row["block"] = i < d1 ? 1 : 2;
      row["constant"] = pot.constant;
      if (pot.constant) row["a"] = pot(0.0);
      ordered_json etas = ordered_json::array();
      for (int jj = 1; jj <= 5; ++jj) {
        const auto r = indef::eta_j(pot, jj, 1e-9, P.opt.tol_ode);
        ordered_json e{{"j", r.j},
                       {"eta", r.eta},
                       {"residual", r.residual},
                       {"zeros", r.zeros},
                       {"tangential", r.tangential}};
        if (pot.constant) e["closed_form"] = jj * jj * M_PI * M_PI - pot(0.0);
        etas.push_back(std::move(e));
      }
      row["eigenvalues"] = std::move(etas);
      rows.push_back(std::move(row));
    }
  }
  j["table"] = std::move(rows);
  emit(j.dump(2) + "\n", a.out_dir, "eta.json");
  return 0;
}

int run_tset(const CommonArgs& a) {
  auto L = load_with_overrides(a);
  const auto pipe = indef::run_model_pipeline(L.problem);
  ordered_json j = header_json(L);
  j["eps"] = pipe.eps;
  j["bounds"] = indef::bounds_json(pipe.bounds);
  j["lambda_bar"] = indef::cylinder_json(pipe.cm);
  j["tset"] = indef::tset_json(pipe.tset);
  j["emptiness"] = indef::emptiness_json(pipe.emptiness);
  emit(j.dump(2) + "\n", a.out_dir, "tset.json");
  return 0;
}

bool is_member(const indef::TSet& ts, const std::vector<long long>& h) {
  for (const auto& m : ts.members)
    if (m.h.h == h) return true;
  return false;
}

int run_solve(const CommonArgs& a) {
  auto L = load_with_overrides(a);
  const auto& P = L.problem;
  const auto pipe = indef::run_model_pipeline(P);
  const auto [r, R] = indef::shell_radii(pipe.bounds);

  std::vector<indef::HVector> targets;
  std::vector<bool> admissible;
  if (!a.h.empty()) {
    targets.push_back(indef::HVector::make(P.sig, a.h));
    admissible.push_back(is_member(pipe.tset, a.h));
  } else {
    for (const auto& m : pipe.tset.members) {
      targets.push_back(m.h);
      admissible.push_back(true);
    }
  }

  ordered_json j = header_json(L);
  j["shell"] = ordered_json{{"r", r}, {"R", R}};
  ordered_json sweeps = ordered_json::array();
  for (size_t k = 0; k < targets.size(); ++k) {
    const auto sw = indef::solve_all_orthants(P, targets[k], r, R, L.shoot,
                                              admissible[k]);
    sweeps.push_back(indef::sweep_json(sw));
  }
  j["sweeps"] = std::move(sweeps);
  emit(j.dump(2) + "\n", a.out_dir, "solve.json");
  return 0;
}

int run_report(const CommonArgs& a) {
  const auto t0 = std::chrono::steady_clock::now();
  auto L = load_with_overrides(a);
  const auto pipe = indef::run_model_pipeline(L.problem);
  const auto [r, R] = indef::shell_radii(pipe.bounds);
  std::vector<indef::SweepResult> sweeps;
  for (const auto& m : pipe.tset.members)
    sweeps.push_back(
        indef::solve_all_orthants(L.problem, m.h, r, R, L.shoot, true));
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  ordered_json j = indef::run_report_json(L, pipe, sweeps, seconds);
  emit(j.dump(2) + "\n", a.out_dir, "report.json");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "indef: multiple solutions of strongly indefinite Dirichlet systems via "
      "phase angles and a Miranda shooting solver"};
  app.set_help_flag("--help", "print this help message and exit");
  app.require_subcommand(1);

  CommonArgs a;
  auto* verify = app.add_subcommand(
      "verify", "check the structural conditions of a problem");
  add_problem_flags(verify, a);

  auto* phase = app.add_subcommand(
      "phase", "CSV phase-angle traces for an initial slope or an asymptote");
  add_problem_flags(phase, a);
  phase->add_option("--alpha", a.alpha,
                    "initial slope (n comma-separated values, or one value "
                    "broadcast to all components)")
      ->delimiter(',');
  phase->add_option("--asymptote", a.asymptote,
                    "trace the frozen asymptote instead of a trajectory")
      ->check(CLI::IsMember({"s0", "sinf"}));

  auto* maslov = app.add_subcommand(
      "maslov", "indices of S0, Sinf, and the comparison diagonal, with "
                "method cross-checks");
  add_problem_flags(maslov, a);

  auto* eta = app.add_subcommand(
      "eta", "Dirichlet eigenvalue table for the asymptote entries");
  add_problem_flags(eta, a);

  auto* tset = app.add_subcommand(
      "tset", "admissible nodal-type listing with certificates");
  add_problem_flags(tset, a);
  tset->add_option("--hmax", a.hmax, "enumeration cap per component")
      ->check(CLI::PositiveNumber);

  auto* solve = app.add_subcommand(
      "solve", "orthant sweep for one nodal type, or for every admissible one");
  add_problem_flags(solve, a);
  solve->add_option("--h", a.h, "nodal type (n comma-separated integers)")
      ->delimiter(',');
  solve->add_option("--hmax", a.hmax, "enumeration cap per component")
      ->check(CLI::PositiveNumber);
  solve->add_option("--tol-f", a.tol_f, "field residual tolerance")
      ->check(CLI::PositiveNumber);

  auto* report = app.add_subcommand(
      "report", "full analysis plus solution records for every admissible type");
  add_problem_flags(report, a);
  report->add_option("--hmax", a.hmax, "enumeration cap per component")
      ->check(CLI::PositiveNumber);
  report->add_option("--tol-f", a.tol_f, "field residual tolerance")
      ->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  try {
    if (verify->parsed()) return run_verify(a);
    if (phase->parsed()) return run_phase(a);
    if (maslov->parsed()) return run_maslov(a);
    if (eta->parsed()) return run_eta(a);
    if (tset->parsed()) return run_tset(a);
    if (solve->parsed()) return run_solve(a);
    if (report->parsed()) return run_report(a);
  } catch (const indef::Error& e) {
    std::cerr << indef::error_json(e).dump(2) << "\n";
    return 1;
  } catch (const std::exception& e) {
    ordered_json j{{"error", "Internal"},
                   {"message", e.what()},
                   {"detail", ordered_json::object()}};
    std::cerr << j.dump(2) << "\n";
    return 1;
  }
  return 0;
}
