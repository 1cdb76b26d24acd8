#pragma once

// Serialization of analysis results: a JSON report tree and CSV angle traces.
// Payloads are deterministic for a fixed problem + options + version, except
// for the "timing" subtree, which callers exclude when comparing runs.

#include <indef/builtins.hpp>
#include <indef/model.hpp>
#include <indef/shooting.hpp>

#include <json.hpp>

#include <cstdio>
#include <string>

namespace indef {

using ordered_json = nlohmann::ordered_json;

inline constexpr const char* k_tool_version = "1.0.0";

namespace report_detail {

// Non-finite doubles have no JSON number form; keep them readable.
inline ordered_json num(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

inline ordered_json vec(const Vec& v) {
  ordered_json a = ordered_json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(num(v[i]));
  return a;
}

inline ordered_json mat(const Mat& m) {
  ordered_json rows = ordered_json::array();
  for (int i = 0; i < m.rows(); ++i) {
    ordered_json row = ordered_json::array();
    for (int k = 0; k < m.cols(); ++k) row.push_back(num(m(i, k)));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace report_detail

inline ordered_json vec_json(const Vec& v) { return report_detail::vec(v); }

inline ordered_json index_json(const MaslovIndex& m) {
  return ordered_json{{"twice", m.twice_value}, {"value", m.value()}};
}

inline ordered_json problem_json(const NonlinearProblem& P,
                                 const std::string& description = {}) {
  ordered_json j;
  j["name"] = P.name;
  j["n"] = P.sig.n;
  j["nu"] = P.sig.nu;
  if (!description.empty()) j["description"] = description;
  j["x_dependent"] = P.x_dependent();
  j["t_dependent"] = P.t_dependent();
  return j;
}

inline ordered_json options_json(const ProblemOptions& o,
                                 const ShootOptions& s) {
  ordered_json j;
  j["tol_ode"] = o.tol_ode;
  j["tol_nd"] = o.tol_nd;
  j["tol_pattern"] = o.tol_pattern;
  j["tol_heur"] = o.tol_heur;
  j["t_samples"] = o.t_samples;
  j["radius_samples"] = o.radius_samples;
  j["r_lo"] = o.r_lo;
  j["r_hi"] = o.r_hi;
  j["cyl_grid"] = o.cyl_grid;
  j["hmax"] = o.hmax;
  j["eps"] = o.eps_override;
  j["bounds_lo"] = o.bounds_lo;
  j["bounds_hi"] = o.bounds_hi;
  j["bounds_per_decade"] = o.bounds_per_decade;
  j["grid_base"] = o.grid_base;
  j["threads"] = o.threads;
  j["tol_f"] = s.tol_f;
  j["tol_u"] = s.tol_u;
  j["tol_angle"] = s.tol_angle;
  j["max_depth"] = s.max_depth;
  j["max_evals"] = s.max_evals;
  j["newton_iters"] = s.newton_iters;
  j["face_radii"] = s.face_radii;
  return j;
}

inline ordered_json conditions_json(const ConditionReport& c) {
  using report_detail::num;
  ordered_json j;
  j["v0"] = cond_status_name(c.v0);
  j["vinf"] = cond_status_name(c.vinf);
  j["v1"] = cond_status_name(c.v1);
  j["v2"] = cond_status_name(c.v2);
  j["v3"] = cond_status_name(c.v3);
  j["ok"] = c.ok();
  j["radii"] = c.radii;
  j["v0_remainder"] = c.v0_remainder;
  j["vinf_remainder"] = c.vinf_remainder;
  j["v1_off"] = num(c.v1_off);
  j["v3_off"] = num(c.v3_off);
  j["v2_sigma_s0"] = num(c.v2_sigma_s0);
  j["v2_sigma_sinf"] = num(c.v2_sigma_sinf);
  return j;
}

inline ordered_json bounds_json(const AlphaBounds& b) {
  using report_detail::num;
  ordered_json j;
  j["alpha0"] = num(b.alpha0);
  j["alpha_inf"] = num(b.alpha_inf);
  j["alpha_tilde_inf"] = num(b.alpha_tilde_inf);
  j["eps"] = b.eps;
  j["m0"] = index_json(b.m0);
  j["m_inf"] = index_json(b.m_inf);
  ordered_json rows = ordered_json::array();
  for (const auto& p : b.profile) {
    rows.push_back(ordered_json{{"radius", num(p.radius)},
                                {"sum_min", num(p.sum_min)},
                                {"sum_max", num(p.sum_max)},
                                {"zero_rel", num(p.zero_rel)},
                                {"zero_idx", num(p.zero_idx)},
                                {"inf_idx", num(p.inf_idx)},
                                {"inf_rel", num(p.inf_rel)},
                                {"tilde", num(p.tilde)}});
  }
  j["profile"] = std::move(rows);
  return j;
}

inline ordered_json elastic_json(const ElasticBound& e) {
  using report_detail::num;
  return ordered_json{{"R_traj", num(e.R_traj)},
                      {"M_hat", num(e.M_hat)},
                      {"sup_observed", num(e.sup_observed)},
                      {"rounds", e.rounds},
                      {"exponent_capped", e.exponent_capped}};
}

inline ordered_json cylinder_json(const CylinderMaxima& cm) {
  ordered_json j;
  j["radius"] = report_detail::num(cm.radius);
  j["grid"] = cm.grid;
  j["refine_steps"] = cm.refine_steps;
  j["lambda_bar"] = report_detail::mat(cm.lambda_bar);
  j["time_dependent"] = cm.time_dependent;
  if (cm.time_dependent) {
    j["t_nodes"] = cm.t_nodes;
    j["lambda_t"] = cm.lambda_t;
  }
  return j;
}

inline ordered_json tset_json(const TSet& ts) {
  ordered_json j;
  j["m0"] = index_json(ts.m0);
  j["m_inf"] = index_json(ts.m_inf);
  j["delta_diagonal"] = report_detail::vec(ts.delta_diagonal);
  j["sigma1"] = ts.sigma1;
  j["sigma2"] = ts.sigma2;
  j["hmax"] = ts.hmax;
  ordered_json members = ordered_json::array();
  for (const auto& m : ts.members) {
    members.push_back(ordered_json{{"h", m.h.h},
                                   {"inner_j", m.h.inner_j},
                                   {"delta", report_detail::vec(m.delta)},
                                   {"margin", report_detail::num(m.margin)}});
  }
  j["members"] = std::move(members);
  j["t_truncated"] = ts.t_truncated;
  ordered_json sset = ordered_json::array();
  for (const auto& h : ts.s_set) sset.push_back(h.h);
  j["s_set"] = std::move(sset);
  j["s_truncated"] = ts.s_truncated;
  ordered_json sp = ordered_json::array();
  for (const auto& h : ts.s_prime) sp.push_back(h.h);
  j["s_prime"] = std::move(sp);
  j["s_prime_truncated"] = ts.s_prime_truncated;
  return j;
}

inline ordered_json sufficiency_json(const SufficiencyReport& s) {
  ordered_json j;
  j["cond_i"] = s.cond_i;
  j["cond_ii"] = s.cond_ii;
  j["cond_iii"] = s.cond_iii;
  j["delta_nondegenerate"] = s.delta_nondegenerate;
  j["gap_thm2"] = s.gap_thm2;
  j["theorem2"] = s.theorem2;
  j["theorem3"] = s.theorem3;
  j["delta_index"] = index_json(s.delta_index);
  j["witness_thm2"] = s.witness_thm2;
  j["witness_thm3"] = s.witness_thm3;
  return j;
}

inline ordered_json emptiness_json(const EmptinessReport& e) {
  return ordered_json{{"radial", e.radial},
                      {"radial_dev", report_detail::num(e.radial_dev)},
                      {"threshold_empty", e.threshold_empty},
                      {"implic_ok", e.implic_ok}};
}

inline ordered_json pipeline_json(const ModelPipeline& p) {
  ordered_json j;
  j["conditions"] = conditions_json(p.conditions);
  j["m0"] = index_json(p.m0);
  j["m_inf"] = index_json(p.m_inf);
  j["eps"] = p.eps;
  j["bounds"] = bounds_json(p.bounds);
  j["elastic"] = elastic_json(p.elastic);
  j["lambda_bar"] = cylinder_json(p.cm);
  j["tset"] = tset_json(p.tset);
  j["delta_index"] = index_json(p.delta_index);
  j["delta_degenerate"] = p.delta_degenerate;
  j["sufficiency"] = sufficiency_json(p.sufficiency);
  j["emptiness"] = emptiness_json(p.emptiness);
  return j;
}

inline ordered_json record_json(const SolutionRecord& r) {
  using report_detail::num;
  ordered_json j;
  j["h"] = r.h.h;
  j["orthant"] = r.orthant;
  j["alpha_star"] = report_detail::vec(r.alpha_star);
  j["residual_field"] = num(r.residual_field);
  j["residual_bvp"] = num(r.residual_bvp);
  j["certificate_dev"] = num(r.certificate_dev);
  j["theta_terminal"] = report_detail::vec(r.theta_terminal);
  j["theta_targets"] = report_detail::vec(r.theta_targets);
  j["degenerate_family"] = r.degenerate_family;
  j["evals"] = r.evals;
  return j;
}

inline ordered_json outcome_json(const OrthantOutcome& o) {
  ordered_json j;
  j["orthant"] = o.orthant;
  j["found"] = o.found;
  if (o.found) {
    j["record"] = record_json(o.record);
  } else {
    j["error"] = o.error;
    j["message"] = o.message;
    j["best_residual"] = report_detail::num(o.best_residual);
  }
  return j;
}

inline ordered_json sweep_json(const SweepResult& s) {
  ordered_json j;
  j["h"] = s.h.h;
  j["h_admissible"] = s.h_admissible;
  ordered_json recs = ordered_json::array();
  for (const auto& r : s.records) recs.push_back(record_json(r));
  j["records"] = std::move(recs);
  ordered_json ocs = ordered_json::array();
  for (const auto& o : s.outcomes) ocs.push_back(outcome_json(o));
  j["outcomes"] = std::move(ocs);
  return j;
}

inline ordered_json miranda_json(const MirandaReport& m) {
  using report_detail::num;
  ordered_json j;
  j["shell"] = ordered_json{
      {"r", m.shell.r}, {"R", m.shell.R}, {"orthant", m.shell.orthant}};
  j["h"] = m.h.h;
  j["inner_ok"] = m.inner_ok;
  j["outer_ok"] = m.outer_ok;
  j["inner_worst"] = num(m.inner_worst);
  j["outer_worst"] = num(m.outer_worst);
  j["inner_worst_at"] = report_detail::vec(m.inner_worst_at);
  j["outer_worst_at"] = report_detail::vec(m.outer_worst_at);
  ordered_json faces = ordered_json::array();
  for (const auto& f : m.faces) {
    faces.push_back(ordered_json{{"index", f.index},
                                 {"max_f", num(f.max_f)},
                                 {"min_f", num(f.min_f)},
                                 {"max_at", report_detail::vec(f.max_at)},
                                 {"min_at", report_detail::vec(f.min_at)},
                                 {"negative_ok", f.negative_ok},
                                 {"positive_ok", f.positive_ok},
                                 {"samples", f.samples}});
  }
  j["faces"] = std::move(faces);
  j["samples"] = m.samples;
  j["ok"] = m.ok();
  return j;
}

inline ordered_json error_json(const Error& e) {
  ordered_json j;
  j["error"] = errc_name(e.code);
  j["message"] = e.what();
  ordered_json d = ordered_json::object();
  for (const auto& [k, v] : e.detail) d[k] = v;
  j["detail"] = std::move(d);
  return j;
}

// The self-contained run report: analysis plus one orthant sweep per member.
inline ordered_json run_report_json(const LoadedProblem& L,
                                    const ModelPipeline& pipe,
                                    const std::vector<SweepResult>& sweeps,
                                    double seconds) {
  ordered_json j;
  j["version"] = k_tool_version;
  j["problem"] = problem_json(L.problem, L.description);
  j["options"] = options_json(L.problem.opt, L.shoot);
  j["analysis"] = pipeline_json(pipe);
  ordered_json sw = ordered_json::array();
  for (const auto& s : sweeps) sw.push_back(sweep_json(s));
  j["solutions"] = std::move(sw);
  j["timing"] = ordered_json{{"seconds", seconds}};
  return j;
}

// CSV of sorted angle curves: t, theta1_1.., theta2_1..; one row per node.
inline std::string trace_csv(const PhaseAngleTrace& trace) {
  std::string out = "t";
  char buf[40];
  for (size_t i = 0; i < trace.sorted1.size(); ++i)
    out += ",theta1_" + std::to_string(i + 1);
  for (size_t i = 0; i < trace.sorted2.size(); ++i)
    out += ",theta2_" + std::to_string(i + 1);
  out += "\n";
  const auto put = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out += buf;
  };
  for (size_t k = 0; k < trace.grid.points.size(); ++k) {
    put(trace.grid.points[k]);
    for (const auto& curve : trace.sorted1) {
      out += ',';
      put(curve[k]);
    }
    for (const auto& curve : trace.sorted2) {
      out += ',';
      put(curve[k]);
    }
    out += "\n";
  }
  return out;
}

}  // namespace indef
