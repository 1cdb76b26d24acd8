#pragma once

// Line-oriented problem files: [section] headers, key = value pairs, and
// matrix literals as bracketed rows. Zero-dependency parsing, human-diffable.
//
//   # comment
//   [problem]
//   n = 2
//   nu = 1
//   S = [5 + tanh(r^2), 0]
//       [0, -50]
//   S0 = [5, 0]
//        [0, -50]
//   Sinf = [7, 0]
//          [0, -47]
//   [options]
//   hmax = 32
//   [meta]
//   name = example
//
// n and nu must appear before any matrix so row counts are known up front.
// Off-diagonal asymptote entries must be the literal constant 0.

#include <indef/model.hpp>
#include <indef/shooting.hpp>

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace indef {

struct LoadedProblem {
  NonlinearProblem problem;
  ShootOptions shoot;
  std::string description;
};

namespace detail {

inline Error parse_fail(const std::string& msg, int line, int col = 1) {
  return Error(errc::parse_error, msg)
      .with("line", (long long)line)
      .with("column", (long long)col);
}

inline std::string strip(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return {};
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

// Split a bracketed row into top-level comma-separated entries.
inline std::vector<std::string> split_row(const std::string& row, int line) {
  const std::string body = strip(row);
  if (body.size() < 2 || body.front() != '[' || body.back() != ']')
    throw parse_fail("matrix row must be enclosed in brackets", line);
  std::vector<std::string> out;
  std::string cur;
  int depth = 0;
  for (size_t i = 1; i + 1 < body.size(); ++i) {
    const char c = body[i];
    if (c == '(') ++depth;
    if (c == ')') --depth;
    if (c == '[' || c == ']')
      throw parse_fail("nested brackets are not allowed in matrix rows", line,
                       int(i) + 1);
    if (c == ',' && depth == 0) {
      out.push_back(strip(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(strip(cur));
  for (const auto& e : out)
    if (e.empty()) throw parse_fail("empty matrix entry", line);
  return out;
}

inline Expr parse_entry(const std::string& text, int n, int line) {
  Expr e;
  try {
    e = parse_expr(text);
  } catch (const Error& err) {
    throw Error(errc::parse_error, std::string("bad expression: ") + err.what())
        .with("line", (long long)line)
        .with("entry", text);
  }
  if (e.max_x_index() > n)
    throw Error(errc::unknown_identifier,
                "coordinate index exceeds the problem dimension")
        .with("line", (long long)line)
        .with("entry", text)
        .with("n", (long long)n);
  return e;
}

}  // namespace detail

inline LoadedProblem load_problem_text(const std::string& text,
                                       const std::string& origin = {}) {
  std::istringstream in(text);
  std::string raw;
  int lineno = 0;

  std::string section;
  int n = -1, nu = -1;
  std::vector<std::vector<Expr>> S;
  std::vector<std::vector<Expr>> S0m, Sim;
  bool have_s = false, have_s0 = false, have_si = false;
  std::string pending_matrix;  // which matrix is collecting rows
  int pending_rows = 0;
  ProblemOptions opt;
  ShootOptions shoot;
  std::string name = origin, description;
  std::vector<std::string> seen;

  const auto mark_seen = [&](const std::string& key, int line) {
    for (const auto& s : seen)
      if (s == key) throw detail::parse_fail("duplicate key: " + key, line);
    seen.push_back(key);
  };

  const auto target_matrix = [&](const std::string& key)
      -> std::vector<std::vector<Expr>>* {
    if (key == "S") return &S;
    if (key == "S0") return &S0m;
    if (key == "Sinf") return &Sim;
    return nullptr;
  };

  // `key` by value: completion clears pending_matrix, which the caller passes
  const auto add_row = [&](std::string key, const std::string& rowtext,
                           int line) {
    auto entries = detail::split_row(rowtext, line);
    if (int(entries.size()) != n)
      throw Error(errc::dimension_mismatch,
                  key + " row does not have n entries")
          .with("line", (long long)line)
          .with("expected", (long long)n)
          .with("got", (long long)entries.size());
    std::vector<Expr> row;
    for (const auto& e : entries) row.push_back(detail::parse_entry(e, n, line));
    auto* m = target_matrix(key);
    m->push_back(std::move(row));
    if (int(m->size()) == n) {
      pending_matrix.clear();
      pending_rows = 0;
      if (key == "S") have_s = true;
      if (key == "S0") have_s0 = true;
      if (key == "Sinf") have_si = true;
    } else {
      pending_matrix = key;
      pending_rows = n - int(m->size());
    }
  };

  const auto set_option = [&](const std::string& key, const std::string& value,
                              int line) {
    const auto num = [&]() -> double {
      try {
        size_t pos = 0;
        double v = std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument("trailing");
        return v;
      } catch (...) {
        throw detail::parse_fail("option " + key + " needs a number", line);
      }
    };
    const auto integer = [&]() -> long long {
      double v = num();
      long long k = (long long)std::llround(v);
      if (double(k) != v)
        throw detail::parse_fail("option " + key + " needs an integer", line);
      return k;
    };
    if (key == "tol_ode") opt.tol_ode = num();
    else if (key == "tol_nd") opt.tol_nd = num();
    else if (key == "tol_pattern") opt.tol_pattern = num();
    else if (key == "tol_heur") opt.tol_heur = num();
    else if (key == "t_samples") opt.t_samples = int(integer());
    else if (key == "radius_samples") opt.radius_samples = int(integer());
    else if (key == "r_lo") opt.r_lo = num();
    else if (key == "r_hi") opt.r_hi = num();
    else if (key == "cyl_grid") opt.cyl_grid = int(integer());
    else if (key == "hmax") opt.hmax = int(integer());
    else if (key == "eps") opt.eps_override = num();
    else if (key == "bounds_lo") opt.bounds_lo = num();
    else if (key == "bounds_hi") opt.bounds_hi = num();
    else if (key == "bounds_per_decade") opt.bounds_per_decade = int(integer());
    else if (key == "grid_base") opt.grid_base = int(integer());
    else if (key == "threads") opt.threads = int(integer());
    else if (key == "tol_f") shoot.tol_f = num();
    else if (key == "tol_u") shoot.tol_u = num();
    else if (key == "tol_angle") shoot.tol_angle = num();
    else if (key == "max_depth") shoot.max_depth = int(integer());
    else if (key == "max_evals") shoot.max_evals = integer();
    else if (key == "newton_iters") shoot.newton_iters = int(integer());
    else if (key == "face_radii") shoot.face_radii = int(integer());
    else throw detail::parse_fail("unknown option: " + key, line);
  };

  while (std::getline(in, raw)) {
    ++lineno;
    const size_t hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    const std::string line = detail::strip(raw);
    if (line.empty()) continue;

    if (line.front() == '[') {
      // either a matrix continuation row or a section header
      if (!pending_matrix.empty()) {
        add_row(pending_matrix, line, lineno);
        continue;
      }
      if (line.back() != ']')
        throw detail::parse_fail("unterminated section header", lineno);
      const std::string sec = detail::strip(line.substr(1, line.size() - 2));
      if (sec != "problem" && sec != "options" && sec != "meta")
        throw detail::parse_fail("unknown section: [" + sec + "]", lineno);
      section = sec;
      continue;
    }
    if (!pending_matrix.empty())
      throw detail::parse_fail(
          "matrix " + pending_matrix + " is missing " +
              std::to_string(pending_rows) + " row(s)",
          lineno);

    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw detail::parse_fail("expected key = value", lineno);
    const std::string key = detail::strip(line.substr(0, eq));
    const std::string value = detail::strip(line.substr(eq + 1));
    if (key.empty()) throw detail::parse_fail("empty key", lineno);
    if (section.empty())
      throw detail::parse_fail("key outside any [section]", lineno);

    if (section == "problem") {
      mark_seen("problem." + key, lineno);
      if (key == "n" || key == "nu") {
        long long v;
        try {
          size_t pos = 0;
          v = std::stoll(value, &pos);
          if (pos != value.size()) throw std::invalid_argument("trailing");
        } catch (...) {
          throw detail::parse_fail(key + " needs an integer", lineno);
        }
        if (key == "n") n = int(v);
        else nu = int(v);
      } else if (key == "S" || key == "S0" || key == "Sinf") {
        if (n < 1)
          throw detail::parse_fail("n must be set before matrix " + key,
                                   lineno);
        if (value.empty() || value.front() != '[')
          throw detail::parse_fail(key + " needs bracketed rows", lineno);
        add_row(key, value, lineno);
      } else {
        throw detail::parse_fail("unknown problem key: " + key, lineno);
      }
    } else if (section == "options") {
      mark_seen("options." + key, lineno);
      set_option(key, value, lineno);
    } else {  // meta
      mark_seen("meta." + key, lineno);
      if (key == "name") name = value;
      else if (key == "description") description = value;
      else throw detail::parse_fail("unknown meta key: " + key, lineno);
    }
  }

  if (!pending_matrix.empty())
    throw detail::parse_fail("unexpected end of file inside matrix " +
                                 pending_matrix,
                             lineno);
  if (n < 1 || nu < 0)
    throw detail::parse_fail("problem requires n and nu", lineno);
  if (!have_s) throw detail::parse_fail("problem requires S", lineno);
  if (!have_s0 || !have_si)
    throw detail::parse_fail("problem requires S0 and Sinf", lineno);

  // asymptotes must be diagonal: off-diagonal entries literal 0
  const auto diag_of = [&](const std::vector<std::vector<Expr>>& m,
                           const char* which) {
    std::vector<Expr> d;
    for (int i = 0; i < n; ++i) {
      for (int k = 0; k < n; ++k) {
        if (i == k) continue;
        const Expr& e = m[size_t(i)][size_t(k)];
        if (!(e.kind == Expr::Kind::num && e.value == 0.0))
          throw Error(errc::non_diagonal_asymptote,
                      std::string(which) + " must be diagonal")
              .with("row", (long long)i + 1)
              .with("column", (long long)k + 1);
      }
      d.push_back(m[size_t(i)][size_t(i)]);
    }
    return d;
  };

  LoadedProblem out;
  out.shoot = shoot;
  out.description = description;
  out.problem = make_problem_exprs(Signature{n, nu}, std::move(S),
                                   diag_of(S0m, "S0"), diag_of(Sim, "Sinf"),
                                   opt, name);
  return out;
}

inline LoadedProblem load_problem_file(const std::string& path) {
  std::ifstream f(path);
  if (!f)
    throw Error(errc::bad_request, "cannot open problem file").with("path", path);
  std::ostringstream buf;
  buf << f.rdbuf();
  std::string base = path;
  const size_t slash = base.find_last_of('/');
  if (slash != std::string::npos) base = base.substr(slash + 1);
  const size_t dot = base.find_last_of('.');
  if (dot != std::string::npos) base = base.substr(0, dot);
  return load_problem_text(buf.str(), base);
}

// The documented operation form: path in, validated problem out.
inline NonlinearProblem load_problem(const std::string& path) {
  return load_problem_file(path).problem;
}

}  // namespace indef
