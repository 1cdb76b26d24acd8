#pragma once

// Built-in problems, embedded as verbatim problem-file text.  The same bytes
// live under problems/ in the source tree; a unit test keeps the two in sync.

#include <indef/problem_io.hpp>

#include <array>
#include <string>

namespace indef {

struct BuiltinProblem {
  const char* name;
  const char* text;
};

namespace builtin_text_detail {

inline constexpr const char* family = R"PROB(# Saturating plateaus with a Gaussian dip carved along each axis: every
# coordinate hyperplane sees the other entry's plateau, which drives the
# comparison maxima high enough to open the admissibility window.
[problem]
n = 2
nu = 1
S = [5 + tanh(r^2)*(235 - 100*exp(-(x1/0.25)^2)), 0]
    [0, -50 + tanh(r^2)*(42 - 35*exp(-(x2/0.25)^2))]
S0 = [5, 0]
     [0, -50]
Sinf = [240, 0]
       [0, -8]

[meta]
name = family
description = sigmoid family between diag(5, -50) and diag(240, -8); one admissible nodal type, (4, 2)
)PROB";

inline constexpr const char* resonant = R"PROB(# Constant coefficients pinned to the Dirichlet spectrum: u'' + 4 pi^2 u = 0
# has the eigenfunction sin(2 pi t), so for h = (2, 2) every point of the
# cone is a zero of the shooting field and the nondegeneracy check fails.
[problem]
n = 2
nu = 1
S = [39.478417604357432, 0]
    [0, -39.478417604357432]
S0 = [39.478417604357432, 0]
     [0, -39.478417604357432]
Sinf = [39.478417604357432, 0]
       [0, -39.478417604357432]

[meta]
name = resonant
description = resonant constant system diag(4 pi^2, -4 pi^2); degenerate zero families
)PROB";

inline constexpr const char* constant = R"PROB(# Constant strongly indefinite diagonal system, safely off the Dirichlet
# spectrum.  Linear, hence radially symmetric and without admissible types.
[problem]
n = 2
nu = 1
S = [50, 0]
    [0, -50]
S0 = [50, 0]
     [0, -50]
Sinf = [50, 0]
       [0, -50]

[meta]
name = constant
description = constant diagonal system diag(50, -50)
)PROB";

inline constexpr const char* split_fail = R"PROB(# Cross-block coupling: the off-diagonal 1 breaks the splitting pattern,
# so the structural checks report failures instead of a clean bill.
[problem]
n = 2
nu = 1
S = [5, 1]
    [1, -50]
S0 = [5, 0]
     [0, -50]
Sinf = [5, 0]
       [0, -50]

[meta]
name = split-fail
description = constant system with cross-block coupling; the splitting checks fail
)PROB";

inline constexpr const char* nondegenerate_fail = R"PROB(# The first diagonal entry sits exactly on the Dirichlet eigenvalue pi^2,
# so the terminal fundamental blocks are singular and nondegeneracy fails.
[problem]
n = 2
nu = 1
S = [9.869604401089358, 0]
    [0, -5]
S0 = [9.869604401089358, 0]
     [0, -5]
Sinf = [9.869604401089358, 0]
       [0, -5]

[meta]
name = nondegenerate-fail
description = asymptote pinned to the Dirichlet eigenvalue pi^2; nondegeneracy fails
)PROB";

inline constexpr const char* radial_n2_nu1 = R"PROB(# Radially symmetric: S depends on x through |x| only, so no nodal type
# is admissible and the emptiness analysis raises the radial flag.
[problem]
n = 2
nu = 1
S = [5 + 2*tanh(r^2), 0]
    [0, -50 + 3*tanh(r^2)]
S0 = [5, 0]
     [0, -50]
Sinf = [7, 0]
       [0, -47]

[meta]
name = radial-n2-nu1
description = radial profile between diag(5, -50) and diag(7, -47)
)PROB";

inline constexpr const char* radial_n2_nu0 = R"PROB(# Radially symmetric and positive definite (nu = 0).
[problem]
n = 2
nu = 0
S = [5 + 10*tanh(r^2), 0]
    [0, 30 + 15*tanh(r^2)]
S0 = [5, 0]
     [0, 30]
Sinf = [15, 0]
       [0, 45]

[meta]
name = radial-n2-nu0
description = radial positive-definite profile between diag(5, 30) and diag(15, 45)
)PROB";

inline constexpr const char* radial_n2_nu2 = R"PROB(# Radially symmetric and negative definite (nu = n).
[problem]
n = 2
nu = 2
S = [-50 + 5*tanh(r^2), 0]
    [0, -30 + 10*tanh(r^2)]
S0 = [-50, 0]
     [0, -30]
Sinf = [-45, 0]
       [0, -20]

[meta]
name = radial-n2-nu2
description = radial negative-definite profile between diag(-50, -30) and diag(-45, -20)
)PROB";

inline constexpr const char* radial_n3_nu1 = R"PROB(# Radially symmetric in dimension three, one negative direction.
[problem]
n = 3
nu = 1
S = [5 + 2*tanh(r^2), 0, 0]
    [0, 30 + 5*tanh(r^2), 0]
    [0, 0, -50 + 3*tanh(r^2)]
S0 = [5, 0, 0]
     [0, 30, 0]
     [0, 0, -50]
Sinf = [7, 0, 0]
       [0, 35, 0]
       [0, 0, -47]

[meta]
name = radial-n3-nu1
description = radial profile between diag(5, 30, -50) and diag(7, 35, -47)
)PROB";

inline constexpr const char* radial_n3_nu2 = R"PROB(# Radially symmetric in dimension three, two negative directions.
[problem]
n = 3
nu = 2
S = [15 + 10*tanh(r^2), 0, 0]
    [0, -30 + 5*tanh(r^2), 0]
    [0, 0, -60 + 8*tanh(r^2)]
S0 = [15, 0, 0]
     [0, -30, 0]
     [0, 0, -60]
Sinf = [25, 0, 0]
       [0, -25, 0]
       [0, 0, -52]

[meta]
name = radial-n3-nu2
description = radial profile between diag(15, -30, -60) and diag(25, -25, -52)
)PROB";

}  // namespace builtin_text_detail

inline const std::array<BuiltinProblem, 10>& builtin_problems() {
  static const std::array<BuiltinProblem, 10> table = {{
      {"family", builtin_text_detail::family},
      {"resonant", builtin_text_detail::resonant},
      {"constant", builtin_text_detail::constant},
      {"split-fail", builtin_text_detail::split_fail},
      {"nondegenerate-fail", builtin_text_detail::nondegenerate_fail},
      {"radial-n2-nu0", builtin_text_detail::radial_n2_nu0},
      {"radial-n2-nu1", builtin_text_detail::radial_n2_nu1},
      {"radial-n2-nu2", builtin_text_detail::radial_n2_nu2},
      {"radial-n3-nu1", builtin_text_detail::radial_n3_nu1},
      {"radial-n3-nu2", builtin_text_detail::radial_n3_nu2},
  }};
  return table;
}

inline const char* builtin_problem_text(const std::string& name) {
  for (const auto& b : builtin_problems())
    if (name == b.name) return b.text;
  return nullptr;
}

inline LoadedProblem load_builtin(const std::string& name) {
  if (const char* text = builtin_problem_text(name))
    return load_problem_text(text, name);
  std::string have;
  for (const auto& b : builtin_problems()) {
    if (!have.empty()) have += ", ";
    have += b.name;
  }
  throw Error(errc::unknown_identifier, "no such built-in problem")
      .with("name", name)
      .with("available", have);
}

// "builtin:<name>" selects an embedded problem; anything else is a file path.
inline LoadedProblem resolve_problem(const std::string& spec) {
  const std::string prefix = "builtin:";
  if (spec.rfind(prefix, 0) == 0) return load_builtin(spec.substr(prefix.size()));
  return load_problem_file(spec);
}

}  // namespace indef
