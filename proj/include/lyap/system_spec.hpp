#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "lyap/expr.hpp"

namespace lyap {

/// Parsed contents of a system spec file.
///
/// Grammar (statements separated by newlines or `;`, `#` starts a comment):
///
///     dim = <int>                      state dimension n (required, first)
///     e_dim = <int>                    transverse split: x1..xk are e, rest are x
///     params a = 1.5, b = -2           named scalar parameters
///     F<i> = <expr>                    vector field component, i = 1..n
///     G<i> = <expr>                    alias for F<e_dim + i>
///     g<i> = <expr>                    control input field component
///     alpha = <expr>                   optional scaling of the input field
///     P<i><j> = <expr>                 metric entry (P<i>_<j> also accepted)
///     Q = [q11, q12, ..., qnn]         dense row-major matrix, or a scalar
///                                      (e_dim x e_dim when e_dim is set)
///
/// Expressions use x1..xn, parameters, `pi`, `e`, + - * / ^ (constant
/// exponent), sin cos exp ln sqrt abs2.
struct SystemSpec {
  int dim = 0;
  int e_dim = 0;
  std::vector<std::pair<std::string, double>> params;
  std::vector<expr::Expr> F;
  std::vector<expr::Expr> g;
  expr::Expr alpha;
  std::optional<Matrix> Q;
  /// Metric entries, empty when absent; P[i][j] for all i, j once filled.
  std::vector<std::vector<expr::Expr>> P;

  bool is_transverse() const noexcept { return e_dim > 0; }
  bool has_control() const noexcept { return !g.empty(); }
  bool has_metric() const noexcept { return !P.empty(); }

  /// Canonical text; parsing it back yields identical evaluations.
  std::string to_text() const;
};

/// Parse a spec. `overrides` replace declared parameter values.
SystemSpec parse_system_spec(std::string_view text,
                             const std::map<std::string, double>& overrides = {});

}  // namespace lyap
