#pragma once

#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "lyap/system_spec.hpp"
#include "lyap/types.hpp"

namespace lyap::catalog {

/// A built-in system together with the oracle used to check it. Oracles here
/// share no numerical code with the library paths they check.
struct Entry {
  std::string name;
  std::string spec_text;
  std::string oracle_kind;  // "implicit closed form", "nested quadrature", "linear algebra", "hand computation"
  std::map<std::string, double> defaults;
  double tolerance = 1e-6;
  double default_horizon = 20.0;
  std::string description;
};

const std::vector<Entry>& entries();
/// Throws Error for unknown names.
const Entry& find(std::string_view name);

/// Resolve a `--system` argument: a catalog name, `linear:<json file>` or a
/// spec file path. Returns the spec text and a display name.
struct Resolved {
  std::string name;
  std::string spec_text;
  double default_horizon = 20.0;
};
Resolved resolve(std::string_view system_arg);

/// Spec text of e' = A e.
std::string linear_spec_text(const Matrix& A);
/// Read {"A": [[...], ...]} from a JSON file.
Matrix read_linear_matrix(const std::string& path);

// ---------------------------------------------------------------------------
// Oracles

/// Root of y exp(y) = c for c >= 0 by safeguarded Newton.
double solve_y_exp_y(double c);

/// Scalar example e' = -e/(1+e^2): E(e,t) from E^2 exp(E^2) = e^2 exp(e^2) exp(-2t).
double scalar_example_oracle(double e, double t);

/// Closed form of the scalar example's Gramian metric with Q = q.
double scalar_example_metric(double e, double q = 1.0);
/// Same quantity from nested adaptive Gauss-Kronrod quadrature of
/// exp(2 int_0^s F'(E(e,r)) dr), truncated at `horizon`.
double scalar_example_metric_quadrature(double e, double q = 1.0, double horizon = 60.0);

/// Planar counterexample e' = -(lam + x sin x) e, x' = mu x.
struct CounterexampleValue {
  double E;
  double X;
  /// Transverse transition factor exp(-lam t + (cos X - cos x0)/mu).
  double phi;
  /// e-component of the variation for the given (de0, dx0).
  double dE;
};
CounterexampleValue counterexample_oracle(double e0, double x0, double t, double lam, double mu,
                                          double de0 = 0.0, double dx0 = 0.0);
/// phi from direct adaptive quadrature of the rate along X(s) = x0 exp(mu s).
double counterexample_phi_quadrature(double x0, double t, double lam, double mu);

/// P and exp(A t) for e' = A e computed by a Kronecker-product linear solve
/// and scaling-and-squaring.
struct LinearBaseline {
  Matrix A;
  Matrix P;
  Matrix expm(double t) const;
};
LinearBaseline linear_baseline(const Matrix& A, const Matrix& Q);

/// Adaptive Gauss-Kronrod (7, 15) quadrature.
double gauss_kronrod(const std::function<double(double)>& f, double a, double b, double tol = 1e-12,
                     int max_depth = 40);

}  // namespace lyap::catalog
