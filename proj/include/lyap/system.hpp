#pragma once

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "lyap/expr.hpp"
#include "lyap/jet.hpp"
#include "lyap/system_spec.hpp"
#include "lyap/types.hpp"

namespace lyap {

/// An autonomous vector field e' = F(e) with first and (optionally) second
/// derivatives. Copies share the immutable evaluator.
class SystemModel {
 public:
  /// Writes F(x) into f and, when J is non-null, the Jacobian into *J.
  using Evaluator = std::function<void(const Vector& x, Vector& f, Matrix* J)>;
  /// One second-order jet per component.
  using JetEvaluator = std::function<std::vector<Jet2<double>>(const Vector& x)>;

  SystemModel() = default;
  SystemModel(std::string name, int dim, Evaluator eval, JetEvaluator jets = {}, int smoothness = 1);

  /// Field given by one expression per component.
  static SystemModel from_expressions(std::string name, std::vector<expr::Expr> components);
  /// e' = A e.
  static SystemModel linear(std::string name, const Matrix& A);

  const std::string& name() const noexcept { return name_; }
  int dim() const noexcept { return dim_; }
  /// Number of continuous derivatives (1..4).
  int smoothness() const noexcept { return smoothness_; }
  bool has_jets() const noexcept { return static_cast<bool>(jets_); }
  bool valid() const noexcept { return static_cast<bool>(eval_); }

  void evaluate(const Vector& x, Vector& f, Matrix& J) const { eval_(x, f, &J); }
  void evaluate(const Vector& x, Vector& f) const { eval_(x, f, nullptr); }
  Vector field(const Vector& x) const;
  Matrix jacobian(const Vector& x) const;
  std::vector<Jet2<double>> jets(const Vector& x) const;

  /// Source expressions when built from text, else empty.
  const std::vector<expr::Expr>& expressions() const noexcept { return exprs_; }

  /// Throws NumericalError unless |F(0)| <= tol.
  void require_equilibrium(double tol = 1e-12) const;

 private:
  std::string name_;
  int dim_ = 0;
  int smoothness_ = 1;
  Evaluator eval_;
  JetEvaluator jets_;
  std::vector<expr::Expr> exprs_;
};

/// Parse spec text into a model of all declared components.
SystemModel parse_system(std::string_view spec_text, const std::map<std::string, double>& overrides = {});
/// Model of the components of an already parsed spec.
SystemModel make_system(const SystemSpec& spec, std::string name = "spec");

/// One jet per component, computed by forward-mode AD.
std::vector<Jet2<double>> eval_jet2(const SystemModel& model, const Vector& point);

/// Coupled system e' = F(e,x), x' = G(e,x) with the manifold {e = 0} invariant.
/// Stored as a single field on (e, x) with e first.
class TransverseModel {
 public:
  TransverseModel() = default;
  TransverseModel(SystemModel full, int e_dim);

  const SystemModel& full() const noexcept { return full_; }
  int e_dim() const noexcept { return e_dim_; }
  int x_dim() const noexcept { return full_.dim() - e_dim_; }

  Vector join(const Vector& e, const Vector& x) const;
  Vector F(const Vector& e, const Vector& x) const;
  Vector G(const Vector& e, const Vector& x) const;
  Matrix dF_de(const Vector& e, const Vector& x) const;
  Matrix dF_dx(const Vector& e, const Vector& x) const;
  Matrix dG_de(const Vector& e, const Vector& x) const;
  Matrix dG_dx(const Vector& e, const Vector& x) const;

  /// The e-subsystem with x frozen at a value: e' = F(e, x).
  SystemModel frozen_at(const Vector& x) const;
  /// The x-dynamics on the manifold: x' = G(0, x).
  SystemModel manifold_dynamics() const;

  /// Throws NumericalError unless |F(0,x)| <= tol at each sample.
  void require_invariance(const std::vector<Vector>& xs, double tol = 1e-12) const;

 private:
  SystemModel full_;
  int e_dim_ = 0;
};

TransverseModel make_transverse(const SystemSpec& spec, std::string name = "spec");

/// Single-input control system w' = f(w) + alpha(w) g(w) u.
struct ControlSystem {
  SystemModel drift;
  /// The input field, already multiplied by alpha when one was given.
  SystemModel input;
};

ControlSystem make_control_system(const SystemSpec& spec, std::string name = "spec");
/// The field alpha(w) g(w). An empty alpha returns g unchanged.
SystemModel scaled_field(const SystemModel& g, const expr::Expr& alpha);

}  // namespace lyap
