#pragma once

#include <iosfwd>
#include <utility>
#include <vector>

#include "lyap/ode.hpp"
#include "lyap/system.hpp"
#include "lyap/types.hpp"

namespace lyap {

struct FlowOptions {
  double tol = 1e-10;
  double blowup = 1e8;
};

/// Time-stamped solution with dense output. The integrated vector is laid
/// out as [state, aux, vec(Phi)] with Phi stored column-major.
class Trajectory {
 public:
  Trajectory() = default;
  Trajectory(int dim, int aux_dim, int phi_dim);

  int dim() const noexcept { return dim_; }
  int aux_dim() const noexcept { return aux_; }
  int phi_dim() const noexcept { return phi_; }
  bool has_phi() const noexcept { return phi_ > 0; }

  std::size_t size() const noexcept { return times_.size(); }
  const std::vector<double>& times() const noexcept { return times_; }
  double t_end() const { return times_.back(); }

  Vector node_state(std::size_t k) const { return nodes_[k].head(dim_); }
  Vector node_aux(std::size_t k) const { return nodes_[k].segment(dim_, aux_); }
  Matrix node_phi(std::size_t k) const;

  /// Dense-output values at any t in [0, t_end].
  Vector state(double t) const { return raw(t).head(dim_); }
  Vector aux(double t) const { return raw(t).segment(dim_, aux_); }
  Matrix phi(double t) const;

  Vector final_state() const { return node_state(size() - 1); }
  Matrix final_phi() const { return node_phi(size() - 1); }

  /// Tolerance times the largest accepted scaled local error.
  double error_estimate() const noexcept { return error_; }

  /// CSV `t,e_1..e_n[,phi_11..phi_nn]`, 17 significant digits, one row per node.
  void write_csv(std::ostream& out) const;

  // Builders used by the integrators.
  void push_node(double t, const Vector& y) {
    times_.push_back(t);
    nodes_.push_back(y);
  }
  void push_step(double t0, double h, const DormandPrince<double>& stepper);
  void set_error(double e) noexcept { error_ = e; }

 private:
  Vector raw(double t) const;

  int dim_ = 0;
  int aux_ = 0;
  int phi_ = 0;
  std::vector<double> times_;
  std::vector<Vector> nodes_;
  std::vector<double> step_t0_;
  std::vector<double> step_h_;
  std::vector<Matrix> step_coeff_;
  double error_ = 0.0;
};

/// Solution of e' = F(e) from e0 over [0, T].
Trajectory flow(const SystemModel& model, const Vector& e0, double T, double tol = 1e-10);
Trajectory flow(const SystemModel& model, const Vector& e0, double T, const FlowOptions& opt);

/// State together with the transition matrix Phi' = dF/de(E) Phi, Phi(0) = I.
Trajectory variational_flow(const SystemModel& model, const Vector& e0, double T, double tol = 1e-10);
Trajectory variational_flow(const SystemModel& model, const Vector& e0, double T, const FlowOptions& opt);

/// Transverse flow: state (E, X) of the full coupled system, aux X~ driven by
/// G(0, x), and Phi' = dF/de(0, X~) Phi.
Trajectory transverse_flow(const TransverseModel& model, const Vector& e0, const Vector& x0, double T,
                           double tol = 1e-10);
Trajectory transverse_flow(const TransverseModel& model, const Vector& e0, const Vector& x0, double T,
                           const FlowOptions& opt);

/// Endpoint-only variants that store nothing.
Vector flow_endpoint(const SystemModel& model, const Vector& e0, double T, const FlowOptions& opt = {});
std::pair<Vector, Matrix> variational_endpoint(const SystemModel& model, const Vector& e0, double T,
                                               const FlowOptions& opt = {});

}  // namespace lyap
