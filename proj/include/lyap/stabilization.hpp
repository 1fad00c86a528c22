#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "lyap/metric.hpp"
#include "lyap/system.hpp"
#include "lyap/types.hpp"

namespace lyap {

/// Metric from the P entries of a spec, constant when no entry depends on
/// the state. The Lie derivative is taken along `driver`.
MetricField spec_metric(const SystemSpec& spec, const SystemModel& driver, const Matrix& Q);

struct KillingResidual {
  /// L_g P(w) = d_g P + P dg + dg^T P.
  Matrix L;
  double norm = 0.0;
};

/// Lie derivative of the metric along g, the derivative of P taken by
/// differencing along the flow of g.
KillingResidual killing_residual(const MetricField& metric, const SystemModel& g, const Vector& w, double h = 0.0);

struct ClosednessResidual {
  /// Largest entry of D - D^T with D(i, j) = d omega_i / d w_j.
  double value = 0.0;
  Matrix D;
};

/// Central-difference test of d omega = 0 for omega = (P g)^T at w.
ClosednessResidual closedness_residual(const MetricField& metric, const SystemModel& g, const Vector& w,
                                       double h = 1e-5);

/// omega(w) = P(w) g(w).
Vector one_form(const MetricField& metric, const SystemModel& g, const Vector& w);

/// U(w) = int_0^1 omega(w0 + t (w - w0)) . (w - w0) dt by refined
/// Gauss-Legendre quadrature. U(w0) = 0.
double construct_U(const MetricField& metric, const SystemModel& g, const Vector& w, const Vector& w0);
/// Same integral along the two legs w0 -> (w_1, w0_2, ..) -> w, one
/// coordinate at a time.
double construct_U_axis_path(const MetricField& metric, const SystemModel& g, const Vector& w, const Vector& w0);

struct StabilizationOptions {
  /// Killing and hypothesis residual tolerance.
  double tol = 1e-8;
  /// Tolerance on the antisymmetrized derivative of omega.
  double closedness_tol = 1e-6;
  /// Tolerance on the closed-loop decrease L_F P + Q <= tol.
  double decrease_tol = 1e-6;
};

struct ControllerCertificate {
  double lambda = 0.0;
  /// sup |L_g P|.
  double killing_sup = 0.0;
  /// sup of the closedness residual of omega.
  double integrability_sup = 0.0;
  /// sup of max eig(L_f P - lambda (P g)(P g)^T + Q).
  double hypothesis_sup = 0.0;
  /// sup of max eig(L_F P + Q) for the closed loop.
  double closed_loop_sup = 0.0;
  /// sup |L_F P - (L_f P - lambda U L_g P - 2 lambda (P g)(P g)^T)|.
  double identity_gap = 0.0;
  /// 0 when every condition holds, else the first failing one: 1 the
  /// matrix inequality, 2 the Killing property, 3 integrability, 4 the
  /// closed-loop decrease.
  int failed_condition = 0;
  Vector witness;
  bool pass = false;
  std::vector<Vector> samples;
};

/// Closed-loop controller with u = -lambda U(w), U(0) = 0.
struct Controller {
  SystemModel closed_loop;
  ControllerCertificate certificate;
  std::function<double(const Vector&)> U;
  /// Closed-loop spec text when U has a closed form (constant P and affine
  /// g), else empty.
  std::string spec_text;
};

/// Checks the three hypotheses of the stabilization result on `samples`,
/// builds U and the closed loop F = f - lambda g U, and verifies
/// L_F P <= -Q on the samples. Returns nullopt in `controller` with the
/// certificate filled when a hypothesis fails.
struct SynthesisResult {
  ControllerCertificate certificate;
  std::optional<Controller> controller;
};
SynthesisResult synthesize_controller(const ControlSystem& system, const MetricField& metric, double lambda,
                                      const Matrix& Q, const std::vector<Vector>& samples,
                                      const StabilizationOptions& opt = {});

/// CSV `w_1..w_n,U` over the tensor grid with `points` nodes per axis on
/// [lower, upper]; U between nodes is read by multilinear interpolation.
void write_controller_table(std::ostream& out, const Controller& c, const Vector& lower, const Vector& upper,
                            int points);

}  // namespace lyap
