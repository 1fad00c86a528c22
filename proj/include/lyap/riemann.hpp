#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "lyap/metric.hpp"
#include "lyap/types.hpp"

namespace lyap {

/// gamma[l](i, j) holds the symbol Gamma^l_ij.
using ChristoffelSymbols = std::vector<Matrix>;

/// Gamma^l_ij = 1/2 sum_m (P^-1)_lm (d_i P_mj + d_j P_mi - d_m P_ij) by
/// central differences of P with step h (default 1e-4 (1 + |e|)). The
/// horizon of a truncated metric is frozen at its value at e.
ChristoffelSymbols christoffel(const MetricField& metric, const Vector& e, double h = 0.0);

struct GeodesicPath {
  std::vector<double> s;
  std::vector<Vector> points;
  std::vector<Vector> velocities;
  /// |gamma'(s)|_P at each node.
  std::vector<double> speed;
  bool normalized = false;
  double length = 0.0;
};

struct GeodesicOptions {
  double tol = 1e-11;
  /// Christoffel step; 0 selects 1e-4 (1 + |e|).
  double christoffel_step = 0.0;
};

/// Solution of gamma'' + Gamma(gamma)[gamma', gamma'] = 0 from (e, v) over
/// s in [0, s_max]. With `normalize` v is first scaled to unit P-speed.
GeodesicPath geodesic_ivp(const MetricField& metric, const Vector& e, const Vector& v, double s_max,
                          bool normalize = false, const GeodesicOptions& opt = {});

/// Length of the polygon through `path`, each segment by composite
/// Gauss-Legendre quadrature refined until the relative change is <= 1e-8.
double riemannian_length(const MetricField& metric, const std::vector<Vector>& path);

struct DistanceValue {
  double value = 0.0;
  Vector from;
  Vector to;
  /// exact-1d, constant, single-shooting, multiple-shooting or straight-line.
  std::string method;
  double residual = 0.0;
  int iterations = 0;
  /// Only the straight-line upper bound is available.
  bool upper_bound = false;
};

struct ShootingOptions {
  int max_iterations = 30;
  /// Converged when |residual| <= tol (1 + |b - a|).
  double tol = 1e-9;
  int segments = 8;
  GeodesicOptions geodesic;
};

/// Riemannian distance between a and b. Dimension one and constant metrics
/// are handled exactly; otherwise single shooting on the initial velocity,
/// then multiple shooting, then the flagged straight-line length.
DistanceValue geodesic_distance(const MetricField& metric, const Vector& a, const Vector& b,
                                const ShootingOptions& opt = {});
/// V(e), the distance from the origin.
DistanceValue distance_to_origin(const MetricField& metric, const Vector& e, const ShootingOptions& opt = {});

/// Analytic upper bound p-(s) on the metric, NaN when not available.
double metric_upper_bound(const MetricField& metric, double s);

struct DiniEstimate {
  double V = 0.0;
  /// Extrapolated upper Dini derivative along the driver flow.
  double value = 0.0;
  /// -mu_min(Q) V / (2 sqrt(p-(|e|))), NaN without an analytic p-.
  double bound = 0.0;
  std::vector<double> h;
  std::vector<double> quotients;
  double gap = 0.0;
  bool flagged = false;
};

/// (V(E(e,h)) - V(e)) / h on h in {1e-2, 5e-3, 2.5e-3}, Richardson
/// extrapolated on the leading order. Throws NumericalError("Dini estimate
/// unreliable") when the two extrapolants differ by more than
/// 1e-3 max(1, |D|).
DiniEstimate dini_derivative_V(const MetricField& metric, const Vector& e, const ShootingOptions& opt = {});

struct ContractionCheck {
  double distance = 0.0;
  double distance_after = 0.0;
  double h = 0.0;
  double rate = 0.0;
  /// -mu_min(Q) d / (2 sqrt(p-(|e1 - e2| + |e2|))).
  double bound = 0.0;
  bool flagged = false;
};

/// Distance between e1 and e2 and its finite-h decrease along paired flows.
ContractionCheck contraction_check(const MetricField& metric, const Vector& e1, const Vector& e2, double h = 1e-2,
                                   const ShootingOptions& opt = {});

/// CSV `s,gamma_1..gamma_n,speed`.
void write_geodesic_csv(std::ostream& out, const GeodesicPath& path);
/// CSV `e_1..e_n,V,upper_bound`.
void write_distance_csv(std::ostream& out, const std::vector<DistanceValue>& values);

}  // namespace lyap
