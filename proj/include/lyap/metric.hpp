#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string_view>
#include <vector>

#include "lyap/estimation.hpp"
#include "lyap/system.hpp"
#include "lyap/types.hpp"

namespace lyap {

enum class MetricVariant { constant, origin, along_solutions, transverse, rescaled, custom };

std::string_view variant_name(MetricVariant v);
/// origin, along-solutions, transverse or rescaled.
MetricVariant parse_variant(std::string_view name);

struct MetricOptions {
  /// Bound on the neglected tail of the Gramian integral.
  double tail_tol = 1e-9;
  double ode_tol = 1e-11;
  /// Largest admissible truncation horizon.
  double horizon_cap = 200.0;
  /// Chunk length of the adaptive horizon search of the rescaled variant.
  double chunk = 10.0;
  /// Horizon cap of the rescaled variant, in rescaled time.
  double rescaled_cap = 2000.0;
};

/// One evaluation of a metric.
struct MetricValue {
  Matrix P;
  /// Truncation horizon T (0 for closed-form metrics).
  double horizon = 0.0;
  /// Bound on |P_infinity - P_T| (an estimate for the rescaled variant).
  double tail = 0.0;
  /// Phi(T)^T Q Phi(T). With T held fixed the Lie-derivative residual of
  /// the truncated integral equals this matrix.
  Matrix terminal;
  /// Largest |J| seen on the integration nodes.
  double jacobian_sup = 0.0;
};

/// A symmetric matrix function p -> P(p) together with the flow along which
/// its directional derivative is taken and the Jacobian entering the
/// congruence terms of the Lie derivative.
class MetricField {
 public:
  /// T <= 0 lets the metric choose its own horizon.
  using Evaluator = std::function<MetricValue(const Vector& p, double T)>;
  using JacobianFn = std::function<Matrix(const Vector& p)>;

  struct Parts {
    MetricVariant variant = MetricVariant::custom;
    Matrix Q;
    /// e' = F(e), or x' = G(0, x) for the transverse variant.
    SystemModel driver;
    Evaluator eval;
    JacobianFn jacobian;
    /// Residual right side scaled by 1 + |J|^3.
    bool weighted = false;
    /// P does not depend on the point.
    bool constant = false;
    std::optional<DecayEstimate> decay;
    MetricOptions options;
  };

  MetricField() = default;
  explicit MetricField(Parts parts);

  MetricVariant variant() const noexcept { return parts_.variant; }
  int dim() const noexcept { return static_cast<int>(parts_.Q.rows()); }
  /// Dimension of the point p (x_dim for the transverse variant).
  int point_dim() const noexcept { return parts_.driver.dim(); }
  const Matrix& Q() const noexcept { return parts_.Q; }
  const SystemModel& driver() const noexcept { return parts_.driver; }
  const std::optional<DecayEstimate>& decay() const noexcept { return parts_.decay; }
  const MetricOptions& options() const noexcept { return parts_.options; }
  bool is_constant() const noexcept { return parts_.constant; }
  bool weighted() const noexcept { return parts_.weighted; }

  MetricValue at(const Vector& p, double T = 0.0) const;
  Matrix operator()(const Vector& p) const { return at(p).P; }
  Matrix jacobian(const Vector& p) const { return parts_.jacobian(p); }
  /// 1 + |J(p)|^3 for the rescaled variant, else 1.
  double weight(const Vector& p) const;
  /// The same P(p) with its Lie derivative taken along `driver` (unweighted).
  MetricField with_driver(const SystemModel& driver) const;

 private:
  Parts parts_;
};

/// Symmetric positive definite check used for user supplied Q.
void require_positive_definite(const Matrix& Q, const char* what = "Q");

/// P = int_0^inf exp(A^T s) Q exp(A s) ds by composite Gauss-Legendre
/// quadrature over a horizon set by the spectral abscissa of A, then
/// polished by Schur-based correction steps until |A^T P + P A + Q| <= 1e-8.
/// Throws Falsified when A is not Hurwitz.
Matrix gramian_matrix(const Matrix& A, const Matrix& Q);

/// Constant metric from the linearization at the origin.
MetricField origin_metric(const SystemModel& model, const Matrix& Q);
/// Constant user metric; the Lie derivative is taken along `model`.
MetricField constant_metric(const SystemModel& model, const Matrix& P, const Matrix& Q);
/// Arbitrary metric given pointwise; the Lie derivative is taken along `model`.
MetricField custom_metric(const SystemModel& model, std::function<Matrix(const Vector&)> P, const Matrix& Q);

/// P(e) = int_0^T Phi(e,s)^T Q Phi(e,s) ds with T chosen so that the tail
/// bound k~(|e|)^2 mu_max(Q) exp(-2 lambda~ T) / (2 lambda~) <= tail_tol.
/// `decay` is a linearized decay estimate.
MetricField along_solutions_metric(const SystemModel& model, const Matrix& Q, const DecayEstimate& decay,
                                   const MetricOptions& opt = {});
/// P(x) = int_0^T Phi(x,s)^T Q Phi(x,s) ds for the transversally linear
/// system, with the same tail rule. `decay` is a transverse decay estimate.
MetricField transverse_metric_field(const TransverseModel& model, const Matrix& Q, const DecayEstimate& decay,
                                    const MetricOptions& opt = {});
/// Gramian of the time-rescaled lifted system e' = F/(1+|J|^3),
/// Phi' = J/(1+|J|^3) Phi. Its horizon is found in chunks: integration
/// stops once the tail extrapolated from the decay over the last chunk is
/// below tail_tol.
MetricField rescaled_metric_field(const SystemModel& model, const Matrix& Q, const MetricOptions& opt = {});

/// Pointwise shorthands.
Matrix gramian_at_origin(const SystemModel& model, const Matrix& Q);
Matrix metric_along_solutions(const SystemModel& model, const Vector& e, const Matrix& Q,
                              const DecayEstimate& decay, double tol = 1e-9);
Matrix transverse_metric(const TransverseModel& model, const Vector& x, const Matrix& Q,
                         const DecayEstimate& decay, double tol = 1e-9);
Matrix rescaled_metric(const SystemModel& model, const Vector& e, const Matrix& Q, double tol = 1e-9);

/// Directional derivative of P along the driver flow by one-sided
/// differences (P(flow(p,h)) - P(p))/h at h, h/2, h/4, Richardson
/// extrapolated pairwise. The horizon is frozen at the value chosen at p.
struct DirectionalDerivative {
  Matrix value;
  MetricValue base;
  double h = 0.0;
  /// |R(h,h/2) - R(h/2,h/4)|.
  double gap = 0.0;
};
DirectionalDerivative directional_derivative(const MetricField& metric, const Vector& p, double h = 0.0);

struct ResidualEntry {
  Vector point;
  /// d P + P J + J^T P + w Q with w = 1 + |J|^3 for the rescaled variant.
  Matrix R;
  double max_eig = 0.0;
  double h = 0.0;
  double gap = 0.0;
  /// Symmetric part of P at the point.
  Matrix P;
};

struct ResidualReport {
  std::vector<ResidualEntry> entries;
  double max_eig = 0.0;
  double tol = 0.0;
  bool pass = false;
};

/// Throws NumericalError("derivative step unreliable") when the two
/// extrapolants differ by more than 10 tol.
ResidualEntry lie_derivative_residual(const MetricField& metric, const Vector& p, double h = 0.0,
                                      double tol = 1e-4);
ResidualReport residual_report(const MetricField& metric, const std::vector<Vector>& points, double tol = 1e-4,
                               double h = 0.0);

struct BoundRow {
  double s = 0.0;
  int samples = 0;
  double empirical_min = 0.0;
  double empirical_max = 0.0;
  double lower = 0.0;
  /// NaN when no analytic upper bound is available.
  double upper = 0.0;
};

struct MetricBounds {
  std::vector<BoundRow> rows;
  /// p_(r) r^2 strictly increasing over the rows and the last value at
  /// least four times the first.
  bool complete = false;
  std::vector<Vector> points;
  std::vector<Matrix> values;
};

/// Eigenvalue envelopes of P over ball samples of each radius next to the
/// analytic bounds
///   upper(s) = k~(s)^2 mu_max(Q) / (2 lambda~),
///   lower(s) = mu_min(Q) / (2 c(k(s) s)),  c(r) = sup_{|e| <= r} |J(e)|,
/// with k from `gain` (when null, c is the largest |J| on each sampled
/// trajectory). The rescaled variant uses lower = mu_min(Q)/2. For the
/// transverse variant use transverse_bounds. Throws NumericalError when an
/// envelope leaves its analytic bound by more than the tail tolerance.
MetricBounds metric_bounds(const MetricField& metric, const std::vector<double>& radii,
                           const DecayEstimate* gain = nullptr, int samples = 8, std::uint64_t seed = 1);

/// Bounds p_ I <= P(x) <= p- I on the given x points with
/// p- = k~^2 mu_max(Q)/(2 lambda~) and p_ = mu_min(Q)/(2 mu), where mu is
/// the largest |dF/de(0, x~)| seen along the integrated x~ trajectories.
MetricBounds transverse_bounds(const MetricField& metric, const std::vector<Vector>& xs);

/// CSV `e_1..e_n,P_11..P_nn`.
void write_metric_csv(std::ostream& out, const std::vector<Vector>& points, const std::vector<Matrix>& values);

}  // namespace lyap
