#include "lyap/metric.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <sstream>

#include "lyap/dynamics.hpp"
#include "lyap/linalg.hpp"
#include "lyap/ode.hpp"
#include "lyap/quadrature.hpp"
#include "lyap/sampling.hpp"

namespace lyap {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string describe(const Vector& v) {
  std::ostringstream s;
  s << "(";
  for (Eigen::Index i = 0; i < v.size(); ++i) s << (i ? ", " : "") << v[i];
  s << ")";
  return s.str();
}

// exp(M) by scaling and squaring of a degree-18 Taylor polynomial.
Matrix expm_taylor(const Matrix& M) {
  const double norm = M.cwiseAbs().colwise().sum().maxCoeff();
  int squarings = 0;
  while (norm / std::ldexp(1.0, squarings) > 0.5) ++squarings;
  const Matrix S = M / std::ldexp(1.0, squarings);
  const Eigen::Index n = M.rows();
  Matrix term = Matrix::Identity(n, n);
  Matrix E = term;
  for (int k = 1; k <= 18; ++k) {
    term = (term * S) / k;
    E += term;
  }
  for (int i = 0; i < squarings; ++i) E = E * E;
  return E;
}

// Writes the state derivative and the matrix driving Phi; returns |drive|
// or the Jacobian norm the caller wants recorded.
using GramianRhs = std::function<double(const Vector& s, Vector& ds, Matrix& drive)>;

// Packed [s, vec(Phi), vec(M)] for the augmented Gramian ODE.
struct GramianState {
  int m = 0;
  int n = 0;
  Vector y;
  double jsup = 0.0;

  GramianState(const Vector& s0, int n_) : m(static_cast<int>(s0.size())), n(n_), y(m + 2 * n_ * n_) {
    y.setZero();
    y.head(m) = s0;
    Eigen::Map<Matrix>(y.data() + m, n, n).setIdentity();
  }
  Matrix phi() const { return Eigen::Map<const Matrix>(y.data() + m, n, n); }
  Matrix gram() const { return Eigen::Map<const Matrix>(y.data() + m + n * n, n, n); }
};

void advance(const GramianRhs& field, GramianState& st, const Matrix& Q, double t0, double t1, double tol) {
  if (t1 <= t0) return;
  const int m = st.m;
  const int n = st.n;
  Vector s(m), ds(m);
  Matrix drive(n, n), QPhi(n, n), W(n, n);
  double jsup = st.jsup;
  auto rhs = [&](double, const Vector& y, Vector& dy) {
    s = y.head(m);
    jsup = std::max(jsup, field(s, ds, drive));
    dy.head(m) = ds;
    Eigen::Map<const Matrix> Phi(y.data() + m, n, n);
    Eigen::Map<Matrix> dPhi(dy.data() + m, n, n);
    dPhi.noalias() = drive * Phi;
    QPhi.noalias() = Q * Phi;
    W.noalias() = Phi.transpose() * QPhi;
    // An exactly symmetric right side keeps M exactly symmetric.
    Eigen::Map<Matrix>(dy.data() + m + n * n, n, n) = 0.5 * (W + W.transpose());
  };
  OdeOptions<double> o;
  o.rtol = tol;
  o.atol = tol;
  o.monitored = m;
  DormandPrince<double> dp(st.y.size(), o);
  dp.integrate(rhs, t0, t1, st.y);
  st.jsup = jsup;
}

MetricValue finish(const GramianState& st, const Matrix& Q, double T, double tail) {
  MetricValue v;
  v.P = st.gram();
  v.horizon = T;
  v.tail = tail;
  const Matrix Phi = st.phi();
  v.terminal = Phi.transpose() * Q * Phi;
  v.jacobian_sup = st.jsup;
  return v;
}

double tail_bound(double k, double lambda, double mu_max, double T) {
  return k * k * mu_max * std::exp(-2.0 * lambda * T) / (2.0 * lambda);
}

double truncation_horizon(double k, double lambda, double mu_max, const MetricOptions& opt) {
  const double T = std::log(k * k * mu_max / (2.0 * lambda * opt.tail_tol)) / (2.0 * lambda);
  if (!(T <= opt.horizon_cap))
    throw NumericalError("decay data insufficient: truncation horizon " + std::to_string(T) + " exceeds the cap " +
                         std::to_string(opt.horizon_cap));
  return std::max(T, 1.0);
}

void check_metric_options(const MetricOptions& opt) {
  if (!(opt.tail_tol > 0) || !(opt.ode_tol > 0)) throw Error("metric tolerances must be positive");
  if (!(opt.horizon_cap > 0) || !(opt.chunk > 0) || !(opt.rescaled_cap > 0))
    throw Error("metric horizons must be positive");
}

void check_decay(const DecayEstimate& decay) {
  if (!(decay.lambda > 0)) throw Error("metric construction needs a positive decay rate");
  if (decay.gain_table.empty()) throw Error("metric construction needs a gain table");
}

// Smallest over samples of the per-trajectory bound
// mu_min (1 - exp(-2 c T)) / (2 c) on lambda_min(P_T).
double trajectory_lower(const std::vector<MetricValue>& vals, double mu_min) {
  double lower = std::numeric_limits<double>::infinity();
  for (const MetricValue& v : vals) {
    const double c = v.jacobian_sup;
    const double b = c > 0 ? mu_min * -std::expm1(-2.0 * c * v.horizon) / (2.0 * c) : mu_min * v.horizon;
    lower = std::min(lower, b);
  }
  return lower;
}

std::vector<MetricValue> evaluate_all(const MetricField& metric, const std::vector<Vector>& pts) {
  std::vector<MetricValue> out(pts.size());
  parallel_for(pts.size(), [&](std::size_t i) { out[i] = metric.at(pts[i]); });
  return out;
}

void check_envelope(double emp_min, double emp_max, double lower, double upper, double slack, double s) {
  if (!std::isnan(lower) && emp_min < lower - slack - 1e-6 * std::abs(lower))
    throw NumericalError("metric bound violated at s = " + std::to_string(s) + ": smallest eigenvalue " +
                         std::to_string(emp_min) + " below analytic lower bound " + std::to_string(lower));
  if (!std::isnan(upper) && emp_max > upper * (1 + 1e-6) + slack)
    throw NumericalError("metric bound violated at s = " + std::to_string(s) + ": largest eigenvalue " +
                         std::to_string(emp_max) + " above analytic upper bound " + std::to_string(upper));
}

}  // namespace

std::string_view variant_name(MetricVariant v) {
  switch (v) {
    case MetricVariant::constant: return "constant";
    case MetricVariant::origin: return "origin";
    case MetricVariant::along_solutions: return "along-solutions";
    case MetricVariant::transverse: return "transverse";
    case MetricVariant::rescaled: return "rescaled";
    case MetricVariant::custom: return "custom";
  }
  return "custom";
}

MetricVariant parse_variant(std::string_view name) {
  if (name == "origin") return MetricVariant::origin;
  if (name == "along-solutions" || name == "along_solutions") return MetricVariant::along_solutions;
  if (name == "transverse") return MetricVariant::transverse;
  if (name == "rescaled") return MetricVariant::rescaled;
  if (name == "constant") return MetricVariant::constant;
  throw Error("unknown metric variant `" + std::string(name) +
              "` (expected origin, along-solutions, transverse or rescaled)");
}

MetricField::MetricField(Parts parts) : parts_(std::move(parts)) {
  if (!parts_.eval || !parts_.jacobian || !parts_.driver.valid()) throw Error("incomplete metric field");
  check_metric_options(parts_.options);
}

MetricValue MetricField::at(const Vector& p, double T) const {
  if (p.size() != point_dim()) throw Error("metric point has the wrong dimension");
  return parts_.eval(p, T);
}

double MetricField::weight(const Vector& p) const {
  if (!parts_.weighted) return 1.0;
  const double j = spectral_norm(parts_.jacobian(p));
  return 1.0 + j * j * j;
}

MetricField MetricField::with_driver(const SystemModel& driver) const {
  if (driver.dim() != point_dim()) throw Error("driver dimension does not match the metric");
  Parts p = parts_;
  p.driver = driver;
  p.jacobian = [driver](const Vector& x) { return driver.jacobian(x); };
  p.weighted = false;
  return MetricField(std::move(p));
}

void require_positive_definite(const Matrix& Q, const char* what) {
  if (Q.rows() != Q.cols() || Q.rows() == 0) throw Error(std::string(what) + " must be a nonempty square matrix");
  if (!is_positive_definite(Q, 1e-12 * std::max(1.0, Q.norm())))
    throw Error(std::string(what) + " must be symmetric positive definite");
}

Matrix gramian_matrix(const Matrix& A, const Matrix& Q) {
  const Eigen::Index n = A.rows();
  if (A.cols() != n || Q.rows() != n || Q.cols() != n) throw Error("Gramian dimensions do not match");
  require_positive_definite(Q);
  const double alpha = spectral_abscissa(A);
  if (!(alpha < 0))
    throw Falsified("origin not exponentially stable at first order: spectral abscissa " + std::to_string(alpha),
                    std::vector<double>(static_cast<std::size_t>(n), 0.0));
  // exp(2 alpha T) = 1e-16; transient growth of non-normal A is left to the polish.
  const double T = std::log(1e16) / (-2.0 * alpha);
  const double normA = A.cwiseAbs().colwise().sum().maxCoeff();
  const int panels = static_cast<int>(std::clamp(std::ceil(T * normA), 1.0, 1e5));
  const double w = T / panels;
  const GaussRule& g = gauss_legendre(8);
  std::vector<Matrix> node_exp;
  for (double x : g.nodes) node_exp.push_back(expm_taylor(A * (0.5 * w * (x + 1.0))));
  const Matrix step = expm_taylor(A * w);
  Matrix E = Matrix::Identity(n, n);
  Matrix P = Matrix::Zero(n, n);
  for (int p = 0; p < panels; ++p) {
    for (std::size_t k = 0; k < g.nodes.size(); ++k) {
      const Matrix X = E * node_exp[k];
      P.noalias() += (0.5 * w * g.weights[k]) * (X.transpose() * Q * X);
    }
    E = E * step;
  }
  P = symmetrize(P);
  for (int it = 0; it < 4; ++it) {
    const Matrix R = lyapunov_residual(A, P, Q);
    if (R.norm() <= 1e-12 * std::max(1.0, Q.norm())) break;
    P = symmetrize(P + solve_lyapunov(A, R));
  }
  const double res = lyapunov_residual(A, P, Q).norm();
  if (!(res <= 1e-8)) throw NumericalError("Lyapunov polish stalled at residual " + std::to_string(res));
  return P;
}

MetricField origin_metric(const SystemModel& model, const Matrix& Q) {
  model.require_equilibrium();
  const int n = model.dim();
  const Matrix P = gramian_matrix(model.jacobian(Vector::Zero(n)), Q);
  MetricField::Parts parts;
  parts.variant = MetricVariant::origin;
  parts.Q = Q;
  parts.driver = model;
  parts.constant = true;
  parts.eval = [P, n](const Vector&, double) {
    MetricValue v;
    v.P = P;
    v.terminal = Matrix::Zero(n, n);
    return v;
  };
  parts.jacobian = [model](const Vector& p) { return model.jacobian(p); };
  return MetricField(std::move(parts));
}

MetricField constant_metric(const SystemModel& model, const Matrix& P, const Matrix& Q) {
  require_positive_definite(Q);
  require_positive_definite(P, "P");
  if (P.rows() != model.dim() || Q.rows() != model.dim()) throw Error("metric dimension does not match the system");
  MetricField::Parts parts;
  parts.variant = MetricVariant::constant;
  parts.Q = Q;
  parts.driver = model;
  parts.constant = true;
  const int n = model.dim();
  parts.eval = [P, n](const Vector&, double) {
    MetricValue v;
    v.P = P;
    v.terminal = Matrix::Zero(n, n);
    return v;
  };
  parts.jacobian = [model](const Vector& p) { return model.jacobian(p); };
  return MetricField(std::move(parts));
}

MetricField custom_metric(const SystemModel& model, std::function<Matrix(const Vector&)> P, const Matrix& Q) {
  require_positive_definite(Q);
  if (Q.rows() != model.dim()) throw Error("metric dimension does not match the system");
  MetricField::Parts parts;
  parts.variant = MetricVariant::custom;
  parts.Q = Q;
  parts.driver = model;
  const int n = model.dim();
  parts.eval = [P = std::move(P), n](const Vector& p, double) {
    MetricValue v;
    v.P = P(p);
    v.terminal = Matrix::Zero(n, n);
    return v;
  };
  parts.jacobian = [model](const Vector& p) { return model.jacobian(p); };
  return MetricField(std::move(parts));
}

MetricField along_solutions_metric(const SystemModel& model, const Matrix& Q, const DecayEstimate& decay,
                                   const MetricOptions& opt) {
  require_positive_definite(Q);
  check_decay(decay);
  check_metric_options(opt);
  if (Q.rows() != model.dim()) throw Error("Q dimension does not match the system");
  const double mu_max = max_eigenvalue(Q);
  const int n = model.dim();
  GramianRhs rhs = [model](const Vector& s, Vector& ds, Matrix& J) {
    model.evaluate(s, ds, J);
    return spectral_norm(J);
  };
  MetricField::Parts parts;
  parts.variant = MetricVariant::along_solutions;
  parts.Q = Q;
  parts.driver = model;
  parts.decay = decay;
  parts.options = opt;
  parts.eval = [=](const Vector& e, double T) {
    double k = kNaN;
    try {
      k = decay.gain(e.norm());
    } catch (const NumericalError&) {
      if (!(T > 0)) throw;
    }
    const double horizon = T > 0 ? T : truncation_horizon(k, decay.lambda, mu_max, opt);
    GramianState st(e, n);
    advance(rhs, st, Q, 0.0, horizon, opt.ode_tol);
    return finish(st, Q, horizon, tail_bound(k, decay.lambda, mu_max, horizon));
  };
  parts.jacobian = [model](const Vector& p) { return model.jacobian(p); };
  return MetricField(std::move(parts));
}

MetricField transverse_metric_field(const TransverseModel& model, const Matrix& Q, const DecayEstimate& decay,
                                    const MetricOptions& opt) {
  require_positive_definite(Q);
  check_decay(decay);
  check_metric_options(opt);
  const int ne = model.e_dim();
  const int nx = model.x_dim();
  if (Q.rows() != ne) throw Error("Q dimension does not match the e-subsystem");
  const double mu_max = max_eigenvalue(Q);
  const double k = decay.max_gain();
  const SystemModel full = model.full();
  GramianRhs rhs = [full, ne, nx](const Vector& x, Vector& dx, Matrix& drive) {
    Vector w = Vector::Zero(ne + nx);
    w.tail(nx) = x;
    Vector f(ne + nx);
    Matrix J(ne + nx, ne + nx);
    full.evaluate(w, f, J);
    dx = f.tail(nx);
    drive = J.topLeftCorner(ne, ne);
    return spectral_norm(drive);
  };
  MetricField::Parts parts;
  parts.variant = MetricVariant::transverse;
  parts.Q = Q;
  parts.driver = model.manifold_dynamics();
  parts.decay = decay;
  parts.options = opt;
  parts.eval = [=](const Vector& x, double T) {
    const double horizon = T > 0 ? T : truncation_horizon(k, decay.lambda, mu_max, opt);
    GramianState st(x, ne);
    advance(rhs, st, Q, 0.0, horizon, opt.ode_tol);
    return finish(st, Q, horizon, tail_bound(k, decay.lambda, mu_max, horizon));
  };
  parts.jacobian = [model, ne](const Vector& x) { return model.dF_de(Vector::Zero(ne), x); };
  return MetricField(std::move(parts));
}

MetricField rescaled_metric_field(const SystemModel& model, const Matrix& Q, const MetricOptions& opt) {
  require_positive_definite(Q);
  check_metric_options(opt);
  if (Q.rows() != model.dim()) throw Error("Q dimension does not match the system");
  const double mu_max = max_eigenvalue(Q);
  const int n = model.dim();
  GramianRhs rhs = [model](const Vector& s, Vector& ds, Matrix& drive) {
    model.evaluate(s, ds, drive);
    const double j = spectral_norm(drive);
    const double w = 1.0 + j * j * j;
    ds /= w;
    drive /= w;
    return j / w;
  };
  MetricField::Parts parts;
  parts.variant = MetricVariant::rescaled;
  parts.Q = Q;
  parts.driver = model;
  parts.weighted = true;
  parts.options = opt;
  parts.eval = [=](const Vector& e, double T) {
    GramianState st(e, n);
    if (T > 0) {
      advance(rhs, st, Q, 0.0, T, opt.ode_tol);
      return finish(st, Q, T, kNaN);
    }
    double t = 0.0;
    double prev = 1.0;
    while (true) {
      advance(rhs, st, Q, t, t + opt.chunk, opt.ode_tol);
      t += opt.chunk;
      const double cur = spectral_norm(st.phi());
      const double rate = std::log(prev / cur) / opt.chunk;
      // Tail extrapolated from the last chunk, with a factor two of safety.
      if (rate > 0) {
        const double tail = cur * cur * mu_max / rate;
        if (tail <= opt.tail_tol) return finish(st, Q, t, tail);
      }
      if (t >= opt.rescaled_cap)
        throw NumericalError("decay data insufficient: rescaled Gramian tail above tolerance at t = " +
                             std::to_string(t));
      prev = cur;
    }
  };
  parts.jacobian = [model](const Vector& p) { return model.jacobian(p); };
  return MetricField(std::move(parts));
}

Matrix gramian_at_origin(const SystemModel& model, const Matrix& Q) { return origin_metric(model, Q)(Vector::Zero(model.dim())); }

Matrix metric_along_solutions(const SystemModel& model, const Vector& e, const Matrix& Q,
                              const DecayEstimate& decay, double tol) {
  MetricOptions opt;
  opt.tail_tol = tol;
  return along_solutions_metric(model, Q, decay, opt)(e);
}

Matrix transverse_metric(const TransverseModel& model, const Vector& x, const Matrix& Q,
                         const DecayEstimate& decay, double tol) {
  MetricOptions opt;
  opt.tail_tol = tol;
  return transverse_metric_field(model, Q, decay, opt)(x);
}

Matrix rescaled_metric(const SystemModel& model, const Vector& e, const Matrix& Q, double tol) {
  MetricOptions opt;
  opt.tail_tol = tol;
  return rescaled_metric_field(model, Q, opt)(e);
}

DirectionalDerivative directional_derivative(const MetricField& metric, const Vector& p, double h) {
  DirectionalDerivative d;
  d.base = metric.at(p);
  d.h = h > 0 ? h : std::max(1e-4, std::sqrt(metric.options().tail_tol));
  const int n = metric.dim();
  if (metric.is_constant()) {
    d.value = Matrix::Zero(n, n);
    return d;
  }
  const double T = d.base.horizon;
  const FlowOptions fo{metric.options().ode_tol};
  auto quotient = [&](double step) -> Matrix {
    const Vector q = flow_endpoint(metric.driver(), p, step, fo);
    return (metric.at(q, T).P - d.base.P) / step;
  };
  const Matrix D1 = quotient(d.h);
  const Matrix D2 = quotient(0.5 * d.h);
  const Matrix D3 = quotient(0.25 * d.h);
  const Matrix R1 = 2.0 * D2 - D1;
  const Matrix R2 = 2.0 * D3 - D2;
  d.value = symmetrize(R2);
  d.gap = spectral_norm(R1 - R2);
  return d;
}

ResidualEntry lie_derivative_residual(const MetricField& metric, const Vector& p, double h, double tol) {
  const DirectionalDerivative d = directional_derivative(metric, p, h);
  if (d.gap > 10.0 * tol)
    throw NumericalError("derivative step unreliable at " + describe(p) + ": extrapolants differ by " +
                         std::to_string(d.gap));
  const Matrix J = metric.jacobian(p);
  const Matrix& P = d.base.P;
  ResidualEntry r;
  r.point = p;
  r.P = P;
  r.R = symmetrize(d.value + P * J + J.transpose() * P + metric.weight(p) * metric.Q());
  r.max_eig = max_eigenvalue(r.R);
  r.h = d.h;
  r.gap = d.gap;
  return r;
}

ResidualReport residual_report(const MetricField& metric, const std::vector<Vector>& points, double tol,
                               double h) {
  ResidualReport rep;
  rep.tol = tol;
  rep.entries.resize(points.size());
  parallel_for(points.size(), [&](std::size_t i) { rep.entries[i] = lie_derivative_residual(metric, points[i], h, tol); });
  rep.max_eig = -std::numeric_limits<double>::infinity();
  for (const auto& e : rep.entries) rep.max_eig = std::max(rep.max_eig, e.max_eig);
  rep.pass = !rep.entries.empty() && rep.max_eig <= tol;
  return rep;
}

MetricBounds metric_bounds(const MetricField& metric, const std::vector<double>& radii_in,
                           const DecayEstimate* gain, int samples, std::uint64_t seed) {
  if (metric.variant() == MetricVariant::transverse) throw Error("use transverse_bounds for the transverse metric");
  if (radii_in.empty()) throw Error("radii grid is empty");
  if (samples < 1) throw Error("sample count must be positive");
  std::vector<double> radii = radii_in;
  std::sort(radii.begin(), radii.end());
  const double mu_min = min_eigenvalue(metric.Q());
  const double mu_max = max_eigenvalue(metric.Q());
  const int n = metric.point_dim();
  const double slack = metric.options().tail_tol;

  // c(r) = sup |J| over ball samples, origin included.
  auto jacobian_sup = [&](double r) {
    auto pts = ball_samples(n, r, 64, seed ^ 0x51ed2701ULL);
    pts.push_back(Vector::Zero(n));
    double c = 0.0;
    for (const Vector& p : pts) c = std::max(c, spectral_norm(metric.jacobian(p)));
    return c;
  };

  MetricBounds out;
  for (std::size_t j = 0; j < radii.size(); ++j) {
    const double s = radii[j];
    if (!(s > 0)) throw Error("radii must be positive");
    const auto pts = ball_samples(n, s, samples, seed + j);
    const auto vals = evaluate_all(metric, pts);
    BoundRow row;
    row.s = s;
    row.samples = static_cast<int>(pts.size());
    row.empirical_min = std::numeric_limits<double>::infinity();
    row.empirical_max = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < pts.size(); ++i) {
      row.empirical_min = std::min(row.empirical_min, min_eigenvalue(vals[i].P));
      row.empirical_max = std::max(row.empirical_max, max_eigenvalue(vals[i].P));
      out.points.push_back(pts[i]);
      out.values.push_back(vals[i].P);
    }
    row.lower = kNaN;
    row.upper = kNaN;
    switch (metric.variant()) {
      case MetricVariant::along_solutions: {
        const DecayEstimate& d = *metric.decay();
        const double k = d.gain(s);
        row.upper = k * k * mu_max / (2.0 * d.lambda);
        if (gain) {
          const double c = jacobian_sup(gain->gain(s) * s);
          row.lower = mu_min / (2.0 * c);
        } else {
          row.lower = trajectory_lower(vals, mu_min);
        }
        break;
      }
      case MetricVariant::rescaled:
        row.lower = 0.5 * mu_min;
        break;
      case MetricVariant::origin:
        row.lower = mu_min / (2.0 * spectral_norm(metric.jacobian(Vector::Zero(n))));
        break;
      case MetricVariant::constant:
        row.lower = row.empirical_min;
        row.upper = row.empirical_max;
        break;
      default:
        break;
    }
    check_envelope(row.empirical_min, row.empirical_max, row.lower, row.upper, slack, s);
    out.rows.push_back(row);
  }
  out.complete = out.rows.size() >= 2 && !std::isnan(out.rows.front().lower);
  if (out.complete) {
    double prev = -1.0;
    for (const BoundRow& r : out.rows) {
      const double v = r.lower * r.s * r.s;
      if (!(v > prev)) out.complete = false;
      prev = v;
    }
    const double first = out.rows.front().lower * out.rows.front().s * out.rows.front().s;
    if (!(prev >= 4.0 * first)) out.complete = false;
  }
  return out;
}

MetricBounds transverse_bounds(const MetricField& metric, const std::vector<Vector>& xs) {
  if (metric.variant() != MetricVariant::transverse) throw Error("transverse_bounds needs a transverse metric");
  if (xs.empty()) throw Error("x grid is empty");
  const auto vals = evaluate_all(metric, xs);
  const double mu_min = min_eigenvalue(metric.Q());
  const double mu_max = max_eigenvalue(metric.Q());
  BoundRow row;
  row.samples = static_cast<int>(xs.size());
  row.empirical_min = std::numeric_limits<double>::infinity();
  row.empirical_max = -std::numeric_limits<double>::infinity();
  MetricBounds out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    row.empirical_min = std::min(row.empirical_min, min_eigenvalue(vals[i].P));
    row.empirical_max = std::max(row.empirical_max, max_eigenvalue(vals[i].P));
    out.points.push_back(xs[i]);
    out.values.push_back(vals[i].P);
  }
  const DecayEstimate& d = *metric.decay();
  const double k = d.max_gain();
  row.upper = k * k * mu_max / (2.0 * d.lambda);
  row.lower = trajectory_lower(vals, mu_min);
  check_envelope(row.empirical_min, row.empirical_max, row.lower, row.upper, metric.options().tail_tol, 0.0);
  out.rows.push_back(row);
  return out;
}

void write_metric_csv(std::ostream& out, const std::vector<Vector>& points, const std::vector<Matrix>& values) {
  if (points.size() != values.size()) throw Error("metric dump needs one matrix per point");
  if (points.empty()) return;
  const auto n = points.front().size();
  const auto m = values.front().rows();
  for (Eigen::Index i = 0; i < n; ++i) out << (i ? "," : "") << "e_" << i + 1;
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < m; ++j) out << ",P_" << i + 1 << j + 1;
  out << "\n";
  char buf[40];
  for (std::size_t k = 0; k < points.size(); ++k) {
    for (Eigen::Index i = 0; i < n; ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", points[k][i]);
      out << (i ? "," : "") << buf;
    }
    for (Eigen::Index i = 0; i < m; ++i)
      for (Eigen::Index j = 0; j < m; ++j) {
        std::snprintf(buf, sizeof buf, "%.17g", values[k](i, j));
        out << "," << buf;
      }
    out << "\n";
  }
}

}  // namespace lyap
