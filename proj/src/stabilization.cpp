#include "lyap/stabilization.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>

#include "lyap/linalg.hpp"
#include "lyap/quadrature.hpp"
#include "lyap/sampling.hpp"

namespace lyap {

namespace {

std::string plain(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}
std::string number(double v) { return "(" + plain(v) + ")"; }

double segment_integral(const MetricField& metric, const SystemModel& g, const Vector& a, const Vector& b) {
  const Vector d = b - a;
  if (d.norm() == 0) return 0.0;
  auto f = [&](double t) { return one_form(metric, g, a + t * d).dot(d); };
  const auto [v, ok] = integrate_refined(f, 0.0, 1.0, 1e-12, 1e-15);
  if (!ok) throw NumericalError("line integral of P g did not converge");
  return v;
}

// g(w) = b + B w on the samples, to rounding.
bool is_affine(const SystemModel& g, const std::vector<Vector>& samples, Vector& b, Matrix& B) {
  const Vector zero = Vector::Zero(g.dim());
  b = g.field(zero);
  B = g.jacobian(zero);
  for (const Vector& w : samples) {
    const double scale = 1e-12 * (1.0 + b.norm() + B.norm() * (1.0 + w.norm()));
    if ((g.field(w) - b - B * w).norm() > scale || (g.jacobian(w) - B).norm() > scale) return false;
  }
  return true;
}

struct SampleCheck {
  double killing = 0.0;
  double closedness = 0.0;
  double hypothesis = 0.0;
  Matrix Lf;
  Matrix Lg;
};

}  // namespace

MetricField spec_metric(const SystemSpec& spec, const SystemModel& driver, const Matrix& Q) {
  if (!spec.has_metric()) throw Error("spec declares no metric entries P<i><j>");
  const int n = spec.dim;
  bool varies = false;
  for (const auto& row : spec.P)
    for (const auto& e : row) varies = varies || e.depends_on_variables();
  auto eval = [P = spec.P, n](const Vector& w) {
    Matrix M(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) M(i, j) = P[i][j](w);
    return M;
  };
  if (!varies) return constant_metric(driver, eval(Vector::Zero(n)), Q);
  return custom_metric(driver, eval, Q);
}

Vector one_form(const MetricField& metric, const SystemModel& g, const Vector& w) { return metric(w) * g.field(w); }

KillingResidual killing_residual(const MetricField& metric, const SystemModel& g, const Vector& w, double h) {
  const DirectionalDerivative d = directional_derivative(metric.with_driver(g), w, h);
  const Matrix P = symmetrize(d.base.P);
  const Matrix G = g.jacobian(w);
  KillingResidual r;
  r.L = d.value + P * G + G.transpose() * P;
  r.norm = spectral_norm(r.L);
  return r;
}

ClosednessResidual closedness_residual(const MetricField& metric, const SystemModel& g, const Vector& w, double h) {
  const Eigen::Index n = w.size();
  ClosednessResidual r;
  r.D.resize(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    Vector wp = w, wm = w;
    wp[j] += h;
    wm[j] -= h;
    r.D.col(j) = (one_form(metric, g, wp) - one_form(metric, g, wm)) / (2.0 * h);
  }
  r.value = n > 1 ? (r.D - r.D.transpose()).cwiseAbs().maxCoeff() : 0.0;
  return r;
}

double construct_U(const MetricField& metric, const SystemModel& g, const Vector& w, const Vector& w0) {
  return segment_integral(metric, g, w0, w);
}

double construct_U_axis_path(const MetricField& metric, const SystemModel& g, const Vector& w, const Vector& w0) {
  double U = 0.0;
  Vector p = w0;
  for (Eigen::Index k = 0; k < w.size(); ++k) {
    Vector q = p;
    q[k] = w[k];
    U += segment_integral(metric, g, p, q);
    p = q;
  }
  return U;
}

SynthesisResult synthesize_controller(const ControlSystem& system, const MetricField& metric, double lambda,
                                      const Matrix& Q, const std::vector<Vector>& samples,
                                      const StabilizationOptions& opt) {
  const SystemModel& f = system.drift;
  const SystemModel& g = system.input;
  if (f.dim() != g.dim() || f.dim() != metric.point_dim() || metric.dim() != metric.point_dim())
    throw Error("control system and metric dimensions differ");
  if (!(lambda >= 0)) throw Error("control gain must be nonnegative");
  if (samples.empty()) throw Error("stabilization needs at least one sample point");
  require_positive_definite(Q);

  SynthesisResult out;
  ControllerCertificate& cert = out.certificate;
  cert.lambda = lambda;
  cert.samples = samples;

  const MetricField along_f = metric.with_driver(f);
  std::vector<SampleCheck> checks(samples.size());
  parallel_for(samples.size(), [&](std::size_t i) {
    const Vector& w = samples[i];
    SampleCheck& c = checks[i];
    const KillingResidual k = killing_residual(metric, g, w);
    c.Lg = k.L;
    c.killing = k.norm;
    c.closedness = closedness_residual(metric, g, w).value;
    c.Lf = lie_derivative_residual(along_f, w).R - Q;
    const Vector om = one_form(metric, g, w);
    c.hypothesis = max_eigenvalue(symmetrize(c.Lf - lambda * om * om.transpose() + Q));
  });

  // Deterministic reductions in sample order; the witness is the first sup.
  std::size_t wh = 0, wk = 0, wc = 0;
  for (std::size_t i = 0; i < checks.size(); ++i) {
    if (checks[i].hypothesis > checks[wh].hypothesis) wh = i;
    if (checks[i].killing > checks[wk].killing) wk = i;
    if (checks[i].closedness > checks[wc].closedness) wc = i;
  }
  cert.hypothesis_sup = checks[wh].hypothesis;
  cert.killing_sup = checks[wk].killing;
  cert.integrability_sup = checks[wc].closedness;
  if (cert.hypothesis_sup > opt.tol) {
    cert.failed_condition = 1;
    cert.witness = samples[wh];
  } else if (cert.killing_sup > opt.tol) {
    cert.failed_condition = 2;
    cert.witness = samples[wk];
  } else if (cert.integrability_sup > opt.closedness_tol) {
    cert.failed_condition = 3;
    cert.witness = samples[wc];
  }
  if (cert.failed_condition != 0) return out;

  Controller ctl;
  const int n = f.dim();
  Vector b;
  Matrix B;
  if (metric.is_constant() && is_affine(g, samples, b, B)) {
    const Matrix P = symmetrize(metric(Vector::Zero(n)));
    const Vector c = P * b;
    const Matrix M = symmetrize(P * B);
    ctl.U = [c, M](const Vector& w) { return c.dot(w) + 0.5 * w.dot(M * w); };
    if (!f.expressions().empty() && !g.expressions().empty()) {
      std::string U;
      for (int i = 0; i < n; ++i) {
        if (c[i] != 0) U += " + " + number(c[i]) + "*x" + std::to_string(i + 1);
        for (int j = 0; j < n; ++j)
          if (M(i, j) != 0)
            U += " + " + number(0.5 * M(i, j)) + "*x" + std::to_string(i + 1) + "*x" + std::to_string(j + 1);
      }
      if (U.empty()) U = " + 0";
      const std::string Utext = "(" + U.substr(3) + ")";
      std::ostringstream s;
      s << "# closed loop u = -" << plain(lambda) << " U(w)\n";
      s << "dim = " << n << "\n";
      for (int i = 0; i < n; ++i) {
        s << "F" << i + 1 << " = " << f.expressions()[i].to_string() << " - " << number(lambda) << "*("
          << g.expressions()[i].to_string() << ")*"
          << Utext << "\n";
      }
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) s << "P" << i + 1 << "_" << j + 1 << " = " << number(P(i, j)) << "\n";
      s << "Q = [";
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) s << (i || j ? ", " : "") << plain(Q(i, j));
      s << "]\n";
      ctl.spec_text = s.str();
    }
  } else {
    ctl.U = [metric, g](const Vector& w) { return construct_U(metric, g, w, Vector::Zero(w.size())); };
  }

  auto U = ctl.U;
  ctl.closed_loop = SystemModel(
      "closed-loop", n,
      [f, g, metric, U, lambda](const Vector& x, Vector& F, Matrix* J) {
        Vector fx, gx;
        const double u = U(x);
        if (J) {
          Matrix Jf, Jg;
          f.evaluate(x, fx, Jf);
          g.evaluate(x, gx, Jg);
          const Vector om = metric(x) * gx;
          *J = Jf - lambda * gx * om.transpose() - lambda * u * Jg;
        } else {
          f.evaluate(x, fx);
          g.evaluate(x, gx);
        }
        F = fx - lambda * u * gx;
      });

  const MetricField along_F = metric.with_driver(ctl.closed_loop);
  std::vector<double> decrease(samples.size()), gap(samples.size());
  parallel_for(samples.size(), [&](std::size_t i) {
    const Vector& w = samples[i];
    const Matrix R = lie_derivative_residual(along_F, w).R;
    decrease[i] = max_eigenvalue(symmetrize(R));
    const Vector om = one_form(metric, g, w);
    const Matrix predicted = checks[i].Lf - lambda * ctl.U(w) * checks[i].Lg - 2.0 * lambda * om * om.transpose();
    gap[i] = spectral_norm(R - Q - predicted);
  });
  std::size_t wd = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (decrease[i] > decrease[wd]) wd = i;
    cert.identity_gap = std::max(cert.identity_gap, gap[i]);
  }
  cert.closed_loop_sup = decrease[wd];
  if (cert.closed_loop_sup > opt.decrease_tol) {
    cert.failed_condition = 4;
    cert.witness = samples[wd];
    return out;
  }
  cert.pass = true;
  ctl.certificate = cert;
  out.controller = std::move(ctl);
  return out;
}

void write_controller_table(std::ostream& out, const Controller& c, const Vector& lower, const Vector& upper,
                            int points) {
  const Eigen::Index n = lower.size();
  if (upper.size() != n || points < 2) throw Error("controller table needs a box and at least two nodes per axis");
  for (Eigen::Index i = 0; i < n; ++i) out << "w_" << i + 1 << ",";
  out << "U\n";
  std::vector<int> idx(static_cast<std::size_t>(n), 0);
  char buf[40];
  while (true) {
    Vector w(n);
    for (Eigen::Index i = 0; i < n; ++i)
      w[i] = lower[i] + (upper[i] - lower[i]) * idx[static_cast<std::size_t>(i)] / (points - 1);
    for (Eigen::Index i = 0; i < n; ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", w[i]);
      out << buf << ",";
    }
    std::snprintf(buf, sizeof buf, "%.17g", c.U(w));
    out << buf << "\n";
    Eigen::Index k = n - 1;
    while (k >= 0 && ++idx[static_cast<std::size_t>(k)] == points) idx[static_cast<std::size_t>(k--)] = 0;
    if (k < 0) break;
  }
}

}  // namespace lyap
