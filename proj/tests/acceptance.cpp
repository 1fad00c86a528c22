// Acceptance suite: one PASS/FAIL line per criterion with its runtime.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include "lyap/app.hpp"
#include "lyap/catalog.hpp"
#include "lyap/dynamics.hpp"
#include "lyap/linalg.hpp"
#include "lyap/metric.hpp"
#include "lyap/report.hpp"
#include "lyap/riemann.hpp"
#include "lyap/stabilization.hpp"

using namespace lyap;

namespace {

Vector scalar(double v) { return Vector::Constant(1, v); }
Matrix one() { return Matrix::Identity(1, 1); }

// Collects failed checks with a short note each.
struct Outcome {
  bool ok = false;
  std::string detail;
};

struct Check {
  std::string failures;
  void operator()(bool ok, const std::string& what) {
    if (!ok) failures += (failures.empty() ? "" : "; ") + what;
  }
  Outcome done(const std::string& summary) const {
    return failures.empty() ? Outcome{true, summary} : Outcome{false, failures};
  }
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

// P from the vectorized equation (I kron A^T + A^T kron I) vec P = -vec Q.
Matrix kronecker_lyapunov(const Matrix& A, const Matrix& Q) {
  const Eigen::Index n = A.rows();
  Matrix K = Matrix::Zero(n * n, n * n);
  const Matrix I = Matrix::Identity(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      K.block(i * n, j * n, n, n) += I(i, j) * A.transpose();
      K.block(i * n, j * n, n, n) += A(j, i) * I;
    }
  const Vector p = K.fullPivLu().solve(-Eigen::Map<const Vector>(Q.data(), n * n));
  return Eigen::Map<const Matrix>(p.data(), n, n);
}

SystemModel scalar_example() { return parse_system(catalog::find("scalar-example").spec_text); }

const MetricField& scalar_metric() {
  static const MetricField m = [] {
    const SystemModel model = scalar_example();
    return along_solutions_metric(model, one(), estimate_linearized_decay(model, {0.5, 1.0, 1.5, 2.0, 2.5}));
  }();
  return m;
}

Outcome criterion1() {
  Check check;
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> g;
  double worst = 0.0, gap = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 1 + trial % 4;
    Matrix A(n, n);
    for (Eigen::Index i = 0; i < A.size(); ++i) A.data()[i] = g(rng);
    const double shift = Eigen::EigenSolver<Matrix>(A).eigenvalues().real().maxCoeff() + 0.2 + 0.3 * trial / 10;
    A -= shift * Matrix::Identity(n, n);
    Matrix B(n, n);
    for (Eigen::Index i = 0; i < B.size(); ++i) B.data()[i] = g(rng);
    const Matrix Q = B * B.transpose() + Matrix::Identity(n, n);
    const Matrix P = gramian_at_origin(SystemModel::linear("A", A), Q);
    worst = std::max(worst, (A.transpose() * P + P * A + Q).norm());
    const Matrix oracle = kronecker_lyapunov(A, Q);
    gap = std::max(gap, (P - oracle).norm() / std::max(1.0, oracle.norm()));
  }
  check(worst <= 1e-8, "residual " + fmt(worst));
  check(gap <= 1e-8, "oracle gap " + fmt(gap));
  return check.done("max |A'P+PA+Q| = " + fmt(worst) + ", max rel gap to Kronecker solve " + fmt(gap));
}

Outcome criterion2() {
  Check check;
  const SystemModel m = scalar_example();
  const Trajectory tr = flow(m, scalar(1.0), 5.0, 1e-11);
  double worst = 0.0;
  for (double t : {0.5, 1.0, 2.0, 5.0}) {
    // Oracle: E^2 exp(E^2) = e^2 exp(e^2) exp(-2t), solved by Newton.
    const double y = catalog::solve_y_exp_y(std::exp(1.0) * std::exp(-2 * t));
    worst = std::max(worst, std::abs(tr.state(t)[0] - std::sqrt(y)));
  }
  check(worst <= 1e-6, "max error " + fmt(worst));
  return check.done("max |E(1,t) - oracle| = " + fmt(worst));
}

Outcome criterion3() {
  Check check;
  const MetricField& P = scalar_metric();
  double low = 1e300, gap = 0.0;
  for (double e : {-2.0, -1.0, 0.5, 1.0, 2.0}) {
    const double p = P(scalar(e))(0, 0);
    low = std::min(low, p);
    gap = std::max(gap, std::abs(p - catalog::scalar_example_metric(e)));
  }
  const double p1 = P(scalar(1.0))(0, 0);
  const double cap = std::exp(4 * std::exp(1.0)) / 2 * 1.01;
  check(low >= 0.5 - 1e-6, "min P " + fmt(low));
  check(p1 <= cap, "P(1) " + fmt(p1));
  return check.done("min P = " + fmt(low) + ", P(1) = " + fmt(p1) + " <= " + fmt(cap) +
                                      ", closed-form gap " + fmt(gap));
}

Outcome criterion4() {
  Check check;
  std::vector<Vector> grid;
  for (int i = -8; i <= 8; ++i) grid.push_back(scalar(0.25 * i));
  const ResidualReport plain = residual_report(scalar_metric(), grid);
  const MetricField rescaled = rescaled_metric_field(scalar_example(), one());
  const ResidualReport r2 = residual_report(rescaled, grid);
  double low = 1e300;
  for (const auto& e : r2.entries) low = std::min(low, min_eigenvalue(e.P));
  check(plain.max_eig <= 1e-4, "along-solutions max eig " + fmt(plain.max_eig));
  check(r2.max_eig <= 1e-4, "rescaled max eig " + fmt(r2.max_eig));
  check(low >= 0.5 - 1e-6, "rescaled min P " + fmt(low));
  return check.done("max eig(L_F P + Q) = " + fmt(plain.max_eig) + ", rescaled " + fmt(r2.max_eig) +
                                      " with min P~ = " + fmt(low) + " on 17 points");
}

Outcome criterion5() {
  Check check;
  // Constant metrics.
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g;
  double cgap = 0.0;
  for (int n = 1; n <= 3; ++n) {
    Matrix B(n, n);
    for (Eigen::Index i = 0; i < B.size(); ++i) B.data()[i] = g(rng);
    const Matrix P = B * B.transpose() + 0.5 * Matrix::Identity(n, n);
    std::string spec = "dim=" + std::to_string(n);
    for (int i = 1; i <= n; ++i) spec += "; F" + std::to_string(i) + " = -x" + std::to_string(i);
    const MetricField c = constant_metric(parse_system(spec), P, Matrix::Identity(n, n));
    for (int k = 0; k < 4; ++k) {
      Vector e(n);
      for (Eigen::Index i = 0; i < n; ++i) e[i] = g(rng);
      cgap = std::max(cgap, std::abs(distance_to_origin(c, e).value - std::sqrt(e.dot(P * e))));
    }
  }
  check(cgap <= 1e-8, "constant metric gap " + fmt(cgap));

  // Scalar example.
  const MetricField& P = scalar_metric();
  double qgap = 0.0, slack = 1e300;
  bool sandwich = true;
  for (double e : {-2.0, -1.0, 0.5, 1.0, 2.0}) {
    const DistanceValue V = distance_to_origin(P, scalar(e));
    const double oracle = std::abs(catalog::gauss_kronrod(
        [](double s) { return std::sqrt(catalog::scalar_example_metric(s)); }, 0.0, e, 1e-12));
    qgap = std::max(qgap, std::abs(V.value - oracle));
    if (!V.upper_bound) {
      const double pbar = metric_upper_bound(P, std::abs(e));
      sandwich = sandwich && std::sqrt(0.5) * std::abs(e) <= V.value + 1e-9 &&
                 V.value <= std::sqrt(pbar) * std::abs(e);
    }
  }
  check(qgap <= 1e-5, "quadrature gap " + fmt(qgap));
  check(sandwich, "sandwich violated");
  for (double e : {0.5, 1.0, 2.0}) {
    const DiniEstimate d = dini_derivative_V(P, scalar(e));
    slack = std::min(slack, d.bound + 1e-3 - d.value);
    check(!d.flagged, "Dini point flagged at " + fmt(e));
  }
  check(slack >= 0, "Dini bound exceeded by " + fmt(-slack));
  return check.done("constant gap " + fmt(cgap) + ", V vs quadrature " + fmt(qgap) +
                                      ", min Dini slack " + fmt(slack));
}

Outcome criterion6() {
  Check check;
  const std::string text = catalog::find("transverse-counterexample").spec_text;
  auto sup_dE = [&](double lam, double* at_end) {
    const SystemModel full = parse_system(text, {{"lam", lam}, {"mu", 1.0}});
    Vector x(2);
    x << 1.0, 1.0;
    const Trajectory tr = variational_flow(full, x, 10.0, 1e-10);
    Vector d(2);
    d << 1.0, 1.0;
    double sup = 0.0;
    for (std::size_t k = 0; k < tr.size(); ++k) sup = std::max(sup, std::abs((tr.node_phi(k) * d)[0]));
    *at_end = std::abs((tr.final_phi() * d)[0]);
    // Cross-check the endpoint against the closed form.
    const double oracle = catalog::counterexample_oracle(1.0, 1.0, 10.0, lam, 1.0, 1.0, 1.0).dE;
    check(std::abs((tr.final_phi() * d)[0] - oracle) <= 1e-6 * std::max(1.0, std::abs(oracle)),
          "dE(10) differs from the closed form at lam = " + fmt(lam));
    return sup;
  };
  double end_slow = 0.0, end_fast = 0.0;
  const double sup_slow = sup_dE(0.5, &end_slow);
  sup_dE(2.0, &end_fast);
  check(sup_slow >= 1.0 + 0.5, "lam = 0.5 sup |dE| " + fmt(sup_slow));
  check(end_fast < 1e-2, "lam = 2 |dE(10)| " + fmt(end_fast));

  // |E| <= exp((cos 1 + 1)/mu) exp(-lam t) |e0| with x0 = 1: exactly on the
  // closed form, and on integrated nodes up to the integrator's error scale
  // 10 tol |(E, X)|, which is dominated by X = exp(t).
  const double tol = 1e-10;
  double worst = 0.0, worst_num = 0.0;
  for (double lam : {0.5, 2.0})
    for (double e0 : {-1.0, 0.3, 1.0}) {
      auto bound = [&](double t) { return std::exp(std::cos(1.0) + 1.0) * std::exp(-lam * t) * std::abs(e0); };
      for (int k = 0; k <= 10000; ++k) {
        const double t = 1e-3 * k;
        worst = std::max(worst, std::abs(catalog::counterexample_oracle(e0, 1.0, t, lam, 1.0).E) / bound(t));
      }
      const SystemModel full = parse_system(text, {{"lam", lam}, {"mu", 1.0}});
      Vector x(2);
      x << e0, 1.0;
      const Trajectory tr = flow(full, x, 10.0, tol);
      for (std::size_t k = 0; k < tr.size(); ++k) {
        const double t = tr.times()[k];
        const double allowed = bound(t) + 10 * tol * tr.node_state(k).norm();
        worst_num = std::max(worst_num, std::abs(tr.node_state(k)[0]) / allowed);
      }
    }
  check(worst <= 1.0, "closed-form E bound ratio " + fmt(worst));
  check(worst_num <= 1.0, "integrated E bound ratio " + fmt(worst_num));
  return check.done("lam=0.5 sup|dE| = " + fmt(sup_slow) + ", lam=2 |dE(10)| = " + fmt(end_fast) +
                                      ", max |E|/bound = " + fmt(worst) +
                    " (closed form), " + fmt(worst_num) + " (integrated)");
}

Outcome criterion7() {
  Check check;
  const SystemSpec spec = parse_system_spec(catalog::find("stabilization-scalar").spec_text);
  const ControlSystem cs = make_control_system(spec);
  const MetricField P = spec_metric(spec, cs.drift, *spec.Q);
  std::vector<Vector> samples;
  for (int i = -4; i <= 4; ++i) samples.push_back(scalar(0.5 * i));
  const SynthesisResult r = synthesize_controller(cs, P, 3.0, *spec.Q, samples);
  if (!r.controller) return {false, "no controller emitted"};
  const ControllerCertificate& c = r.certificate;
  const double LFP = c.closed_loop_sup - 1.0;
  check(std::abs(LFP + 4.0) <= 1e-8, "L_F P = " + fmt(LFP));
  check(c.killing_sup <= 1e-8, "Killing " + fmt(c.killing_sup));
  check(c.integrability_sup <= 1e-8, "integrability " + fmt(c.integrability_sup));
  double ugap = 0.0;
  for (const Vector& w : samples) {
    // u = -3 U(w) = -3 w; closed loop w' = -2 w.
    ugap = std::max(ugap, std::abs(-3.0 * r.controller->U(w) + 3.0 * w[0]));
    ugap = std::max(ugap, std::abs(r.controller->closed_loop.field(w)[0] + 2.0 * w[0]));
  }
  check(ugap <= 1e-12, "control law gap " + fmt(ugap));

  const auto dir = std::filesystem::temp_directory_path() / "lyapcert-acceptance-7";
  std::filesystem::create_directories(dir);
  report::write_file((dir / "closed_loop.txt").string(), r.controller->spec_text);
  app::RunConfig cfg;
  cfg.command = "certify";
  cfg.system = (dir / "closed_loop.txt").string();
  cfg.out = (dir / "certify").string();
  const app::Outcome o = app::run(cfg);
  check(o.exit_code == 0, "certify exit " + std::to_string(o.exit_code) + " " + o.message);
  return check.done("L_F P = " + fmt(LFP) + ", Killing " + fmt(c.killing_sup) + ", integrability " +
                                      fmt(c.integrability_sup) + ", certify pass");
}

Outcome criterion8() {
  Check check;
  // Semigroup and cocycle on the scalar example and a planar system.
  const double tol = 1e-10;
  const SystemModel planar = parse_system("dim=2; F1 = -x1 + x2^2; F2 = -2*x2 + sin(x1)");
  Vector e(2);
  e << 0.8, -0.6;
  double semi = 0.0, cocycle = 0.0;
  for (const SystemModel* m : {&planar}) {
    const auto [Es, Phis] = variational_endpoint(*m, e, 0.7, {tol});
    const auto [Et, Phit] = variational_endpoint(*m, Es, 1.1, {tol});
    const auto [Ets, Phits] = variational_endpoint(*m, e, 1.8, {tol});
    semi = std::max(semi, (Et - Ets).norm());
    cocycle = std::max(cocycle, (Phit * Phis - Phits).norm());
  }
  const SystemModel sc = scalar_example();
  const Vector s1 = flow_endpoint(sc, scalar(1.5), 0.9, {tol});
  semi = std::max(semi, std::abs(flow_endpoint(sc, s1, 2.3, {tol})[0] - flow_endpoint(sc, scalar(1.5), 3.2, {tol})[0]));
  check(semi <= 10 * tol, "semigroup " + fmt(semi));
  check(cocycle <= 10 * tol, "cocycle " + fmt(cocycle));

  // Geodesic speed on the pullback of the Euclidean metric by (x1, x2 + x1^2).
  const MetricField curved = custom_metric(
      parse_system("dim=2; F1 = -x1; F2 = -x2"),
      [](const Vector& x) {
        Matrix J(2, 2);
        J << 1, 0, 2 * x[0], 1;
        return Matrix(J.transpose() * J);
      },
      Matrix::Identity(2, 2));
  Vector v(2);
  v << 1.0, -0.4;
  const GeodesicPath path = geodesic_ivp(curved, e, v, 2.0, true);
  double speed = 0.0;
  for (double s : path.speed) speed = std::max(speed, std::abs(s - 1.0));
  check(speed <= 1e-6, "geodesic speed " + fmt(speed));

  // Metric symmetry.
  const MetricField Pm = along_solutions_metric(planar, Matrix::Identity(2, 2),
                                                estimate_linearized_decay(planar, {0.5, 1.0}));
  double asym = 0.0;
  for (double a : {-0.5, 0.2, 0.6}) {
    Vector p(2);
    p << a, 0.3 - a;
    const Matrix M = Pm(p);
    asym = std::max(asym, (M - M.transpose()).norm());
  }
  check(asym <= 1e-10, "asymmetry " + fmt(asym));

  // Forward-mode derivatives against central differences.
  double ad = 0.0;
  const SystemModel rich = parse_system("dim=3; F1 = sin(x1)*x2 - exp(x3)/3; F2 = x1^3 - sqrt(1 + x2^2); F3 = ln(2 + x1*x1)*cos(x3)");
  Vector p(3);
  p << 0.4, -0.7, 0.2;
  const Matrix J = rich.jacobian(p);
  for (int k = 0; k < 3; ++k) {
    const double h = 1e-5;
    Vector a = p, b = p;
    a[k] += h;
    b[k] -= h;
    const Vector fd = (rich.field(a) - rich.field(b)) / (2 * h);
    ad = std::max(ad, (J.col(k) - fd).norm() / std::max(1e-12, J.col(k).norm()));
  }
  check(ad <= 1e-6, "AD vs FD " + fmt(ad));

  // Byte-identical reports.
  const auto dir = std::filesystem::temp_directory_path() / "lyapcert-acceptance-8";
  app::RunConfig cfg;
  cfg.command = "certify";
  cfg.system = "scalar-example";
  cfg.out = dir.string();
  auto read = [&] {
    std::ifstream in(dir / "report.json", std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
  };
  app::run(cfg);
  const std::string first = read();
  app::run(cfg);
  check(!first.empty() && read() == first, "reports differ");
  return check.done("semigroup " + fmt(semi) + ", cocycle " + fmt(cocycle) + ", speed " + fmt(speed) +
                                      ", asymmetry " + fmt(asym) + ", AD/FD " + fmt(ad) + ", reports identical");
}

}  // namespace

int main() {
  const std::vector<std::pair<int, double>> limits = {{1, 1}, {2, 1}, {3, 10}, {4, 30},
                                                      {5, 30}, {6, 10}, {7, 5}, {8, 60}};
  const std::vector<std::function<Outcome()>> fns = {criterion1, criterion2, criterion3, criterion4,
                                                         criterion5, criterion6, criterion7, criterion8};
  // The along-solutions metric of the scalar example is shared by several
  // criteria; each criterion's runtime includes whatever it builds first.
  int failed = 0;
  for (std::size_t i = 0; i < fns.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    std::string detail;
    bool ok = false;
    try {
      const Outcome r = fns[i]();
      ok = r.ok;
      detail = r.detail;
    } catch (const std::exception& ex) {
      detail = std::string("exception: ") + ex.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const double limit = limits[i].second;
    if (secs > limit) {
      ok = false;
      detail += " (runtime over limit)";
    }
    if (!ok) ++failed;
    std::printf("CRITERION %d %s %.2fs (limit %.0fs): %s\n", limits[i].first, ok ? "PASS" : "FAIL", secs, limit,
                detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
