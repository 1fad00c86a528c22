#include "lyap/catalog.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <unsupported/Eigen/MatrixFunctions>

#include "json.hpp"
#include "lyap/error.hpp"

namespace lyap::catalog {

const std::vector<Entry>& entries() {
  static const std::vector<Entry> list = {
      {"scalar-example",
       "# e' = -e/(1+e^2): globally attractive, not globally exponentially stable\n"
       "dim = 1\n"
       "F1 = -x1/(1 + x1^2)\n"
       "Q = [1]\n",
       "implicit closed form",
       {},
       1e-6,
       20.0,
       "scalar field whose solutions satisfy E^2 exp(E^2) = e^2 exp(e^2) exp(-2t)"},
      {"linear-scalar",
       "dim = 1\n"
       "F1 = -x1\n"
       "Q = [1]\n",
       "linear algebra",
       {},
       1e-8,
       20.0,
       "e' = -e"},
      {"transverse-counterexample",
       "# e' = -(lam + x sin x) e, x' = mu x\n"
       "dim = 2\n"
       "e_dim = 1\n"
       "params lam = 0.5, mu = 1\n"
       "F1 = -(lam + x2*sin(x2))*x1\n"
       "G1 = mu*x2\n"
       "Q = [1]\n",
       "implicit closed form",
       {{"lam", 0.5}, {"mu", 1.0}},
       1e-6,
       10.0,
       "planar system with an exponentially stable invariant manifold whose linearization does not decay "
       "when lam < mu"},
      {"stabilization-scalar",
       "# w' = w + u with the metric P = 1\n"
       "dim = 1\n"
       "F1 = x1\n"
       "g1 = 1\n"
       "P11 = 1\n"
       "Q = [1]\n",
       "hand computation",
       {},
       1e-8,
       10.0,
       "unstable scalar plant with a Killing input field"},
  };
  return list;
}

const Entry& find(std::string_view name) {
  for (const auto& e : entries())
    if (e.name == name) return e;
  throw Error("unknown catalog system '" + std::string(name) + "'");
}

namespace {

std::string number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::string linear_spec_text(const Matrix& A) {
  const auto n = A.rows();
  std::ostringstream out;
  out << "dim = " << n << "\n";
  for (Eigen::Index i = 0; i < n; ++i) {
    out << "F" << i + 1 << " = ";
    bool first = true;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (A(i, j) == 0.0) continue;
      out << (first ? "" : " + ") << "(" << number(A(i, j)) << ")*x" << j + 1;
      first = false;
    }
    if (first) out << "0";
    out << "\n";
  }
  return out.str();
}

Matrix read_linear_matrix(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& ex) {
    throw Error("malformed JSON in '" + path + "': " + ex.what());
  }
  if (!j.contains("A") || !j["A"].is_array() || j["A"].empty())
    throw Error("'" + path + "' must contain a square matrix \"A\"");
  const auto& rows = j["A"];
  const auto n = static_cast<Eigen::Index>(rows.size());
  Matrix A(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!rows[i].is_array() || static_cast<Eigen::Index>(rows[i].size()) != n)
      throw Error("matrix \"A\" in '" + path + "' is not square");
    for (Eigen::Index k = 0; k < n; ++k) A(i, k) = rows[i][k].get<double>();
  }
  return A;
}

Resolved resolve(std::string_view arg) {
  for (const auto& e : entries())
    if (e.name == arg) return {e.name, e.spec_text, e.default_horizon};
  if (arg.starts_with("linear:")) {
    const std::string path(arg.substr(7));
    std::string text = linear_spec_text(read_linear_matrix(path));
    return {std::string(arg), std::move(text), 20.0};
  }
  const std::string path(arg);
  if (std::filesystem::exists(path)) return {path, read_file(path), 20.0};
  throw Error("'" + path + "' is neither a catalog system nor a readable spec file");
}

// ---------------------------------------------------------------------------

double solve_y_exp_y(double c) {
  if (c < 0.0) throw Error("y exp(y) = c needs c >= 0");
  if (c == 0.0) return 0.0;
  // f(y) = y e^y - c is increasing and convex on y >= 0; Newton from an upper
  // starting point decreases monotonically onto the root. Bisection guards it.
  double lo = 0.0;
  double hi = std::max(1.0, std::log1p(c));
  while (hi * std::exp(hi) < c) hi *= 2.0;
  double y = c < 1.0 ? c : hi;
  for (int it = 0; it < 200; ++it) {
    const double ey = std::exp(y);
    const double f = y * ey - c;
    if (f > 0) hi = y; else lo = y;
    const double step = f / (ey * (1.0 + y));
    double next = y - step;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - y) <= 1e-17 * std::max(1.0, y)) return next;
    y = next;
  }
  return y;
}

double scalar_example_oracle(double e, double t) {
  if (e == 0.0) return 0.0;
  const double e2 = e * e;
  const double c = e2 * std::exp(e2 - 2.0 * t);
  const double y = solve_y_exp_y(c);
  return std::copysign(std::sqrt(y), e);
}

double scalar_example_metric(double e, double q) {
  const double e2 = e * e;
  if (e2 < 1e-8) return q * 0.5 * (1.0 + 1.5 * e2);
  return q * 0.5 * std::log1p(e2) * (1.0 + e2) * (1.0 + e2) / e2;
}

double scalar_example_metric_quadrature(double e, double q, double horizon) {
  auto dF = [](double y) {
    const double y2 = y * y;
    return (y2 - 1.0) / ((1.0 + y2) * (1.0 + y2));
  };
  auto integrand = [&](double s) {
    const double inner = gauss_kronrod([&](double r) { return dF(scalar_example_oracle(e, r)); }, 0.0, s, 1e-13);
    return std::exp(2.0 * inner);
  };
  // Split the outer range so the fast initial transient is resolved.
  double total = 0.0;
  double a = 0.0;
  for (double b : {1.0, 4.0, 10.0, 25.0, horizon}) {
    if (b <= a) continue;
    total += gauss_kronrod(integrand, a, std::min(b, horizon), 1e-12);
    a = b;
  }
  return q * total;
}

CounterexampleValue counterexample_oracle(double e0, double x0, double t, double lam, double mu, double de0,
                                          double dx0) {
  CounterexampleValue v{};
  if (mu == 0.0) {
    const double rate = lam + x0 * std::sin(x0);
    v.X = x0;
    v.phi = std::exp(-rate * t);
    v.E = v.phi * e0;
    // d/dx0 of -(x0 sin x0) t.
    v.dE = v.phi * (de0 - e0 * dx0 * t * (std::sin(x0) + x0 * std::cos(x0)));
    return v;
  }
  const double g = std::exp(mu * t);
  v.X = x0 * g;
  v.phi = std::exp(-lam * t + (std::cos(v.X) - std::cos(x0)) / mu);
  v.E = v.phi * e0;
  v.dE = v.phi * (de0 - e0 * dx0 * (g * std::sin(v.X) - std::sin(x0)) / mu);
  return v;
}

double counterexample_phi_quadrature(double x0, double t, double lam, double mu) {
  auto rate = [&](double s) {
    const double X = x0 * std::exp(mu * s);
    return X * std::sin(X);
  };
  // Panels keep the oscillation count per adaptive call moderate.
  double integral = 0.0;
  const int panels = std::max(1, static_cast<int>(std::ceil(4.0 * t * std::max(1.0, mu))));
  for (int k = 0; k < panels; ++k)
    integral += gauss_kronrod(rate, t * k / panels, t * (k + 1) / panels, 1e-13, 60);
  return std::exp(-lam * t - integral);
}

Matrix LinearBaseline::expm(double t) const { return (A * t).exp(); }

LinearBaseline linear_baseline(const Matrix& A, const Matrix& Q) {
  const auto n = A.rows();
  Eigen::EigenSolver<Matrix> es(A, false);
  if (es.eigenvalues().real().maxCoeff() >= 0.0) throw Error("linear baseline needs a Hurwitz matrix");
  const Matrix I = Matrix::Identity(n, n);
  Matrix K = Matrix::Zero(n * n, n * n);
  // vec(A^T P + P A) = (I kron A^T + A^T kron I) vec(P), column-major vec.
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      K.block(i * n, j * n, n, n) += I(i, j) * A.transpose();
      K.block(i * n, j * n, n, n) += A(j, i) * I;
    }
  const Eigen::VectorXd rhs = -Eigen::Map<const Eigen::VectorXd>(Q.data(), n * n);
  const Eigen::VectorXd p = K.fullPivLu().solve(rhs);
  LinearBaseline out;
  out.A = A;
  out.P = Eigen::Map<const Matrix>(p.data(), n, n);
  return out;
}

namespace {

constexpr double kXgk[8] = {0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
                            0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
                            0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
                            0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr double kWgk[8] = {0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
                            0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
                            0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
                            0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr double kWg[4] = {0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                           0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

double gk_recurse(const std::function<double(double)>& f, double a, double b, double tol, int depth) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  const double fc = f(c);
  double kronrod = kWgk[7] * fc;
  double gauss = kWg[3] * fc;
  for (int k = 0; k < 7; ++k) {
    const double x = h * kXgk[k];
    const double s = f(c - x) + f(c + x);
    kronrod += kWgk[k] * s;
    if (k % 2 == 1) gauss += kWg[k / 2] * s;
  }
  kronrod *= h;
  gauss *= h;
  if (depth <= 0 || std::abs(kronrod - gauss) <= std::max(tol, 1e-15 * std::abs(kronrod))) return kronrod;
  return gk_recurse(f, a, c, 0.5 * tol, depth - 1) + gk_recurse(f, c, b, 0.5 * tol, depth - 1);
}

}  // namespace

double gauss_kronrod(const std::function<double(double)>& f, double a, double b, double tol, int max_depth) {
  if (a == b) return 0.0;
  return gk_recurse(f, a, b, tol, max_depth);
}

}  // namespace lyap::catalog
