#include "lyap/riemann.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

#include "lyap/dynamics.hpp"
#include "lyap/linalg.hpp"
#include "lyap/ode.hpp"
#include "lyap/quadrature.hpp"

namespace lyap {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

ChristoffelSymbols zero_symbols(int n) { return ChristoffelSymbols(static_cast<std::size_t>(n), Matrix::Zero(n, n)); }

Vector acceleration(const ChristoffelSymbols& G, const Vector& v) {
  Vector a(v.size());
  for (Eigen::Index l = 0; l < v.size(); ++l) a[l] = -v.dot(G[static_cast<std::size_t>(l)] * v);
  return a;
}

double p_speed(const MetricField& metric, const Vector& g, const Vector& v) {
  return std::sqrt(std::max(0.0, v.dot(metric(g) * v)));
}

OdeOptions<double> geodesic_ode(const GeodesicOptions& opt, Eigen::Index n) {
  OdeOptions<double> o;
  o.rtol = opt.tol;
  o.atol = opt.tol;
  o.monitored = n;
  return o;
}

// Integrates the geodesic system from start = (gamma, v) over [0, L].
Vector shoot(const MetricField& metric, const Vector& start, double L, const GeodesicOptions& opt) {
  const Eigen::Index n = start.size() / 2;
  auto rhs = [&](double, const Vector& y, Vector& dy) {
    dy.head(n) = y.tail(n);
    dy.tail(n) = acceleration(christoffel(metric, y.head(n), opt.christoffel_step), y.tail(n));
  };
  DormandPrince<double> dp(2 * n, geodesic_ode(opt, n));
  Vector y = start;
  dp.integrate(rhs, 0.0, L, y);
  return y;
}

struct BvpResult {
  bool ok = false;
  double length = 0.0;
  double residual = 0.0;
  int iterations = 0;
};

// Multiple shooting on S segments of [0, 1] for gamma(0) = a, gamma(1) = b.
// Unknowns: v_0, then (gamma_k, v_k) for k = 1..S-1.
BvpResult solve_bvp(const MetricField& metric, const Vector& a, const Vector& b, int S, const ShootingOptions& opt) {
  const Eigen::Index n = a.size();
  const Eigen::Index N = n + (S - 1) * 2 * n;
  const double L = 1.0 / S;
  const Vector d = b - a;
  const double tol = opt.tol * (1.0 + d.norm());

  Vector z(N);
  z.head(n) = d;
  for (int k = 1; k < S; ++k) {
    z.segment(n + (k - 1) * 2 * n, n) = a + (double(k) / S) * d;
    z.segment(n + (k - 1) * 2 * n + n, n) = d;
  }
  auto start_of = [&](const Vector& zz, int k) {
    Vector w(2 * n);
    if (k == 0) {
      w.head(n) = a;
      w.tail(n) = zz.head(n);
    } else {
      w = zz.segment(n + (k - 1) * 2 * n, 2 * n);
    }
    return w;
  };
  auto residual = [&](const Vector& zz, std::vector<Vector>* ends_out) {
    Vector r(N);
    std::vector<Vector> ends;
    for (int k = 0; k < S; ++k) ends.push_back(shoot(metric, start_of(zz, k), L, opt.geodesic));
    for (int k = 0; k + 1 < S; ++k) r.segment(k * 2 * n, 2 * n) = ends[k] - start_of(zz, k + 1);
    r.tail(n) = ends.back().head(n) - b;
    if (ends_out) *ends_out = std::move(ends);
    return r;
  };
  auto safe_norm = [&](const Vector& zz) {
    try {
      return residual(zz, nullptr).norm();
    } catch (const Error&) {
      return std::numeric_limits<double>::infinity();
    }
  };

  BvpResult res;
  try {
    std::vector<Vector> ends;
    Vector r = residual(z, &ends);
    for (int it = 0; it <= opt.max_iterations; ++it) {
      res.iterations = it;
      res.residual = r.norm();
      if (res.residual <= tol) {
        res.ok = true;
        break;
      }
      if (it == opt.max_iterations) break;
      // Forward-difference Jacobian, one segment at a time.
      Matrix Jac = Matrix::Zero(N, N);
      for (int k = 0; k < S; ++k) {
        const Vector w = start_of(z, k);
        const Eigen::Index first = k == 0 ? n : 0;
        const Eigen::Index col0 = k == 0 ? -n : n + (k - 1) * 2 * n;
        const Eigen::Index row0 = k * 2 * n;
        const Eigen::Index rows = k + 1 < S ? 2 * n : n;
        for (Eigen::Index i = first; i < 2 * n; ++i) {
          Vector wp = w;
          const double step = 1e-7 * std::max(1.0, std::abs(w[i]));
          wp[i] += step;
          const Vector col = (shoot(metric, wp, L, opt.geodesic) - ends[static_cast<std::size_t>(k)]) / step;
          Jac.block(row0, col0 + i, rows, 1) = col.head(rows);
        }
        if (k + 1 < S) Jac.block(row0, n + k * 2 * n, 2 * n, 2 * n) -= Matrix::Identity(2 * n, 2 * n);
      }
      const Vector dz = Jac.fullPivLu().solve(-r);
      double t = 1.0;
      bool improved = false;
      for (int half = 0; half < 12; ++half, t *= 0.5) {
        const Vector trial = z + t * dz;
        if (safe_norm(trial) < res.residual) {
          z = trial;
          improved = true;
          break;
        }
      }
      if (!improved) break;
      r = residual(z, &ends);
    }
  } catch (const Error&) {
    res.ok = false;
    return res;
  }
  if (!res.ok) return res;
  for (int k = 0; k < S; ++k) {
    const Vector w = start_of(z, k);
    res.length += L * p_speed(metric, w.head(n), w.tail(n));
  }
  return res;
}

}  // namespace

ChristoffelSymbols christoffel(const MetricField& metric, const Vector& e, double h) {
  const int n = static_cast<int>(e.size());
  if (metric.is_constant()) return zero_symbols(n);
  if (!(h > 0)) h = 1e-4 * (1.0 + e.norm());
  const MetricValue base = metric.at(e);
  const double T = base.horizon;
  std::vector<Matrix> dP;
  for (int k = 0; k < n; ++k) {
    Vector ep = e, em = e;
    ep[k] += h;
    em[k] -= h;
    dP.push_back((metric.at(ep, T).P - metric.at(em, T).P) / (2.0 * h));
  }
  Eigen::LLT<Matrix> llt(symmetrize(base.P));
  if (llt.info() != Eigen::Success) throw NumericalError("metric not invertible at the Christoffel point");
  const Matrix Pinv = llt.solve(Matrix::Identity(n, n));
  ChristoffelSymbols G = zero_symbols(n);
  for (int l = 0; l < n; ++l)
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) {
        double s = 0.0;
        for (int m = 0; m < n; ++m) s += Pinv(l, m) * (dP[i](m, j) + dP[j](m, i) - dP[m](i, j));
        G[l](i, j) = 0.5 * s;
        G[l](j, i) = 0.5 * s;
      }
  return G;
}

GeodesicPath geodesic_ivp(const MetricField& metric, const Vector& e, const Vector& v, double s_max, bool normalize,
                          const GeodesicOptions& opt) {
  const Eigen::Index n = e.size();
  if (v.size() != n || n != metric.point_dim()) throw Error("geodesic data has the wrong dimension");
  if (v.norm() == 0) throw Error("geodesic needs a nonzero initial velocity");
  if (!(s_max > 0)) throw Error("geodesic length must be positive");
  Vector v0 = v;
  if (normalize) v0 /= p_speed(metric, e, v);
  GeodesicPath path;
  path.normalized = normalize;
  auto record = [&](double s, const Vector& y) {
    path.s.push_back(s);
    path.points.push_back(y.head(n));
    path.velocities.push_back(y.tail(n));
    path.speed.push_back(p_speed(metric, y.head(n), y.tail(n)));
  };
  Vector y(2 * n);
  y << e, v0;
  record(0.0, y);
  auto rhs = [&](double, const Vector& yy, Vector& dy) {
    dy.head(n) = yy.tail(n);
    dy.tail(n) = acceleration(christoffel(metric, yy.head(n), opt.christoffel_step), yy.tail(n));
  };
  DormandPrince<double> dp(2 * n, geodesic_ode(opt, n));
  try {
    dp.integrate(rhs, 0.0, s_max, y, [&](double s, const Vector& yy) { record(s, yy); });
  } catch (const NumericalError& ex) {
    throw NumericalError(std::string("geodesic left the certified domain: ") + ex.what());
  }
  // Trapezoidal length on the nodes; the speed is constant up to the tolerance.
  for (std::size_t k = 1; k < path.s.size(); ++k)
    path.length += 0.5 * (path.speed[k] + path.speed[k - 1]) * (path.s[k] - path.s[k - 1]);
  return path;
}

double riemannian_length(const MetricField& metric, const std::vector<Vector>& path) {
  if (path.size() < 2) throw Error("a path needs at least two points");
  double total = 0.0;
  for (std::size_t k = 1; k < path.size(); ++k) {
    const Vector a = path[k - 1];
    const Vector d = path[k] - a;
    if (d.norm() == 0) continue;
    auto f = [&](double t) { return p_speed(metric, a + t * d, d); };
    const auto [len, ok] = integrate_refined(f, 0.0, 1.0, 1e-8, 1e-14);
    if (!ok) throw NumericalError("path length quadrature did not converge");
    total += len;
  }
  return total;
}

DistanceValue geodesic_distance(const MetricField& metric, const Vector& a, const Vector& b,
                                const ShootingOptions& opt) {
  if (a.size() != b.size() || a.size() != metric.point_dim()) throw Error("distance endpoints have the wrong dimension");
  DistanceValue dv;
  dv.from = a;
  dv.to = b;
  const Vector d = b - a;
  if (d.norm() == 0) {
    dv.method = "exact";
    return dv;
  }
  if (metric.is_constant()) {
    dv.method = "constant";
    dv.value = std::sqrt(d.dot(metric(a) * d));
    return dv;
  }
  const double straight = riemannian_length(metric, {a, b});
  if (a.size() == 1) {
    dv.method = "exact-1d";
    dv.value = straight;
    return dv;
  }
  for (int S : {1, opt.segments}) {
    const BvpResult r = solve_bvp(metric, a, b, S, opt);
    dv.residual = r.residual;
    dv.iterations += r.iterations;
    if (!r.ok) continue;
    if (r.length > straight * (1 + 1e-9)) break;
    dv.method = S == 1 ? "single-shooting" : "multiple-shooting";
    dv.value = r.length;
    return dv;
  }
  dv.method = "straight-line";
  dv.value = straight;
  dv.upper_bound = true;
  return dv;
}

DistanceValue distance_to_origin(const MetricField& metric, const Vector& e, const ShootingOptions& opt) {
  return geodesic_distance(metric, Vector::Zero(e.size()), e, opt);
}

double metric_upper_bound(const MetricField& metric, double s) {
  const double mu_max = max_eigenvalue(metric.Q());
  switch (metric.variant()) {
    case MetricVariant::along_solutions:
    case MetricVariant::transverse: {
      const DecayEstimate& d = *metric.decay();
      try {
        const double k = metric.variant() == MetricVariant::transverse ? d.max_gain() : d.gain(s);
        return k * k * mu_max / (2.0 * d.lambda);
      } catch (const NumericalError&) {
        return kNaN;
      }
    }
    case MetricVariant::constant:
    case MetricVariant::origin:
      return max_eigenvalue(metric(Vector::Zero(metric.point_dim())));
    default:
      return kNaN;
  }
}

DiniEstimate dini_derivative_V(const MetricField& metric, const Vector& e, const ShootingOptions& opt) {
  DiniEstimate est;
  const DistanceValue V0 = distance_to_origin(metric, e, opt);
  est.V = V0.value;
  est.flagged = V0.upper_bound;
  est.h = {1e-2, 5e-3, 2.5e-3};
  const FlowOptions fo{metric.options().ode_tol};
  for (double h : est.h) {
    const Vector E = flow_endpoint(metric.driver(), e, h, fo);
    const DistanceValue Vh = distance_to_origin(metric, E, opt);
    est.flagged = est.flagged || Vh.upper_bound;
    est.quotients.push_back((Vh.value - V0.value) / h);
  }
  const double R1 = 2.0 * est.quotients[1] - est.quotients[0];
  const double R2 = 2.0 * est.quotients[2] - est.quotients[1];
  est.value = R2;
  est.gap = std::abs(R1 - R2);
  if (est.gap > 1e-3 * std::max(1.0, std::abs(R2)))
    throw NumericalError("Dini estimate unreliable: extrapolants differ by " + std::to_string(est.gap));
  const double pbar = metric_upper_bound(metric, e.norm());
  est.bound = -min_eigenvalue(metric.Q()) * est.V / (2.0 * std::sqrt(pbar));
  return est;
}

ContractionCheck contraction_check(const MetricField& metric, const Vector& e1, const Vector& e2, double h,
                                   const ShootingOptions& opt) {
  if (!(h > 0)) throw Error("contraction step must be positive");
  ContractionCheck c;
  c.h = h;
  const DistanceValue d0 = geodesic_distance(metric, e1, e2, opt);
  const FlowOptions fo{metric.options().ode_tol};
  const DistanceValue d1 = geodesic_distance(metric, flow_endpoint(metric.driver(), e1, h, fo),
                                             flow_endpoint(metric.driver(), e2, h, fo), opt);
  c.distance = d0.value;
  c.distance_after = d1.value;
  c.flagged = d0.upper_bound || d1.upper_bound;
  c.rate = (d1.value - d0.value) / h;
  const double pbar = metric_upper_bound(metric, (e1 - e2).norm() + e2.norm());
  c.bound = -min_eigenvalue(metric.Q()) * c.distance / (2.0 * std::sqrt(pbar));
  return c;
}

void write_geodesic_csv(std::ostream& out, const GeodesicPath& path) {
  const Eigen::Index n = path.points.empty() ? 0 : path.points.front().size();
  out << "s";
  for (Eigen::Index i = 0; i < n; ++i) out << ",gamma_" << i + 1;
  out << ",speed\n";
  char buf[40];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out << buf;
  };
  for (std::size_t k = 0; k < path.s.size(); ++k) {
    put(path.s[k]);
    for (Eigen::Index i = 0; i < n; ++i) {
      out << ",";
      put(path.points[k][i]);
    }
    out << ",";
    put(path.speed[k]);
    out << "\n";
  }
}

void write_distance_csv(std::ostream& out, const std::vector<DistanceValue>& values) {
  if (values.empty()) return;
  const Eigen::Index n = values.front().to.size();
  for (Eigen::Index i = 0; i < n; ++i) out << (i ? "," : "") << "e_" << i + 1;
  out << ",V,upper_bound\n";
  char buf[40];
  for (const DistanceValue& v : values) {
    for (Eigen::Index i = 0; i < n; ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", v.to[i]);
      out << (i ? "," : "") << buf;
    }
    std::snprintf(buf, sizeof buf, "%.17g", v.value);
    out << "," << buf << "," << (v.upper_bound ? 1 : 0) << "\n";
  }
}

}  // namespace lyap
