#include "lyap/dynamics.hpp"

#include <algorithm>
#include <cstdio>
#include <ostream>

namespace lyap {

namespace {

OdeOptions<double> ode_options(const FlowOptions& opt, Eigen::Index monitored) {
  if (!(opt.tol > 1e-14 && opt.tol < 1e-2)) throw Error("integration tolerance must lie in (1e-14, 1e-2)");
  OdeOptions<double> o;
  o.rtol = opt.tol;
  o.atol = opt.tol;
  o.blowup = opt.blowup;
  o.monitored = monitored;
  return o;
}

void check_horizon(double T) {
  if (!(T >= 0.0) || !std::isfinite(T)) throw Error("horizon must be finite and non-negative");
}

template <class Rhs>
Trajectory run(Rhs&& rhs, Vector y, double T, const FlowOptions& opt, int dim, int aux, int phi) {
  check_horizon(T);
  Trajectory traj(dim, aux, phi);
  traj.push_node(0.0, y);
  DormandPrince<double> dp(y.size(), ode_options(opt, dim));
  dp.integrate(rhs, 0.0, T, y, [&](double t, const Vector& yt) {
    traj.push_step(dp.step_begin(), dp.step_size(), dp);
    traj.push_node(t, yt);
  });
  traj.set_error(opt.tol * dp.max_error());
  return traj;
}

// Right-hand side of the lifted system [e; vec(Phi)].
struct VariationalRhs {
  const SystemModel& model;
  int n;
  Vector e;
  Vector f;
  Matrix J;
  void operator()(double, const Vector& y, Vector& dy) {
    e = y.head(n);
    model.evaluate(e, f, J);
    dy.head(n) = f;
    Eigen::Map<const Matrix> Phi(y.data() + n, n, n);
    Eigen::Map<Matrix> dPhi(dy.data() + n, n, n);
    dPhi.noalias() = J * Phi;
  }
};

struct TransverseRhs {
  const TransverseModel& model;
  int ne;
  int nx;
  Vector z;
  Vector fz;
  Vector w;
  Vector fw;
  Matrix Jw;
  void operator()(double, const Vector& y, Vector& dy) {
    const int n = ne + nx;
    z = y.head(n);
    model.full().evaluate(z, fz);
    dy.head(n) = fz;
    w.setZero(n);
    w.tail(nx) = y.segment(n, nx);
    model.full().evaluate(w, fw, Jw);
    dy.segment(n, nx) = fw.tail(nx);
    Eigen::Map<const Matrix> Phi(y.data() + n + nx, ne, ne);
    Eigen::Map<Matrix> dPhi(dy.data() + n + nx, ne, ne);
    dPhi.noalias() = Jw.topLeftCorner(ne, ne) * Phi;
  }
};

Vector lifted_initial(const Vector& e0) {
  const auto n = e0.size();
  Vector y(n + n * n);
  y.head(n) = e0;
  Eigen::Map<Matrix>(y.data() + n, n, n).setIdentity();
  return y;
}

void check_dim(const Vector& v, int n, const char* what) {
  if (v.size() != n) throw Error(std::string(what) + " has the wrong dimension");
}

}  // namespace

Trajectory::Trajectory(int dim, int aux_dim, int phi_dim) : dim_(dim), aux_(aux_dim), phi_(phi_dim) {}

Matrix Trajectory::node_phi(std::size_t k) const {
  if (!phi_) throw Error("trajectory carries no transition matrix");
  return Eigen::Map<const Matrix>(nodes_[k].data() + dim_ + aux_, phi_, phi_);
}

Matrix Trajectory::phi(double t) const {
  if (!phi_) throw Error("trajectory carries no transition matrix");
  const Vector y = raw(t);
  return Eigen::Map<const Matrix>(y.data() + dim_ + aux_, phi_, phi_);
}

void Trajectory::push_step(double t0, double h, const DormandPrince<double>& stepper) {
  Matrix c(stepper.coefficient(0).size(), 5);
  for (int i = 0; i < 5; ++i) c.col(i) = stepper.coefficient(i);
  step_t0_.push_back(t0);
  step_h_.push_back(h);
  step_coeff_.push_back(std::move(c));
}

Vector Trajectory::raw(double t) const {
  if (times_.empty()) throw Error("empty trajectory");
  const double tol = 1e-12 * std::max(1.0, std::abs(times_.back()));
  if (t < times_.front() - tol || t > times_.back() + tol)
    throw Error("time " + std::to_string(t) + " outside the trajectory");
  if (step_t0_.empty()) return nodes_.front();
  // Step k covers [times_[k], times_[k+1]].
  auto it = std::upper_bound(times_.begin(), times_.end(), t);
  std::size_t k = it == times_.begin() ? 0 : static_cast<std::size_t>(it - times_.begin()) - 1;
  k = std::min(k, step_t0_.size() - 1);
  if (t == times_[k]) return nodes_[k];
  const double th = std::clamp((t - step_t0_[k]) / step_h_[k], 0.0, 1.0);
  const double th1 = 1.0 - th;
  const Matrix& c = step_coeff_[k];
  return c.col(0) + th * (c.col(1) + th1 * (c.col(2) + th * (c.col(3) + th1 * c.col(4))));
}

void Trajectory::write_csv(std::ostream& out) const {
  out << "t";
  for (int i = 0; i < dim_; ++i) out << ",e_" << i + 1;
  for (int i = 0; i < phi_; ++i)
    for (int j = 0; j < phi_; ++j) out << ",phi_" << i + 1 << j + 1;
  out << "\n";
  char buf[40];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out << buf;
  };
  for (std::size_t k = 0; k < size(); ++k) {
    put(times_[k]);
    for (int i = 0; i < dim_; ++i) {
      out << ",";
      put(nodes_[k][i]);
    }
    if (phi_) {
      const Matrix P = node_phi(k);
      for (int i = 0; i < phi_; ++i)
        for (int j = 0; j < phi_; ++j) {
          out << ",";
          put(P(i, j));
        }
    }
    out << "\n";
  }
}

Trajectory flow(const SystemModel& model, const Vector& e0, double T, double tol) {
  return flow(model, e0, T, FlowOptions{tol});
}

Trajectory flow(const SystemModel& model, const Vector& e0, double T, const FlowOptions& opt) {
  check_dim(e0, model.dim(), "initial state");
  auto rhs = [&model](double, const Vector& y, Vector& dy) { model.evaluate(y, dy); };
  return run(rhs, e0, T, opt, model.dim(), 0, 0);
}

Trajectory variational_flow(const SystemModel& model, const Vector& e0, double T, double tol) {
  return variational_flow(model, e0, T, FlowOptions{tol});
}

Trajectory variational_flow(const SystemModel& model, const Vector& e0, double T, const FlowOptions& opt) {
  check_dim(e0, model.dim(), "initial state");
  const int n = model.dim();
  VariationalRhs rhs{model, n, Vector(n), Vector(n), Matrix(n, n)};
  return run(rhs, lifted_initial(e0), T, opt, n, 0, n);
}

Trajectory transverse_flow(const TransverseModel& model, const Vector& e0, const Vector& x0, double T,
                           double tol) {
  return transverse_flow(model, e0, x0, T, FlowOptions{tol});
}

Trajectory transverse_flow(const TransverseModel& model, const Vector& e0, const Vector& x0, double T,
                           const FlowOptions& opt) {
  const int ne = model.e_dim();
  const int nx = model.x_dim();
  check_dim(e0, ne, "transverse e0");
  check_dim(x0, nx, "transverse x0");
  Vector y(ne + 2 * nx + ne * ne);
  y.head(ne) = e0;
  y.segment(ne, nx) = x0;
  y.segment(ne + nx, nx) = x0;
  Eigen::Map<Matrix>(y.data() + ne + 2 * nx, ne, ne).setIdentity();
  TransverseRhs rhs{model, ne, nx, {}, {}, {}, {}, {}};
  return run(rhs, std::move(y), T, opt, ne + nx, nx, ne);
}

Vector flow_endpoint(const SystemModel& model, const Vector& e0, double T, const FlowOptions& opt) {
  check_dim(e0, model.dim(), "initial state");
  check_horizon(T);
  Vector y = e0;
  DormandPrince<double> dp(y.size(), ode_options(opt, model.dim()));
  dp.integrate([&model](double, const Vector& s, Vector& ds) { model.evaluate(s, ds); }, 0.0, T, y);
  return y;
}

std::pair<Vector, Matrix> variational_endpoint(const SystemModel& model, const Vector& e0, double T,
                                               const FlowOptions& opt) {
  check_dim(e0, model.dim(), "initial state");
  check_horizon(T);
  const int n = model.dim();
  Vector y = lifted_initial(e0);
  VariationalRhs rhs{model, n, Vector(n), Vector(n), Matrix(n, n)};
  DormandPrince<double> dp(y.size(), ode_options(opt, n));
  dp.integrate(rhs, 0.0, T, y);
  return {y.head(n), Eigen::Map<const Matrix>(y.data() + n, n, n)};
}

}  // namespace lyap
