#pragma once

#include "lyap/types.hpp"

namespace lyap {

/// First-order forward-mode jet: value and gradient.
template <class Scalar>
struct Dual {
  Scalar value{};
  SmallVector<Scalar> grad;
};

/// Second-order Taylor jet at a point: value, gradient and Hessian.
/// The Hessian is kept exactly symmetric.
template <class Scalar>
struct Jet2 {
  Scalar value{};
  SmallVector<Scalar> grad;
  SmallMatrix<Scalar> hess;
};

/// Arithmetic rules shared by plain scalars and jets. `unary` applies the
/// chain rule given f(a), f'(a) and f''(a).
template <class T>
struct JetOps;

template <>
struct JetOps<double> {
  static double constant(int, double c) { return c; }
  static double variable(int, int, double x) { return x; }
  static double value(double a) { return a; }
  static double unary(double, double f, double, double) { return f; }
  static double add(double a, double b) { return a + b; }
  static double sub(double a, double b) { return a - b; }
  static double mul(double a, double b) { return a * b; }
  static double neg(double a) { return -a; }
  static double scale(double a, double c) { return a * c; }
};

template <class Scalar>
struct JetOps<Dual<Scalar>> {
  using D = Dual<Scalar>;
  static D constant(int n, Scalar c) { return {c, SmallVector<Scalar>::Zero(n)}; }
  static D variable(int n, int i, Scalar x) {
    D d{x, SmallVector<Scalar>::Zero(n)};
    d.grad[i] = Scalar(1);
    return d;
  }
  static Scalar value(const D& a) { return a.value; }
  static D unary(const D& a, Scalar f, Scalar d1, Scalar) { return {f, d1 * a.grad}; }
  static D add(const D& a, const D& b) { return {a.value + b.value, a.grad + b.grad}; }
  static D sub(const D& a, const D& b) { return {a.value - b.value, a.grad - b.grad}; }
  static D mul(const D& a, const D& b) {
    return {a.value * b.value, b.value * a.grad + a.value * b.grad};
  }
  static D neg(const D& a) { return {-a.value, -a.grad}; }
  static D scale(const D& a, Scalar c) { return {a.value * c, c * a.grad}; }
};

template <class Scalar>
struct JetOps<Jet2<Scalar>> {
  using J = Jet2<Scalar>;
  static J constant(int n, Scalar c) {
    return {c, SmallVector<Scalar>::Zero(n), SmallMatrix<Scalar>::Zero(n, n)};
  }
  static J variable(int n, int i, Scalar x) {
    J j = constant(n, x);
    j.grad[i] = Scalar(1);
    return j;
  }
  static Scalar value(const J& a) { return a.value; }
  static J unary(const J& a, Scalar f, Scalar d1, Scalar d2) {
    J r{f, d1 * a.grad, d1 * a.hess};
    r.hess.noalias() += d2 * a.grad * a.grad.transpose();
    return symmetrized(std::move(r));
  }
  static J add(const J& a, const J& b) {
    return {a.value + b.value, a.grad + b.grad, a.hess + b.hess};
  }
  static J sub(const J& a, const J& b) {
    return {a.value - b.value, a.grad - b.grad, a.hess - b.hess};
  }
  static J mul(const J& a, const J& b) {
    J r{a.value * b.value, b.value * a.grad + a.value * b.grad,
        b.value * a.hess + a.value * b.hess};
    r.hess.noalias() += a.grad * b.grad.transpose();
    r.hess.noalias() += b.grad * a.grad.transpose();
    return symmetrized(std::move(r));
  }
  static J neg(const J& a) { return {-a.value, -a.grad, -a.hess}; }
  static J scale(const J& a, Scalar c) { return {a.value * c, c * a.grad, c * a.hess}; }

 private:
  // Mirror the lower triangle so the Hessian is symmetric bit for bit.
  static J symmetrized(J r) {
    for (Eigen::Index i = 0; i < r.hess.rows(); ++i)
      for (Eigen::Index j = i + 1; j < r.hess.cols(); ++j) r.hess(i, j) = r.hess(j, i);
    return r;
  }
};

}  // namespace lyap
