#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>

#include <Eigen/Dense>

#include "lyap/error.hpp"

namespace lyap {

/// Options for the Dormand-Prince integrator. The blow-up bound applies to
/// the first `monitored` state components (all when zero).
template <class Scalar = double>
struct OdeOptions {
  Scalar rtol = Scalar(1e-10);
  Scalar atol = Scalar(1e-10);
  Scalar initial_step = Scalar(0);
  Scalar max_step = std::numeric_limits<Scalar>::infinity();
  Scalar blowup = Scalar(1e8);
  Eigen::Index monitored = 0;
  std::size_t max_steps = 10'000'000;
};

/// Explicit embedded Runge-Kutta 5(4) pair of Dormand and Prince with FSAL,
/// elementary step-size control and the fourth-order continuous extension
/// from Hairer's DOPRI5. All buffers are allocated once per instance.
template <class Scalar = double>
class DormandPrince {
 public:
  using State = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  explicit DormandPrince(Eigen::Index n, OdeOptions<Scalar> options = {})
      : opt_(options), n_(n) {
    for (State* v : {&k1_, &k2_, &k3_, &k4_, &k5_, &k6_, &k7_, &ytmp_, &ynew_, &r1_, &r2_, &r3_, &r4_, &r5_})
      v->setZero(n);
  }

  const OdeOptions<Scalar>& options() const noexcept { return opt_; }
  std::size_t accepted_steps() const noexcept { return accepted_; }
  std::size_t rejected_steps() const noexcept { return rejected_; }
  /// Largest accepted scaled local error estimate.
  Scalar max_error() const noexcept { return max_err_; }

  /// Integrate y from t0 to t1 (either direction). `rhs(t, y, dy)` writes
  /// the derivative; `observe(t, y)` runs after every accepted step and may
  /// call `dense` for values inside the step. y holds the final state.
  template <class Rhs, class Observer>
  void integrate(Rhs&& rhs, Scalar t0, Scalar t1, State& y, Observer&& observe) {
    accepted_ = rejected_ = 0;
    max_err_ = Scalar(0);
    if (t1 == t0) return;
    const Scalar dir = t1 > t0 ? Scalar(1) : Scalar(-1);
    const Eigen::Index monitored = opt_.monitored > 0 ? opt_.monitored : n_;

    rhs(t0, y, k1_);
    Scalar h = opt_.initial_step > 0 ? opt_.initial_step : initial_step(rhs, t0, y, dir);
    h = std::min(h, opt_.max_step);
    Scalar t = t0;
    bool last = false;

    while (!last) {
      if (accepted_ + rejected_ >= opt_.max_steps)
        throw StiffnessError("step budget exhausted at t = " + std::to_string(double(t)));
      if (dir * (t + dir * h - t1) >= Scalar(0)) {
        h = dir * (t1 - t);
        last = true;
      }
      const Scalar min_step = Scalar(16) * std::numeric_limits<Scalar>::epsilon() *
                              std::max(Scalar(1), std::abs(t));
      if (h < min_step)
        throw StiffnessError("step size underflow at t = " + std::to_string(double(t)));

      const Scalar err = attempt(rhs, t, dir * h, y);
      if (err <= Scalar(1)) {
        max_err_ = std::max(max_err_, err);
        t0_ = t;
        h_ = dir * h;
        t = last ? t1 : t + dir * h;
        y.swap(ynew_);
        k1_.swap(k7_);
        ++accepted_;
        if (!y.allFinite() || y.head(monitored).norm() > opt_.blowup)
          throw NotForwardComplete("state norm exceeded " + std::to_string(double(opt_.blowup)) +
                                       " at t = " + std::to_string(double(t)),
                                   double(t));
        observe(t, static_cast<const State&>(y));
        const Scalar fac = err > Scalar(0) ? Scalar(0.9) * std::pow(err, Scalar(-0.2)) : Scalar(10);
        h = std::min(h * std::clamp(fac, Scalar(0.2), Scalar(10)), opt_.max_step);
      } else {
        ++rejected_;
        last = false;
        if (!std::isfinite(err)) {
          h *= Scalar(0.2);
        } else {
          h *= std::max(Scalar(0.2), Scalar(0.9) * std::pow(err, Scalar(-0.2)));
        }
      }
    }
  }

  template <class Rhs>
  void integrate(Rhs&& rhs, Scalar t0, Scalar t1, State& y) {
    integrate(std::forward<Rhs>(rhs), t0, t1, y, [](Scalar, const State&) {});
  }

  /// Dense output inside the most recent accepted step.
  void dense(Scalar t, State& out) const {
    const Scalar th = (t - t0_) / h_;
    const Scalar th1 = Scalar(1) - th;
    out = r1_ + th * (r2_ + th1 * (r3_ + th * (r4_ + th1 * r5_)));
  }
  Scalar step_begin() const noexcept { return t0_; }
  Scalar step_size() const noexcept { return h_; }
  /// Continuous-extension coefficients of the last step (r1..r5).
  const State& coefficient(int i) const {
    switch (i) {
      case 0: return r1_;
      case 1: return r2_;
      case 2: return r3_;
      case 3: return r4_;
      default: return r5_;
    }
  }

 private:
  template <class Rhs>
  Scalar initial_step(Rhs& rhs, Scalar t0, const State& y, Scalar dir) {
    const State sc = (opt_.atol + opt_.rtol * y.array().abs()).matrix();
    const Scalar d0 = rms(y, sc);
    const Scalar d1 = rms(k1_, sc);
    Scalar h0 = (d0 < Scalar(1e-5) || d1 < Scalar(1e-5)) ? Scalar(1e-6) : Scalar(0.01) * d0 / d1;
    ytmp_ = y + dir * h0 * k1_;
    rhs(t0 + dir * h0, ytmp_, k2_);
    const Scalar d2 = rms(k2_ - k1_, sc) / h0;
    const Scalar dm = std::max(d1, d2);
    const Scalar h1 = dm <= Scalar(1e-15) ? std::max(Scalar(1e-6), h0 * Scalar(1e-3))
                                           : std::pow(Scalar(0.01) / dm, Scalar(0.2));
    return std::min(Scalar(100) * h0, h1);
  }

  static Scalar rms(const State& v, const State& sc) {
    return std::sqrt((v.array() / sc.array()).square().mean());
  }

  template <class Rhs>
  Scalar attempt(Rhs& rhs, Scalar t, Scalar h, const State& y) {
    constexpr Scalar c2 = Scalar(1) / 5, c3 = Scalar(3) / 10, c4 = Scalar(4) / 5, c5 = Scalar(8) / 9;
    constexpr Scalar a21 = Scalar(1) / 5;
    constexpr Scalar a31 = Scalar(3) / 40, a32 = Scalar(9) / 40;
    constexpr Scalar a41 = Scalar(44) / 45, a42 = Scalar(-56) / 15, a43 = Scalar(32) / 9;
    constexpr Scalar a51 = Scalar(19372) / 6561, a52 = Scalar(-25360) / 2187, a53 = Scalar(64448) / 6561,
                     a54 = Scalar(-212) / 729;
    constexpr Scalar a61 = Scalar(9017) / 3168, a62 = Scalar(-355) / 33, a63 = Scalar(46732) / 5247,
                     a64 = Scalar(49) / 176, a65 = Scalar(-5103) / 18656;
    constexpr Scalar a71 = Scalar(35) / 384, a73 = Scalar(500) / 1113, a74 = Scalar(125) / 192,
                     a75 = Scalar(-2187) / 6784, a76 = Scalar(11) / 84;
    constexpr Scalar e1 = Scalar(71) / 57600, e3 = Scalar(-71) / 16695, e4 = Scalar(71) / 1920,
                     e5 = Scalar(-17253) / 339200, e6 = Scalar(22) / 525, e7 = Scalar(-1) / 40;
    constexpr Scalar d1 = Scalar(-12715105075.0) / Scalar(11282082432.0),
                     d3 = Scalar(87487479700.0) / Scalar(32700410799.0),
                     d4 = Scalar(-10690763975.0) / Scalar(1880347072.0),
                     d5 = Scalar(701980252875.0) / Scalar(199316789632.0),
                     d6 = Scalar(-1453857185.0) / Scalar(822651844.0),
                     d7 = Scalar(69997945.0) / Scalar(29380423.0);

    ytmp_ = y + h * (a21 * k1_);
    rhs(t + c2 * h, ytmp_, k2_);
    ytmp_ = y + h * (a31 * k1_ + a32 * k2_);
    rhs(t + c3 * h, ytmp_, k3_);
    ytmp_ = y + h * (a41 * k1_ + a42 * k2_ + a43 * k3_);
    rhs(t + c4 * h, ytmp_, k4_);
    ytmp_ = y + h * (a51 * k1_ + a52 * k2_ + a53 * k3_ + a54 * k4_);
    rhs(t + c5 * h, ytmp_, k5_);
    ytmp_ = y + h * (a61 * k1_ + a62 * k2_ + a63 * k3_ + a64 * k4_ + a65 * k5_);
    rhs(t + h, ytmp_, k6_);
    ynew_ = y + h * (a71 * k1_ + a73 * k3_ + a74 * k4_ + a75 * k5_ + a76 * k6_);
    rhs(t + h, ynew_, k7_);

    ytmp_ = h * (e1 * k1_ + e3 * k3_ + e4 * k4_ + e5 * k5_ + e6 * k6_ + e7 * k7_);
    Scalar acc = 0;
    for (Eigen::Index i = 0; i < n_; ++i) {
      const Scalar sc = opt_.atol + opt_.rtol * std::max(std::abs(y[i]), std::abs(ynew_[i]));
      const Scalar q = ytmp_[i] / sc;
      acc += q * q;
    }
    const Scalar err = std::sqrt(acc / Scalar(n_));
    if (!(err <= Scalar(1))) return std::isfinite(err) ? err : std::numeric_limits<Scalar>::infinity();

    r1_ = y;
    r2_ = ynew_ - y;
    r3_ = h * k1_ - r2_;
    r4_ = r2_ - h * k7_ - r3_;
    r5_ = h * (d1 * k1_ + d3 * k3_ + d4 * k4_ + d5 * k5_ + d6 * k6_ + d7 * k7_);
    return err;
  }

  OdeOptions<Scalar> opt_;
  Eigen::Index n_;
  State k1_, k2_, k3_, k4_, k5_, k6_, k7_, ytmp_, ynew_;
  State r1_, r2_, r3_, r4_, r5_;
  Scalar t0_ = 0;
  Scalar h_ = 1;
  std::size_t accepted_ = 0;
  std::size_t rejected_ = 0;
  Scalar max_err_ = 0;
};

}  // namespace lyap
