#include "lyap/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>

#include "lyap/dynamics.hpp"
#include "lyap/linalg.hpp"
#include "lyap/sampling.hpp"

namespace lyap {

namespace {

constexpr int kGrid = 256;

// Magnitude m(t) of one sampled solution on its integration nodes and a
// uniform grid, sorted by time.
struct Curve {
  std::vector<double> t;
  std::vector<double> m;
};

template <class Measure>
Curve sample_curve(const Trajectory& traj, double T, Measure&& measure) {
  std::vector<std::pair<double, double>> pts;
  pts.reserve(traj.size() + kGrid + 1);
  for (std::size_t k = 0; k < traj.size(); ++k) pts.emplace_back(traj.times()[k], measure(traj, traj.times()[k], k));
  for (int g = 1; g < kGrid; ++g) {
    const double t = T * g / kGrid;
    pts.emplace_back(t, measure(traj, t, std::size_t(-1)));
  }
  std::sort(pts.begin(), pts.end());
  Curve c;
  for (const auto& [t, m] : pts) {
    c.t.push_back(t);
    c.m.push_back(m);
  }
  return c;
}

// Tail rate: slope of a least-squares line through the vertices of the
// upper convex hull of (t, log m) on [T'/2, T']. For an oscillating decay the
// vertices sit on the peaks, so zeros and troughs do not bias the slope.
// T' is the last time m stays above `floor`; below it the integration
// error dominates.
double tail_rate(const Curve& c, double T, double floor) {
  for (std::size_t i = c.t.size(); i-- > 1;)
    if (c.m[i] >= floor) {
      T = std::min(T, c.t[i]);
      break;
    }
  std::vector<std::pair<double, double>> hull;
  auto cross = [](const std::pair<double, double>& o, const std::pair<double, double>& a,
                  const std::pair<double, double>& b) {
    return (a.first - o.first) * (b.second - o.second) - (a.second - o.second) * (b.first - o.first);
  };
  for (std::size_t i = 0; i < c.t.size(); ++i) {
    if (c.t[i] < 0.5 * T || c.t[i] > T) continue;
    const std::pair<double, double> p{c.t[i], std::log(std::max(c.m[i], 1e-300))};
    if (!hull.empty() && p.first == hull.back().first) {
      if (p.second <= hull.back().second) continue;
      hull.pop_back();
    }
    while (hull.size() >= 2 && cross(hull[hull.size() - 2], hull.back(), p) >= 0) hull.pop_back();
    hull.push_back(p);
  }
  if (hull.size() < 2) return 0.0;
  double st = 0, sy = 0, stt = 0, sty = 0;
  for (const auto& [t, y] : hull) {
    st += t;
    sy += y;
    stt += t * t;
    sty += t * y;
  }
  const double count = double(hull.size());
  const double denom = count * stt - st * st;
  if (denom <= 0) return 0.0;
  return -(count * sty - st * sy) / denom;
}

double sup_weighted(const Curve& c, double lambda, double* at = nullptr) {
  double best = 0.0;
  for (std::size_t i = 0; i < c.t.size(); ++i) {
    const double v = c.m[i] * std::exp(lambda * c.t[i]);
    if (v > best) {
      best = v;
      if (at) *at = c.t[i];
    }
  }
  return best;
}

double value_at(const Curve& c, double t) {
  auto it = std::lower_bound(c.t.begin(), c.t.end(), t);
  if (it == c.t.end()) return c.m.back();
  return c.m[static_cast<std::size_t>(it - c.t.begin())];
}

std::vector<double> as_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

std::string describe(const Vector& v) {
  std::ostringstream s;
  s << "(";
  for (Eigen::Index i = 0; i < v.size(); ++i) s << (i ? ", " : "") << v[i];
  s << ")";
  return s.str();
}

void check_options(const EstimateOptions& opt) {
  if (opt.samples < 1) throw Error("sample count must be positive");
  if (!(opt.horizon > 0)) throw Error("horizon must be positive");
  if (!(opt.margin > 0 && opt.margin < 1)) throw Error("rate margin must lie in (0, 1)");
}

// A sampled solution together with its initial point (for witnesses).
struct Sample {
  Vector point;
  Curve curve;
  bool escaped = false;
  std::string failure;
};

using CurveMaker = std::function<Curve(const Vector&)>;

std::vector<Sample> run_samples(const std::vector<Vector>& points, const CurveMaker& make) {
  std::vector<Sample> out(points.size());
  parallel_for(points.size(), [&](std::size_t i) {
    out[i].point = points[i];
    try {
      out[i].curve = make(points[i]);
    } catch (const NotForwardComplete& ex) {
      out[i].escaped = true;
      out[i].failure = ex.what();
    } catch (const StiffnessError& ex) {
      out[i].escaped = true;
      out[i].failure = ex.what();
    }
  });
  return out;
}

// Drop samples at the origin, where relative quantities are undefined.
std::vector<Vector> nonzero(std::vector<Vector> pts) {
  pts.erase(std::remove_if(pts.begin(), pts.end(), [](const Vector& v) { return v.norm() == 0.0; }), pts.end());
  return pts;
}

struct RateFit {
  double lambda_fit = std::numeric_limits<double>::infinity();
  Witness slowest;
};

// Minimal tail rate over samples; throws Falsified on the first
// non-decaying sample (in sample order).
RateFit fit_rates(const std::vector<Sample>& samples, double T, double tol, const std::string& label) {
  RateFit fit;
  for (const Sample& s : samples) {
    if (s.escaped)
      throw Falsified(label + " falsified at " + describe(s.point) + ": " + s.failure, as_std(s.point));
    const double rate = tail_rate(s.curve, T, 1e4 * tol * s.curve.m.front());
    const double end = s.curve.m.back();
    if (!(rate > 0.0) || end >= s.curve.m.front())
      throw Falsified(label + " falsified at " + describe(s.point) + ": magnitude " + std::to_string(end) +
                          " at t = " + std::to_string(T) + ", tail rate " + std::to_string(rate),
                      as_std(s.point));
    if (rate < fit.lambda_fit) {
      fit.lambda_fit = rate;
      fit.slowest = {"slowest tail rate", s.point, T, rate};
    }
  }
  return fit;
}

Witness largest_gain(const std::vector<Sample>& samples, double lambda, double* gain) {
  Witness w{"largest gain", Vector(), 0.0, 0.0};
  *gain = 0.0;
  for (const Sample& s : samples) {
    double at = 0.0;
    const double g = sup_weighted(s.curve, lambda, &at);
    if (g > *gain) {
      *gain = g;
      w.point = s.point;
      w.time = at;
      w.value = g;
    }
  }
  return w;
}

FlowOptions flow_options(const EstimateOptions& opt) { return FlowOptions{opt.tol}; }

Curve relative_state_curve(const SystemModel& model, const Vector& e0, const EstimateOptions& opt) {
  const Trajectory traj = flow(model, e0, opt.horizon, flow_options(opt));
  const double n0 = e0.norm();
  return sample_curve(traj, opt.horizon, [&](const Trajectory& tr, double t, std::size_t k) {
    return (k != std::size_t(-1) ? tr.node_state(k) : tr.state(t)).norm() / n0;
  });
}

Curve phi_norm_curve(const SystemModel& model, const Vector& e0, const EstimateOptions& opt, int rows) {
  const Trajectory traj = variational_flow(model, e0, opt.horizon, flow_options(opt));
  return sample_curve(traj, opt.horizon, [&](const Trajectory& tr, double t, std::size_t k) {
    const Matrix P = k != std::size_t(-1) ? tr.node_phi(k) : tr.phi(t);
    return spectral_norm(P.topRows(rows));
  });
}

std::vector<double> sorted_radii(std::vector<double> radii) {
  if (radii.empty()) throw Error("radii grid is empty");
  std::sort(radii.begin(), radii.end());
  for (double r : radii)
    if (!(r > 0)) throw Error("radii must be positive");
  return radii;
}

}  // namespace

double DecayEstimate::gain(double s, double slack) const {
  if (gain_table.empty()) throw NumericalError("decay estimate has no gain table");
  if (gain_table.size() == 1 && gain_table[0].s == 0.0) return gain_table[0].k;
  for (const auto& row : gain_table)
    if (s <= row.s) return row.k;
  if (s <= gain_table.back().s * (1.0 + slack)) return gain_table.back().k;
  throw NumericalError("decay data insufficient: |e| = " + std::to_string(s) + " beyond tabulated radius " +
                       std::to_string(gain_table.back().s));
}

DecayEstimate estimate_les(const SystemModel& model, double radius, const EstimateOptions& opt) {
  check_options(opt);
  if (!(radius > 0)) throw Error("LES radius must be positive");
  model.require_equilibrium();
  const auto points = nonzero(ball_samples(model.dim(), radius, opt.samples, opt.seed));
  const auto samples =
      run_samples(points, [&](const Vector& e0) { return relative_state_curve(model, e0, opt); });

  DecayEstimate est;
  const RateFit fit = fit_rates(samples, opt.horizon, opt.tol, "LES");
  est.lambda_fit = fit.lambda_fit;
  est.lambda = opt.margin * fit.lambda_fit;
  double k = 0.0;
  est.witnesses.push_back(largest_gain(samples, est.lambda, &k));
  est.witnesses.push_back(fit.slowest);
  est.gain_table = {{radius, k}};
  est.radius = radius;
  est.samples = static_cast<int>(points.size());
  est.horizon = opt.horizon;
  est.seed = opt.seed;
  return est;
}

DecayEstimate estimate_gain_function(const SystemModel& model, const std::vector<double>& radii_in,
                                     const DecayEstimate& les, const EstimateOptions& opt) {
  check_options(opt);
  const auto radii = sorted_radii(radii_in);
  const double lambda = les.lambda;
  if (!(lambda > 0)) throw Error("gain estimation needs a positive rate");

  DecayEstimate est;
  est.lambda_fit = les.lambda_fit;
  est.lambda = lambda;
  est.radius = radii.back();
  est.horizon = opt.horizon;
  est.seed = opt.seed;
  double running = les.max_gain();
  for (std::size_t j = 0; j < radii.size(); ++j) {
    const auto points = nonzero(ball_samples(model.dim(), radii[j], opt.samples, opt.seed + j));
    const auto samples =
        run_samples(points, [&](const Vector& e0) { return relative_state_curve(model, e0, opt); });
    for (const Sample& s : samples) {
      if (s.escaped)
        throw Falsified("global attractivity falsified at " + describe(s.point) + ": " + s.failure,
                        as_std(s.point));
      // c(e,t) = |E| exp(lambda t) / |e| still growing tenfold over the
      // last three quarters of the horizon is read as unbounded.
      const double early = value_at(s.curve, 0.25 * opt.horizon) * std::exp(lambda * 0.25 * opt.horizon);
      const double late = s.curve.m.back() * std::exp(lambda * opt.horizon);
      if (late >= 10.0 * early && late > 10.0)
        throw Falsified("global attractivity falsified at " + describe(s.point) + ": c(e,t) grows from " +
                            std::to_string(early) + " to " + std::to_string(late),
                        as_std(s.point));
    }
    double cbar = 0.0;
    Witness w = largest_gain(samples, lambda, &cbar);
    w.what = "sup c at s = " + std::to_string(radii[j]);
    est.witnesses.push_back(w);
    running = std::max(running, cbar);
    est.gain_table.push_back({radii[j], running});
    est.samples += static_cast<int>(points.size());
  }
  return est;
}

DecayEstimate estimate_linearized_decay(const SystemModel& model, const std::vector<double>& radii_in,
                                        const EstimateOptions& opt) {
  check_options(opt);
  const auto radii = sorted_radii(radii_in);
  const int n = model.dim();
  std::vector<std::vector<Sample>> per_radius;
  DecayEstimate est;
  RateFit overall;
  for (std::size_t j = 0; j < radii.size(); ++j) {
    auto points = ball_samples(n, radii[j], opt.samples, opt.seed + j);
    if (j == 0) points.push_back(Vector::Zero(n));
    per_radius.push_back(
        run_samples(points, [&](const Vector& e0) { return phi_norm_curve(model, e0, opt, n); }));
    const RateFit fit = fit_rates(per_radius.back(), opt.horizon, opt.tol, "linearized decay");
    if (fit.lambda_fit < overall.lambda_fit) overall = fit;
    est.samples += static_cast<int>(points.size());
  }
  est.lambda_fit = overall.lambda_fit;
  est.lambda = opt.margin * overall.lambda_fit;
  est.witnesses.push_back(overall.slowest);
  double running = 0.0;
  for (std::size_t j = 0; j < radii.size(); ++j) {
    double k = 0.0;
    Witness w = largest_gain(per_radius[j], est.lambda, &k);
    w.what = "sup |Phi| exp(lambda t) at s = " + std::to_string(radii[j]);
    est.witnesses.push_back(w);
    running = std::max(running, k);
    est.gain_table.push_back({radii[j], running});
  }
  est.radius = radii.back();
  est.horizon = opt.horizon;
  est.seed = opt.seed;
  return est;
}

namespace {

std::vector<Vector> joined_samples(const TransverseModel& model, double e_radius, const Box& box, int count,
                                   std::uint64_t seed) {
  if (box.lo.size() != model.x_dim() || box.hi.size() != model.x_dim()) throw Error("x box has the wrong dimension");
  const auto es = ball_samples(model.e_dim(), e_radius, count, seed);
  const auto xs = box_samples(box.lo, box.hi, count, seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<Vector> out;
  for (int i = 0; i < count; ++i) out.push_back(model.join(es[static_cast<std::size_t>(i)], xs[static_cast<std::size_t>(i)]));
  return out;
}

}  // namespace

DecayEstimate estimate_les(const TransverseModel& model, double e_radius, const Box& x_box,
                           const EstimateOptions& opt) {
  check_options(opt);
  const int ne = model.e_dim();
  std::vector<Vector> points;
  for (auto& z : joined_samples(model, e_radius, x_box, opt.samples, opt.seed))
    if (z.head(ne).norm() > 0) points.push_back(z);
  const auto samples = run_samples(points, [&](const Vector& z0) {
    const Trajectory traj = flow(model.full(), z0, opt.horizon, flow_options(opt));
    const double n0 = z0.head(ne).norm();
    return sample_curve(traj, opt.horizon, [&](const Trajectory& tr, double t, std::size_t k) {
      return (k != std::size_t(-1) ? tr.node_state(k) : tr.state(t)).head(ne).norm() / n0;
    });
  });
  DecayEstimate est;
  const RateFit fit = fit_rates(samples, opt.horizon, opt.tol, "transverse LES");
  est.lambda_fit = fit.lambda_fit;
  est.lambda = opt.margin * fit.lambda_fit;
  double k = 0.0;
  est.witnesses.push_back(largest_gain(samples, est.lambda, &k));
  est.witnesses.push_back(fit.slowest);
  est.gain_table = {{e_radius, k}};
  est.radius = e_radius;
  est.samples = static_cast<int>(points.size());
  est.horizon = opt.horizon;
  est.seed = opt.seed;
  return est;
}

DecayEstimate estimate_linearized_decay(const TransverseModel& model, double e_radius, const Box& x_box,
                                        const EstimateOptions& opt) {
  check_options(opt);
  const auto points = joined_samples(model, e_radius, x_box, opt.samples, opt.seed);
  const auto samples = run_samples(
      points, [&](const Vector& z0) { return phi_norm_curve(model.full(), z0, opt, model.e_dim()); });
  DecayEstimate est;
  const RateFit fit = fit_rates(samples, opt.horizon, opt.tol, "linearized decay");
  est.lambda_fit = fit.lambda_fit;
  est.lambda = opt.margin * fit.lambda_fit;
  double k = 0.0;
  est.witnesses.push_back(largest_gain(samples, est.lambda, &k));
  est.witnesses.push_back(fit.slowest);
  est.gain_table = {{e_radius, k}};
  est.radius = e_radius;
  est.samples = static_cast<int>(points.size());
  est.horizon = opt.horizon;
  est.seed = opt.seed;
  return est;
}

DecayEstimate estimate_transverse_decay(const TransverseModel& model, const Box& x_box,
                                        const EstimateOptions& opt) {
  check_options(opt);
  const int ne = model.e_dim();
  const auto xs = box_samples(x_box.lo, x_box.hi, opt.samples, opt.seed);
  const auto samples = run_samples(xs, [&](const Vector& x0) {
    const Trajectory traj = transverse_flow(model, Vector::Zero(ne), x0, opt.horizon, flow_options(opt));
    return sample_curve(traj, opt.horizon, [&](const Trajectory& tr, double t, std::size_t k) {
      return spectral_norm(k != std::size_t(-1) ? tr.node_phi(k) : tr.phi(t));
    });
  });
  DecayEstimate est;
  const RateFit fit = fit_rates(samples, opt.horizon, opt.tol, "transverse linear decay");
  est.lambda_fit = fit.lambda_fit;
  est.lambda = opt.margin * fit.lambda_fit;
  double k = 0.0;
  est.witnesses.push_back(largest_gain(samples, est.lambda, &k));
  est.witnesses.push_back(fit.slowest);
  est.gain_table = {{0.0, k}};
  est.radius = 0.0;
  est.samples = static_cast<int>(xs.size());
  est.horizon = opt.horizon;
  est.seed = opt.seed;
  return est;
}

BoundConstants estimate_bound_constants(const TransverseModel& model, double e_radius, const Box& x_box,
                                        int samples, std::uint64_t seed) {
  if (samples < 1) throw Error("sample count must be positive");
  if (!model.full().has_jets()) throw Error("bound constants need second derivatives");
  const int ne = model.e_dim();
  const int nx = model.x_dim();
  struct Level {
    double mu = 0, rho = 0, cee = 0, cxe = 0, cge = 0;
    Vector mu_at, rho_at, c_at;
  };
  auto evaluate_level = [&](int count) {
    Level L;
    const auto xs = box_samples(x_box.lo, x_box.hi, count, seed);
    for (const Vector& x : xs) {
      const Matrix J = model.full().jacobian(model.join(Vector::Zero(ne), x));
      const double mu = spectral_norm(J.topLeftCorner(ne, ne));
      const double rho = spectral_norm(J.bottomRightCorner(nx, nx));
      if (mu > L.mu || L.mu_at.size() == 0) { L.mu = std::max(L.mu, mu); L.mu_at = x; }
      if (rho > L.rho || L.rho_at.size() == 0) { L.rho = std::max(L.rho, rho); L.rho_at = x; }
    }
    double cmax = -1.0;
    for (const Vector& z : joined_samples(model, e_radius, x_box, count, seed + 1)) {
      const auto jets = model.full().jets(z);
      double ee = 0, xe = 0;
      for (int i = 0; i < ne; ++i) {
        ee += jets[i].hess.topLeftCorner(ne, ne).squaredNorm();
        xe += jets[i].hess.block(ne, 0, nx, ne).squaredNorm();
      }
      Matrix Ge(nx, ne);
      for (int i = 0; i < nx; ++i) Ge.row(i) = jets[ne + i].grad.head(ne).transpose();
      ee = std::sqrt(ee);
      xe = std::sqrt(xe);
      const double ge = spectral_norm(Ge);
      L.cee = std::max(L.cee, ee);
      L.cxe = std::max(L.cxe, xe);
      L.cge = std::max(L.cge, ge);
      const double c = std::max({ee, xe, ge});
      if (c > cmax) { cmax = c; L.c_at = z; }
    }
    return L;
  };

  const Level l1 = evaluate_level(samples);
  const Level l4 = evaluate_level(4 * samples);
  auto diverges = [](double a, double b) { return b >= 10.0 * a && b > 1e-12; };
  if (diverges(l1.mu, l4.mu) || diverges(l1.rho, l4.rho) || diverges(l1.cee, l4.cee) ||
      diverges(l1.cxe, l4.cxe) || diverges(l1.cge, l4.cge))
    throw NumericalError("bound likely unbounded on domain: suprema grew tenfold between refinement levels");

  BoundConstants b;
  b.mu = l4.mu;
  b.rho = l4.rho;
  b.c_ee = l4.cee;
  b.c_xe = l4.cxe;
  b.c_ge = l4.cge;
  b.c = std::max({b.c_ee, b.c_xe, b.c_ge});
  b.mu_at = l4.mu_at;
  b.rho_at = l4.rho_at;
  b.c_at = l4.c_at;
  b.e_radius = e_radius;
  b.x_box = x_box;
  b.samples = 4 * samples;
  std::ostringstream d;
  d << "|e| <= " << e_radius << ", x in [" << describe(x_box.lo) << ", " << describe(x_box.hi) << "]";
  b.domain = d.str();
  return b;
}

}  // namespace lyap
