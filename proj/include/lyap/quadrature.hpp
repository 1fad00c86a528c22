#pragma once

#include <cmath>
#include <utility>
#include <vector>

namespace lyap {

/// Gauss-Legendre nodes and weights on [-1, 1].
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// m-point rule, cached per thread.
const GaussRule& gauss_legendre(int m);

/// Composite Gauss-Legendre over `panels` equal panels of [a, b].
template <class F>
auto integrate_composite(F&& f, double a, double b, int panels, int order = 8) {
  const GaussRule& g = gauss_legendre(order);
  const double w = (b - a) / panels;
  using R = decltype(f(a));
  R sum = f(a) * 0.0;
  for (int p = 0; p < panels; ++p) {
    const double lo = a + p * w;
    for (std::size_t k = 0; k < g.nodes.size(); ++k)
      sum += (0.5 * w * g.weights[k]) * f(lo + 0.5 * w * (g.nodes[k] + 1.0));
  }
  return sum;
}

/// Scalar integral refined by doubling panels until the relative change is
/// at most rel_tol (absolute change at most abs_tol). Returns {value, converged}.
template <class F>
std::pair<double, bool> integrate_refined(F&& f, double a, double b, double rel_tol = 1e-8,
                                          double abs_tol = 1e-14, int order = 8, int max_panels = 4096) {
  int panels = 1;
  double prev = integrate_composite(f, a, b, panels, order);
  while (panels < max_panels) {
    panels *= 2;
    const double cur = integrate_composite(f, a, b, panels, order);
    if (std::abs(cur - prev) <= std::max(rel_tol * std::abs(cur), abs_tol)) return {cur, true};
    prev = cur;
  }
  return {prev, false};
}

}  // namespace lyap
