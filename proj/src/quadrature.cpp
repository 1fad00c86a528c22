#include "lyap/quadrature.hpp"

#include <map>
#include <numbers>

#include "lyap/error.hpp"

namespace lyap {

namespace {

GaussRule compute_rule(int m) {
  GaussRule g;
  g.nodes.resize(static_cast<std::size_t>(m));
  g.weights.resize(static_cast<std::size_t>(m));
  for (int i = 0; i < (m + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (m + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0;
      double p1 = x;
      for (int k = 2; k <= m; ++k) {
        const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = pk;
      }
      dp = m * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // Recompute the derivative at the converged node.
    double p0 = 1.0;
    double p1 = x;
    for (int k = 2; k <= m; ++k) {
      const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = pk;
    }
    dp = m * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    g.nodes[static_cast<std::size_t>(i)] = -x;
    g.nodes[static_cast<std::size_t>(m - 1 - i)] = x;
    g.weights[static_cast<std::size_t>(i)] = w;
    g.weights[static_cast<std::size_t>(m - 1 - i)] = w;
  }
  return g;
}

}  // namespace

const GaussRule& gauss_legendre(int m) {
  if (m < 2 || m > 64) throw Error("Gauss-Legendre order must lie in 2..64");
  thread_local std::map<int, GaussRule> cache;
  auto it = cache.find(m);
  if (it == cache.end()) it = cache.emplace(m, compute_rule(m)).first;
  return it->second;
}

}  // namespace lyap
