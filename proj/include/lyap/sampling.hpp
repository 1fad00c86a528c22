#pragma once

#include <cstdint>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

#include "lyap/types.hpp"

namespace lyap {

/// Halton sequence with a Cranley-Patterson rotation drawn from a seeded
/// mt19937_64, so different seeds give different but reproducible point sets.
class Halton {
 public:
  Halton(int dim, std::uint64_t seed);
  /// Next point in [0,1)^dim.
  Vector next();
  int dim() const noexcept { return static_cast<int>(shift_.size()); }

 private:
  std::vector<double> shift_;
  std::uint64_t index_ = 1;
};

/// `count` points in the closed ball of radius r: the first half on the
/// sphere |e| = r, the rest spread through the ball.
std::vector<Vector> ball_samples(int dim, double radius, int count, std::uint64_t seed);
/// `count` unit vectors.
std::vector<Vector> sphere_directions(int dim, int count, std::uint64_t seed);
/// `count` points in the box [lo, hi].
std::vector<Vector> box_samples(const Vector& lo, const Vector& hi, int count, std::uint64_t seed);

/// Upper bound on worker threads used by parallel_for (>= 1).
int max_threads();
void set_max_threads(int n);

/// Run body(i) for i in [0, n) on up to max_threads() threads. Results must
/// be written to per-index slots; reductions happen afterwards in index order.
/// If any call throws, the exception from the smallest index is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace lyap
