#include "lyap/sampling.hpp"

#include <atomic>
#include <cmath>
#include <mutex>
#include <numbers>
#include <random>

#include "lyap/error.hpp"

namespace lyap {

namespace {

constexpr int kPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71};

double radical_inverse(std::uint64_t i, int base) {
  double f = 1.0;
  double r = 0.0;
  while (i > 0) {
    f /= base;
    r += f * static_cast<double>(i % static_cast<std::uint64_t>(base));
    i /= static_cast<std::uint64_t>(base);
  }
  return r;
}

double unit_double(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

// Unit direction from uniforms: sign in 1-D, angle in 2-D, Box-Muller otherwise.
Vector direction(const Vector& u, int dim) {
  Vector d(dim);
  if (dim == 1) {
    d[0] = u[0] < 0.5 ? -1.0 : 1.0;
    return d;
  }
  if (dim == 2) {
    const double a = 2.0 * std::numbers::pi * u[0];
    d << std::cos(a), std::sin(a);
    return d;
  }
  for (int i = 0; i < dim; i += 2) {
    const double r = std::sqrt(-2.0 * std::log(std::max(u[i], 1e-300)));
    const double a = 2.0 * std::numbers::pi * u[i + 1];
    d[i] = r * std::cos(a);
    if (i + 1 < dim) d[i + 1] = r * std::sin(a);
  }
  const double n = d.norm();
  if (n == 0.0) {
    d.setZero();
    d[0] = 1.0;
    return d;
  }
  return d / n;
}

int direction_coords(int dim) { return dim <= 2 ? 1 : dim + (dim % 2); }

std::atomic<int> g_threads{0};

}  // namespace

Halton::Halton(int dim, std::uint64_t seed) {
  if (dim < 1 || dim > static_cast<int>(std::size(kPrimes)))
    throw Error("Halton dimension must lie in 1.." + std::to_string(std::size(kPrimes)));
  std::mt19937_64 rng(seed);
  shift_.resize(static_cast<std::size_t>(dim));
  for (double& s : shift_) s = unit_double(rng);
}

Vector Halton::next() {
  Vector p(dim());
  for (int k = 0; k < dim(); ++k) {
    const double v = radical_inverse(index_, kPrimes[k]) + shift_[static_cast<std::size_t>(k)];
    p[k] = v - std::floor(v);
  }
  ++index_;
  return p;
}

std::vector<Vector> ball_samples(int dim, double radius, int count, std::uint64_t seed) {
  if (radius < 0.0 || count < 0) throw Error("ball sampling needs radius >= 0 and count >= 0");
  const int nd = direction_coords(dim);
  Halton h(nd + 1, seed);
  std::vector<Vector> out;
  out.reserve(static_cast<std::size_t>(count));
  const int on_sphere = (count + 1) / 2;
  for (int i = 0; i < count; ++i) {
    const Vector u = h.next();
    const double r = i < on_sphere ? radius : radius * std::pow(u[nd], 1.0 / dim);
    out.push_back(r * direction(u, dim));
  }
  return out;
}

std::vector<Vector> sphere_directions(int dim, int count, std::uint64_t seed) {
  Halton h(direction_coords(dim), seed);
  std::vector<Vector> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) out.push_back(direction(h.next(), dim));
  return out;
}

std::vector<Vector> box_samples(const Vector& lo, const Vector& hi, int count, std::uint64_t seed) {
  Halton h(static_cast<int>(lo.size()), seed);
  std::vector<Vector> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i)
    out.push_back(lo + (hi - lo).cwiseProduct(h.next()));
  return out;
}

int max_threads() {
  const int n = g_threads.load();
  if (n > 0) return n;
  return std::max(1u, std::thread::hardware_concurrency());
}

void set_max_threads(int n) { g_threads.store(std::max(0, n)); }

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
  const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(max_threads()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex mutex;
  std::size_t failed_at = n;
  std::exception_ptr failure;
  auto work = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(mutex);
        if (i < failed_at) {
          failed_at = i;
          failure = std::current_exception();
        }
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace lyap
