#include <atomic>
#include <cmath>
#include <random>
#include <stdexcept>

#include "doctest.h"
#include "lyap/error.hpp"
#include "lyap/linalg.hpp"
#include "lyap/quadrature.hpp"
#include "lyap/sampling.hpp"

using namespace lyap;

namespace {

// Kronecker oracle: (I (x) A^T + A^T (x) I) vec(P) = -vec(Q).
Matrix kron_lyapunov(const Matrix& A, const Matrix& Q) {
  const Eigen::Index n = A.rows();
  Matrix K = Matrix::Zero(n * n, n * n);
  const Matrix I = Matrix::Identity(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      K.block(i * n, j * n, n, n) += I(i, j) * A.transpose();
      K.block(i * n, j * n, n, n) += A(j, i) * I;
    }
  const Vector q = -Eigen::Map<const Vector>(Q.data(), n * n);
  const Vector p = K.fullPivLu().solve(q);
  return Eigen::Map<const Matrix>(p.data(), n, n);
}

}  // namespace

TEST_CASE("lyapunov solve against kronecker oracle") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g;
  for (int n : {1, 2, 3, 5, 8}) {
    for (int trial = 0; trial < 5; ++trial) {
      Matrix A(n, n);
      for (Eigen::Index i = 0; i < A.size(); ++i) A.data()[i] = g(rng);
      A -= (spectral_abscissa(A) + 0.5) * Matrix::Identity(n, n);
      Matrix B(n, n);
      for (Eigen::Index i = 0; i < B.size(); ++i) B.data()[i] = g(rng);
      const Matrix Q = B * B.transpose() + Matrix::Identity(n, n);
      const Matrix P = solve_lyapunov(A, Q);
      const Matrix K = kron_lyapunov(A, Q);
      CHECK((P - K).norm() <= 1e-9 * K.norm());
      CHECK(lyapunov_residual(A, P, Q).norm() <= 1e-10 * Q.norm() * std::max(1.0, P.norm()));
      CHECK(is_positive_definite(P, 1e-10 * P.norm()));
    }
  }
  Matrix S(2, 2);
  S << 0, 1, -1, 0;
  CHECK_THROWS_AS(solve_lyapunov(S, Matrix::Identity(2, 2)), NumericalError);
}

TEST_CASE("spectral helpers") {
  Matrix A(2, 2);
  A << -1, 10, 0, -2;
  CHECK(spectral_abscissa(A) == doctest::Approx(-1.0));
  CHECK(spectral_norm(A) == doctest::Approx(A.jacobiSvd().singularValues()[0]));
  Matrix S(2, 2);
  S << 2, 1, 1, 2;
  CHECK(min_eigenvalue(S) == doctest::Approx(1.0));
  CHECK(max_eigenvalue(S) == doctest::Approx(3.0));
  CHECK(is_positive_definite(S));
  S(0, 1) = 1.1;
  CHECK_FALSE(is_positive_definite(S));
  CHECK(is_positive_definite(S, 0.2));
}

TEST_CASE("gauss legendre") {
  for (int m : {2, 5, 8, 20, 64}) {
    const GaussRule& r = gauss_legendre(m);
    double w = 0.0;
    for (double x : r.weights) w += x;
    CHECK(w == doctest::Approx(2.0).epsilon(1e-14));
    // Exact for polynomials of degree 2m - 1.
    double s = 0.0;
    for (std::size_t k = 0; k < r.nodes.size(); ++k) s += r.weights[k] * std::pow(r.nodes[k], 2 * m - 2);
    CHECK(s == doctest::Approx(2.0 / (2 * m - 1)).epsilon(1e-12));
  }
  CHECK_THROWS_AS(gauss_legendre(1), Error);
  const auto [v, ok] = integrate_refined([](double x) { return std::exp(-x * x); }, 0.0, 3.0, 1e-12);
  CHECK(ok);
  CHECK(v == doctest::Approx(0.5 * std::sqrt(M_PI) * std::erf(3.0)).epsilon(1e-12));
}

TEST_CASE("sampling") {
  const auto a = ball_samples(3, 2.0, 11, 5);
  const auto b = ball_samples(3, 2.0, 11, 5);
  const auto c = ball_samples(3, 2.0, 11, 6);
  REQUIRE(a.size() == 11);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i] == b[i]);
    CHECK(a[i].norm() <= 2.0 + 1e-12);
    if (i < 6) CHECK(a[i].norm() == doctest::Approx(2.0));
  }
  CHECK(a[0] != c[0]);
  for (const Vector& d : sphere_directions(2, 7, 1)) CHECK(d.norm() == doctest::Approx(1.0));
  const auto one = ball_samples(1, 1.0, 2, 1);
  CHECK(std::abs(one[0][0]) == doctest::Approx(1.0));
  Vector lo(2), hi(2);
  lo << -1, 2;
  hi << 1, 3;
  for (const Vector& p : box_samples(lo, hi, 50, 3)) {
    CHECK((p.array() >= lo.array()).all());
    CHECK((p.array() <= hi.array()).all());
  }
  Halton h(2, 9);
  double mean = 0.0;
  for (int i = 0; i < 4096; ++i) mean += h.next()[1];
  CHECK(mean / 4096 == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("parallel_for") {
  const int saved = max_threads();
  set_max_threads(4);
  std::vector<int> out(1000, 0);
  parallel_for(out.size(), [&](std::size_t i) { out[i] = static_cast<int>(i) * 2; });
  for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i] == static_cast<int>(i) * 2);
  try {
    parallel_for(100, [](std::size_t i) {
      if (i == 17 || i == 80) throw std::runtime_error(std::to_string(i));
    });
    FAIL("expected an exception");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()) == "17");
  }
  set_max_threads(saved);
}
