#include <cmath>

#include "doctest.h"
#include "lyap/catalog.hpp"
#include "lyap/linalg.hpp"
#include "lyap/system.hpp"

using namespace lyap;

TEST_CASE("catalog entries parse") {
  for (const auto& e : catalog::entries()) {
    const SystemSpec s = parse_system_spec(e.spec_text);
    CHECK(s.dim >= 1);
    CHECK(catalog::find(e.name).name == e.name);
  }
  CHECK_THROWS_AS(catalog::find("nope"), Error);
}

TEST_CASE("implicit scalar oracle") {
  CHECK(catalog::scalar_example_oracle(0.0, 3.0) == 0.0);
  CHECK(catalog::scalar_example_oracle(1.0, 0.0) == doctest::Approx(1.0).epsilon(1e-15));
  const double y = catalog::solve_y_exp_y(std::exp(-1.0));
  CHECK(std::abs(y * std::exp(y) - std::exp(-1.0)) < 1e-12);
  CHECK(y == doctest::Approx(0.278464542761074).epsilon(1e-12));
  CHECK(catalog::scalar_example_oracle(1.0, 1.0) == doctest::Approx(0.527697).epsilon(1e-6));
  CHECK(catalog::scalar_example_oracle(-1.0, 1.0) == doctest::Approx(-0.527697).epsilon(1e-6));
  for (double c : {1e-12, 1e-3, 1.0, 50.0, 1e8}) {
    const double r = catalog::solve_y_exp_y(c);
    CHECK(std::abs(r * std::exp(r) - c) <= 1e-13 * std::max(1.0, c));
  }
}

TEST_CASE("scalar metric closed form against nested quadrature") {
  CHECK(catalog::scalar_example_metric(0.0) == 0.5);
  CHECK(catalog::scalar_example_metric(1.0) == doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-15));
  for (double e : {0.5, 1.0, 2.0})
    CHECK(std::abs(catalog::scalar_example_metric_quadrature(e) - catalog::scalar_example_metric(e)) < 1e-8);
}

TEST_CASE("counterexample closed form") {
  const auto a = catalog::counterexample_oracle(1.0, 0.5, 0.0, 0.5, 1.0, 0.2, 0.0);
  CHECK(a.E == 1.0);
  CHECK(a.dE == doctest::Approx(0.2));
  // Pure transverse mode: dE = phi de0 when dx0 = 0.
  const auto b = catalog::counterexample_oracle(1.0, 0.5, 2.0, 0.5, 1.0, 0.3, 0.0);
  CHECK(b.dE == doctest::Approx(b.phi * 0.3).epsilon(1e-15));
  CHECK(catalog::counterexample_phi_quadrature(0.7, 3.0, 2.0, 1.0) ==
        doctest::Approx(catalog::counterexample_oracle(1, 0.7, 3.0, 2.0, 1.0).phi).epsilon(1e-9));
  // Frozen x branch.
  const auto c = catalog::counterexample_oracle(1.0, 0.5, 1.0, 1.0, 0.0);
  CHECK(c.E == doctest::Approx(std::exp(-(1.0 + 0.5 * std::sin(0.5)))));
}

TEST_CASE("linear baseline") {
  Matrix A(1, 1);
  A << -1;
  CHECK(catalog::linear_baseline(A, Matrix::Identity(1, 1)).P(0, 0) == doctest::Approx(0.5));
  Matrix B(2, 2);
  B << -1, 1, 0, -2;
  const auto lb = catalog::linear_baseline(B, Matrix::Identity(2, 2));
  CHECK(lyapunov_residual(B, lb.P, Matrix::Identity(2, 2)).norm() <= 1e-12);
  const Matrix E = lb.expm(1.0);
  CHECK(E(0, 0) == doctest::Approx(std::exp(-1.0)));
  CHECK(E(0, 1) == doctest::Approx(std::exp(-1.0) - std::exp(-2.0)));
  Matrix U(1, 1);
  U << 1;
  CHECK_THROWS_AS(catalog::linear_baseline(U, Matrix::Identity(1, 1)), Error);
}

TEST_CASE("linear spec text round trip") {
  Matrix A(2, 2);
  A << 0, 1, -1, -1;
  const SystemModel m = parse_system(catalog::linear_spec_text(A));
  Vector x(2);
  x << 0.3, -0.7;
  CHECK((m.field(x) - A * x).norm() == 0.0);
  CHECK((m.jacobian(x) - A).norm() == 0.0);
}

TEST_CASE("gauss kronrod") {
  CHECK(catalog::gauss_kronrod([](double x) { return std::exp(-x); }, 0, 5) ==
        doctest::Approx(1 - std::exp(-5.0)).epsilon(1e-13));
  CHECK(catalog::gauss_kronrod([](double x) { return std::sqrt(x); }, 0, 1, 1e-10) ==
        doctest::Approx(2.0 / 3.0).epsilon(1e-9));
}
