#include <cmath>
#include <sstream>

#include "doctest.h"
#include "lyap/catalog.hpp"
#include "lyap/linalg.hpp"
#include "lyap/quadrature.hpp"
#include "lyap/riemann.hpp"

using namespace lyap;

namespace {

Vector scalar(double v) { return Vector::Constant(1, v); }
Vector vec2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}
Matrix one() { return Matrix::Identity(1, 1); }

SystemModel scalar_example() { return parse_system(catalog::find("scalar-example").spec_text); }

const MetricField& scalar_metric() {
  static const MetricField m = [] {
    const SystemModel model = scalar_example();
    return along_solutions_metric(model, one(), estimate_linearized_decay(model, {0.5, 1.0, 1.5, 2.0, 2.5}));
  }();
  return m;
}

// Pullback of the Euclidean metric by phi(x) = (x1, x2 + x1^2); distances
// are |phi(a) - phi(b)|.
Matrix pullback(const Vector& x) {
  Matrix J(2, 2);
  J << 1, 0, 2 * x[0], 1;
  return J.transpose() * J;
}
Vector phi(const Vector& x) { return vec2(x[0], x[1] + x[0] * x[0]); }

MetricField pullback_metric() {
  return custom_metric(parse_system("dim=2; F1 = -x1; F2 = -x2"), pullback, Matrix::Identity(2, 2));
}

}  // namespace

TEST_CASE("christoffel symbols") {
  const SystemModel lin = parse_system("dim=2; F1 = -x1; F2 = -2*x2");
  const ChristoffelSymbols g0 = christoffel(origin_metric(lin, Matrix::Identity(2, 2)), vec2(0.3, 0.1));
  for (const Matrix& G : g0) CHECK(G.norm() == 0.0);

  const MetricField m = custom_metric(
      parse_system("dim=1; F1 = -x1"), [](const Vector& e) { return Matrix::Constant(1, 1, 1 + e[0] * e[0]); },
      one());
  for (double e : {-1.0, 0.0, 0.5, 2.0}) {
    const ChristoffelSymbols g = christoffel(m, scalar(e));
    CHECK(std::abs(g[0](0, 0) - e / (1 + e * e)) < 1e-5);
  }
}

TEST_CASE("geodesic initial value problem") {
  const MetricField m = pullback_metric();
  const GeodesicPath p = geodesic_ivp(m, vec2(0.2, -0.1), vec2(1.0, 0.5), 1.5, true);
  REQUIRE(p.s.size() > 2);
  for (double sp : p.speed) CHECK(std::abs(sp - 1.0) <= 1e-6);
  CHECK(std::abs(p.length - 1.5) <= 1e-6);
  // Geodesics are preimages of straight lines.
  const Vector start = phi(p.points.front());
  const Vector dir = phi(p.points[1]) - start;
  for (std::size_t k = 2; k < p.points.size(); ++k) {
    const Vector d = phi(p.points[k]) - start;
    CHECK(std::abs(d[0] * dir[1] - d[1] * dir[0]) <= 1e-7 * (1 + d.norm()));
  }

  // Reversal returns to the start.
  const GeodesicPath back = geodesic_ivp(m, p.points.back(), -p.velocities.back(), 1.5);
  CHECK((back.points.back() - p.points.front()).norm() <= 1e-5);

  std::ostringstream out;
  write_geodesic_csv(out, p);
  CHECK(out.str().rfind("s,gamma_1,gamma_2,speed\n", 0) == 0);

  CHECK_THROWS_AS(geodesic_ivp(m, vec2(0, 0), vec2(0, 0), 1.0), Error);
}

TEST_CASE("straight-line length") {
  const Matrix P = (Matrix(2, 2) << 2, 0.5, 0.5, 1).finished();
  const MetricField c = constant_metric(parse_system("dim=2; F1 = -x1; F2 = -x2"), P, Matrix::Identity(2, 2));
  const Vector e = vec2(0.7, -1.2);
  CHECK(std::abs(riemannian_length(c, {Vector::Zero(2), e}) - std::sqrt(e.dot(P * e))) < 1e-12);
  const MetricField half = origin_metric(parse_system("dim=1; F1 = -x1"), one());
  CHECK(std::abs(riemannian_length(half, {scalar(0), scalar(1)}) - std::sqrt(0.5)) < 1e-12);
  const DistanceValue d = distance_to_origin(c, e);
  CHECK(d.method == "constant");
  CHECK(std::abs(d.value - std::sqrt(e.dot(P * e))) < 1e-8);
}

TEST_CASE("distance of the scalar example") {
  const MetricField& m = scalar_metric();
  for (double e : {-1.5, 0.5, 1.0, 2.0}) {
    const DistanceValue V = distance_to_origin(m, scalar(e));
    CHECK(V.method == "exact-1d");
    const double oracle = catalog::gauss_kronrod(
        [](double s) { return std::sqrt(catalog::scalar_example_metric(s)); }, 0.0, e, 1e-12);
    CHECK(std::abs(V.value - std::abs(oracle)) < 1e-5);
    const double pbar = metric_upper_bound(m, std::abs(e));
    CHECK(std::sqrt(0.5) * std::abs(e) <= V.value + 1e-9);
    CHECK(V.value <= std::sqrt(pbar) * std::abs(e));
  }
}

TEST_CASE("shooting on a curved metric") {
  const MetricField m = pullback_metric();
  const Vector a = vec2(0.0, 0.0), b = vec2(1.0, 0.0);
  const DistanceValue d = geodesic_distance(m, a, b);
  CHECK(d.method == "single-shooting");
  CHECK_FALSE(d.upper_bound);
  CHECK(std::abs(d.value - std::sqrt(2.0)) < 1e-7);
  CHECK(d.value < riemannian_length(m, {a, b}));

  const Vector c = vec2(-0.5, 0.8);
  const double ab = d.value;
  const double bc = geodesic_distance(m, b, c).value;
  const double ac = geodesic_distance(m, a, c).value;
  CHECK(std::abs(bc - (phi(b) - phi(c)).norm()) < 1e-7);
  CHECK(ac <= ab + bc + 1e-9);
  CHECK(std::abs(geodesic_distance(m, c, b).value - bc) < 1e-8);
  CHECK(geodesic_distance(m, c, c).value == 0.0);

  ShootingOptions multi;
  multi.segments = 4;
  multi.max_iterations = 0;
  // No Newton steps allowed: single shooting fails, multiple shooting too,
  // so the flagged straight line comes back.
  const DistanceValue s = geodesic_distance(m, a, b, multi);
  CHECK(s.method == "straight-line");
  CHECK(s.upper_bound);
}

TEST_CASE("dini derivative of V") {
  SUBCASE("linear") {
    const SystemModel lin = parse_system("dim=1; F1 = -x1");
    const MetricField m = origin_metric(lin, one());
    const DiniEstimate d = dini_derivative_V(m, scalar(0.8));
    CHECK(std::abs(d.value + d.V) < 1e-5 * d.V);
    CHECK(d.value <= d.bound + 1e-9);
  }
  SUBCASE("scalar example") {
    const MetricField& m = scalar_metric();
    const SystemModel model = scalar_example();
    for (double e : {0.5, 1.0, -1.0}) {
      const DiniEstimate d = dini_derivative_V(m, scalar(e));
      // dV/dt = sqrt(P(e)) F(e) sign(e).
      const double exact = std::sqrt(catalog::scalar_example_metric(e)) * model.field(scalar(e))[0] *
                           (e > 0 ? 1.0 : -1.0);
      CHECK(std::abs(d.value - exact) < 1e-4);
      CHECK(d.value <= d.bound + 1e-3);
      CHECK_FALSE(d.flagged);
    }
    CHECK(dini_derivative_V(m, scalar(0.0)).value == 0.0);
  }
}

TEST_CASE("pairwise contraction") {
  const MetricField& m = scalar_metric();
  const ContractionCheck c = contraction_check(m, scalar(2.0), scalar(0.0));
  CHECK(c.distance > 0);
  CHECK(c.rate < 0);
  CHECK(c.distance_after < c.distance);
  CHECK(c.rate <= c.bound + 1e-3);
  const ContractionCheck z = contraction_check(m, scalar(1.0), scalar(1.0));
  CHECK(z.distance == 0.0);
  CHECK(z.distance_after == 0.0);

  std::ostringstream out;
  write_distance_csv(out, {distance_to_origin(m, scalar(1.0))});
  CHECK(out.str().rfind("e_1,V,upper_bound\n", 0) == 0);
}
