#include <cmath>

#include "doctest.h"
#include "lyap/catalog.hpp"
#include "lyap/dynamics.hpp"
#include "lyap/estimation.hpp"
#include "lyap/sampling.hpp"

using namespace lyap;

namespace {

SystemModel scalar_example() { return parse_system(catalog::find("scalar-example").spec_text); }

TransverseModel counterexample(double lam, double mu) {
  return make_transverse(
      parse_system_spec(catalog::find("transverse-counterexample").spec_text, {{"lam", lam}, {"mu", mu}}));
}

Box unit_box() {
  Box b{Vector::Constant(1, -1.0), Vector::Constant(1, 1.0)};
  return b;
}

}  // namespace

TEST_CASE("linear scalar rate and gain") {
  const DecayEstimate les = estimate_les(parse_system("dim=1; F1 = -x1"), 1.0);
  CHECK(std::abs(les.lambda_fit - 1.0) <= 0.05);
  CHECK(les.lambda == doctest::Approx(0.9 * les.lambda_fit));
  CHECK(std::abs(les.max_gain() - 1.0) <= 0.05);
  CHECK(les.samples > 0);
  CHECK(les.witnesses.size() == 2);
}

TEST_CASE("hurwitz rate within ten percent of the spectral abscissa") {
  const SystemModel m = parse_system("dim=2; F1 = -x1 + x2; F2 = -2*x2");
  const DecayEstimate les = estimate_les(m, 1.0);
  CHECK(std::abs(les.lambda_fit - 1.0) <= 0.1);
  const DecayEstimate lin = estimate_linearized_decay(m, {1.0});
  CHECK(std::abs(lin.lambda_fit - 1.0) <= 0.1);
}

TEST_CASE("scalar example gain function") {
  const SystemModel m = scalar_example();
  const DecayEstimate les = estimate_les(m, 0.5);
  CHECK(les.lambda_fit >= 0.7);
  const std::vector<double> radii{0.5, 1.0, 1.5, 2.0};
  const DecayEstimate gain = estimate_gain_function(m, radii, les);
  REQUIRE(gain.gain_table.size() == radii.size());
  for (std::size_t j = 0; j < radii.size(); ++j) {
    const double s = radii[j];
    // |E| / |e| = exp(-t) exp((e^2 - E^2) / 2) from the implicit solution.
    CHECK(gain.gain_table[j].k <= std::exp(0.5 * s * s) * (1 + 1e-6));
    CHECK(gain.gain_table[j].k >= 1.0);
    if (j) CHECK(gain.gain_table[j].k >= gain.gain_table[j - 1].k);
  }
  CHECK(gain.gain(0.7) == gain.gain_table[1].k);
  CHECK(gain.gain(2.1) == gain.gain_table.back().k);
  CHECK_THROWS_AS(gain.gain(3.0), NumericalError);

  // The bound replays on fresh points.
  for (const Vector& e : ball_samples(1, 2.0, 20, 77)) {
    if (e.norm() == 0) continue;
    const Trajectory tr = flow(m, e, 20.0);
    for (double t : {0.0, 0.5, 2.0, 8.0, 20.0})
      CHECK(tr.state(t).norm() <= gain.gain(e.norm()) * std::exp(-gain.lambda * t) * e.norm() * (1 + 1e-3));
  }
}

TEST_CASE("scalar example linearized decay") {
  const SystemModel m = scalar_example();
  const std::vector<double> radii{0.5, 1.0, 1.5};
  const DecayEstimate lin = estimate_linearized_decay(m, radii);
  CHECK(lin.lambda_fit >= 0.7);
  for (const auto& row : lin.gain_table) {
    const double s = row.s;
    // Phi = F(E)/F(e) <= exp(-t) exp(e^2 / 2) (1 + e^2).
    CHECK(row.k <= (1 + s * s) * std::exp(0.5 * s * s) * (1 + 1e-6));
    CHECK(row.k <= std::exp(2 * s * s * std::exp(s * s)));
  }
}

TEST_CASE("unstable system is falsified") {
  const SystemModel m = parse_system("dim=1; F1 = x1");
  EstimateOptions opt;
  opt.horizon = 10;
  CHECK_THROWS_AS(estimate_les(m, 1.0, opt), Falsified);
  try {
    estimate_les(m, 1.0, opt);
  } catch (const Falsified& f) {
    CHECK(std::string(f.what()).find("LES falsified at") == 0);
  }
  CHECK_THROWS_AS(estimate_les(parse_system("dim=1; F1 = 1 - x1"), 1.0), NumericalError);
}

TEST_CASE("counterexample linearization is falsified when lam < mu") {
  const TransverseModel tm = counterexample(0.5, 1.0);
  EstimateOptions opt;
  // x grows like exp(t) and x sin(x) oscillates ever faster, so keep T short.
  opt.horizon = 6;
  opt.samples = 16;
  CHECK_THROWS_AS(estimate_linearized_decay(tm, 1.0, unit_box(), opt), Falsified);
  // The state itself still decays.
  const DecayEstimate les = estimate_les(tm, 1.0, unit_box(), opt);
  CHECK(les.lambda_fit > 0.3);
  // The transversally linear part decays at the rate lam uniformly in x. The
  // bounded term (cos X)/mu moves a rate fitted on [T/2, T] by up to 4/(mu T),
  // so this one needs a longer window.
  opt.horizon = 8;
  const DecayEstimate tr = estimate_transverse_decay(tm, unit_box(), opt);
  CHECK(tr.lambda_fit > 0.3);
  REQUIRE(tr.gain_table.size() == 1);
  CHECK(tr.gain(123.0) == tr.max_gain());
  CHECK(tr.max_gain() <= std::exp(2.0) * (1 + 1e-6));
}

TEST_CASE("counterexample linearization decays when lam > mu") {
  const TransverseModel tm = counterexample(2.0, 1.0);
  EstimateOptions opt;
  // x grows like exp(t) and x sin(x) oscillates ever faster, so keep T short.
  opt.horizon = 6;
  opt.samples = 16;
  const DecayEstimate lin = estimate_linearized_decay(tm, 1.0, unit_box(), opt);
  CHECK(lin.lambda_fit > 0.5);
}

TEST_CASE("bound constants against a grid oracle") {
  const double lam = 0.5;
  const TransverseModel tm = counterexample(lam, 1.0);
  const BoundConstants b = estimate_bound_constants(tm, 1.0, unit_box(), 256);
  double mu = 0, cxe = 0;
  for (int i = 0; i <= 20000; ++i) {
    const double x = -1.0 + 2.0 * i / 20000;
    mu = std::max(mu, std::abs(lam + x * std::sin(x)));
    cxe = std::max(cxe, std::abs(std::sin(x) + x * std::cos(x)));
  }
  CHECK(b.mu <= mu * (1 + 1e-12));
  CHECK(b.mu >= 0.98 * mu);
  CHECK(b.rho == doctest::Approx(1.0));
  CHECK(b.c_ee == 0.0);
  CHECK(b.c_ge == 0.0);
  CHECK(b.c_xe <= cxe * (1 + 1e-12));
  CHECK(b.c_xe >= 0.98 * cxe);
  CHECK(b.c == b.c_xe);
  CHECK(b.samples == 1024);
}

TEST_CASE("estimates are deterministic for a seed") {
  const SystemModel m = scalar_example();
  EstimateOptions opt;
  opt.samples = 8;
  const auto a = estimate_les(m, 1.0, opt);
  const auto b = estimate_les(m, 1.0, opt);
  CHECK(a.lambda_fit == b.lambda_fit);
  CHECK(a.max_gain() == b.max_gain());
  set_max_threads(1);
  const auto c = estimate_les(m, 1.0, opt);
  set_max_threads(4);
  CHECK(c.lambda_fit == a.lambda_fit);
}
