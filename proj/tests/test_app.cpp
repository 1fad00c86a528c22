#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "lyap/app.hpp"
#include "lyap/linalg.hpp"
#include "lyap/report.hpp"

using namespace lyap;
using app::RunConfig;

namespace {

std::string scratch(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("lyapcert-test-" + name);
  std::filesystem::remove_all(p);
  return p.string();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

RunConfig config(const std::string& command, const std::string& system, const std::string& out) {
  RunConfig c;
  c.command = command;
  c.system = system;
  c.out = out;
  return c;
}

}  // namespace

TEST_CASE("config round trip and validation") {
  RunConfig c = config("metric", "scalar-example", "x");
  c.params = {{"lam", 0.5}};
  c.Q = Matrix::Identity(2, 2) * 3;
  c.radii = {0.25, 1.0};
  c.seed = 42;
  c.x0 = {1.0, -2.0};
  const RunConfig back = app::config_from_json(app::to_json(c));
  CHECK(app::to_json(back) == app::to_json(c));
  CHECK(back.Q->isApprox(*c.Q));

  RunConfig bad = c;
  bad.tol = 0;
  CHECK_THROWS_AS(app::validate(bad), Error);
  bad = c;
  bad.radii = {1.0, 0.5};
  CHECK_THROWS_AS(app::validate(bad), Error);
  bad = c;
  bad.command = "nope";
  CHECK_THROWS_AS(app::validate(bad), Error);
  CHECK(app::run(bad).exit_code == 1);
}

TEST_CASE("grid points") {
  CHECK(app::grid_points(1, 2.0, 9).size() == 9);
  const auto pts = app::grid_points(2, 1.0, 3);
  CHECK(pts.size() == 5);
  for (const auto& p : pts) CHECK(p.norm() <= 1.0);
}

TEST_CASE("analyze") {
  SUBCASE("scalar example") {
    const auto o = app::run(config("analyze", "scalar-example", scratch("analyze-scalar")));
    CHECK(o.exit_code == 0);
    const auto& r = o.report["result"];
    CHECK(std::abs(r["les"]["lambda_fit"].get<double>() - 1.0) < 0.05);
    CHECK(r["gain_table"].size() == 4);
    CHECK(o.report["schema"] == 1);
    CHECK(o.report["config"]["system"] == "scalar-example");
  }
  SUBCASE("stable linear system from json") {
    const std::string dir = scratch("analyze-linear");
    std::filesystem::create_directories(dir);
    Matrix A(2, 2);
    A << -1, 2, -2, -1.5;
    report::write_file(dir + "/A.json", report::dump({{"A", report::to_json(A)}}));
    const auto o = app::run(config("analyze", "linear:" + dir + "/A.json", dir + "/out"));
    CHECK(o.exit_code == 0);
    const double alpha = -spectral_abscissa(A);
    CHECK(std::abs(o.report["result"]["les"]["lambda_fit"].get<double>() - alpha) <= 0.1 * alpha);
    CHECK(std::filesystem::exists(dir + "/out/gain.csv"));
  }
  SUBCASE("unstable system is falsified") {
    const std::string dir = scratch("analyze-unstable");
    std::filesystem::create_directories(dir);
    report::write_file(dir + "/up.txt", "dim = 1\nF1 = x1\n");
    const auto o = app::run(config("analyze", dir + "/up.txt", dir + "/out"));
    CHECK(o.exit_code == 2);
    CHECK(o.status == "falsified");
    CHECK(o.report["witness"].size() == 1);
  }
  SUBCASE("missing system is an operational error") {
    CHECK(app::run(config("analyze", "/nonexistent/spec.txt", scratch("analyze-missing"))).exit_code == 1);
  }
}

TEST_CASE("metric and certify on a linear system") {
  RunConfig c = config("metric", "linear-scalar", scratch("metric-linear"));
  c.variant = "origin";
  const auto m = app::run(c);
  CHECK(m.exit_code == 0);
  CHECK(m.report["result"]["residual"]["pass"] == true);
  CHECK(slurp(c.out + "/metric.csv").rfind("e_1,P_11\n", 0) == 0);

  c.command = "certify";
  c.out = scratch("certify-linear");
  const auto v = app::run(c);
  CHECK(v.exit_code == 0);
  for (const auto& e : v.report["result"]["certificate"]["entries"]) {
    const double x = e["point"][0].get<double>();
    CHECK(std::abs(e["dini"]["V"].get<double>() - std::sqrt(0.5) * std::abs(x)) < 1e-8);
  }
}

TEST_CASE("certify the scalar example") {
  RunConfig c = config("certify", "scalar-example", scratch("certify-scalar"));
  const auto o = app::run(c);
  CHECK(o.exit_code == 0);
  CHECK(o.report["result"]["certificate"]["flagged"] == 0);
  CHECK(slurp(c.out + "/V.csv").rfind("e_1,V,upper_bound\n", 0) == 0);
}

TEST_CASE("transverse certify is falsified when lam < mu") {
  RunConfig c = config("certify", "transverse-counterexample", scratch("certify-transverse"));
  c.horizon = 6;
  c.samples = 16;
  c.radii = {1.0};
  const auto bad = app::run(c);
  CHECK(bad.exit_code == 2);
  CHECK(bad.message.find("linearized decay falsified") != std::string::npos);
  c.params = {{"lam", 2.0}};
  c.out = scratch("certify-transverse-ok");
  CHECK(app::run(c).exit_code == 0);
}

TEST_CASE("stabilize") {
  RunConfig c = config("stabilize", "stabilization-scalar", scratch("stabilize"));
  const auto o = app::run(c);
  CHECK(o.exit_code == 0);
  CHECK(o.report["result"]["certificate"]["closed_loop_sup"].get<double>() == doctest::Approx(-3.0));
  CHECK(o.report["result"]["closed_loop_certificate"]["pass"] == true);
  CHECK(std::filesystem::exists(c.out + "/closed_loop.txt"));

  c.lambda_gain = 2.0;
  c.out = scratch("stabilize-weak");
  const auto weak = app::run(c);
  CHECK(weak.exit_code == 2);
  CHECK(weak.report["result"]["failed_condition"] == 1);
  CHECK(weak.message.rfind("hypothesis 1", 0) == 0);
}

TEST_CASE("simulate") {
  RunConfig c = config("simulate", "scalar-example", scratch("simulate"));
  c.x0 = {1.0};
  c.horizon = 2.0;
  const auto o = app::run(c);
  CHECK(o.exit_code == 0);
  CHECK(slurp(c.out + "/trajectory.csv").rfind("t,e_1,phi_11\n", 0) == 0);
}

TEST_CASE("reports are byte-identical for a fixed seed") {
  for (const char* cmd : {"analyze", "metric", "certify"}) {
    RunConfig c = config(cmd, "scalar-example", scratch(std::string("det-") + cmd));
    c.threads = 1;
    app::run(c);
    const std::string first = slurp(c.out + "/report.json");
    c.threads = 4;
    app::run(c);
    const std::string second = slurp(c.out + "/report.json");
    // Only the thread count in the embedded config differs.
    CHECK(first.size() > 100);
    auto strip = [](std::string s) {
      const auto p = s.find("\"threads\"");
      return s.erase(p, s.find('\n', p) - p);
    };
    CHECK(strip(first) == strip(second));
    c.threads = 1;
    app::run(c);
    CHECK(slurp(c.out + "/report.json") == first);
  }
}
