// lyapcert: Lyapunov certificates from first-order approximations.

#include <cstdio>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "lyap/app.hpp"
#include "lyap/error.hpp"
#include "lyap/report.hpp"

namespace {

std::vector<double> parse_list(const std::string& text) {
  std::string s = text;
  for (char& ch : s)
    if (ch == '[' || ch == ']' || ch == ';') ch = ' ';
  for (char& ch : s)
    if (ch == ',') ch = ' ';
  std::istringstream in(s);
  std::vector<double> out;
  std::string tok;
  while (in >> tok) {
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(tok, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != tok.size()) throw lyap::Error("'" + tok + "' is not a number");
    out.push_back(v);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  using lyap::app::RunConfig;
  CLI::App cli{"Lyapunov certificates from first-order approximations"};
  cli.set_version_flag("--version", lyap::app::kVersion);
  cli.require_subcommand(1, 1);

  RunConfig cfg;
  std::string q_text, radii_text, x0_text;
  std::vector<std::string> params;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--system", cfg.system, "catalog name, linear:<file.json> or spec file")
        ->envname("LYAPCERT_SYSTEM")
        ->capture_default_str();
    sub->add_option("--param", params, "parameter override name=value (repeatable)");
    sub->add_option("--Q", q_text, "Q as a scalar or a row-major list of n*n numbers")->envname("LYAPCERT_Q");
    sub->add_option("--tol", cfg.tol, "integration tolerance")->envname("LYAPCERT_TOL")->capture_default_str();
    sub->add_option("--horizon", cfg.horizon, "simulation horizon, 0 for the system default")
        ->envname("LYAPCERT_HORIZON")
        ->capture_default_str();
    sub->add_option("--radii", radii_text, "increasing radii, comma separated (default 0.5,1,1.5,2)")
        ->envname("LYAPCERT_RADII");
    sub->add_option("--samples", cfg.samples, "samples per radius")->envname("LYAPCERT_SAMPLES")->capture_default_str();
    sub->add_option("--grid", cfg.grid, "grid nodes per axis")->envname("LYAPCERT_GRID")->capture_default_str();
    sub->add_option("--variant", cfg.variant, "auto|origin|along-solutions|transverse|rescaled|spec")
        ->envname("LYAPCERT_VARIANT")
        ->capture_default_str();
    sub->add_option("--lambda-gain", cfg.lambda_gain, "controller gain")
        ->envname("LYAPCERT_LAMBDA_GAIN")
        ->capture_default_str();
    sub->add_option("--threads", cfg.threads, "worker threads, 0 for all cores")
        ->envname("LYAPCERT_THREADS")
        ->capture_default_str();
    sub->add_option("--out", cfg.out, "output directory")->envname("LYAPCERT_OUT")->capture_default_str();
    sub->add_option("--seed", cfg.seed, "sampling seed")->envname("LYAPCERT_SEED")->capture_default_str();
    sub->add_option("--x0", x0_text, "initial point for simulate, comma separated")->envname("LYAPCERT_X0");
  };
  for (const auto& [name, help] : std::vector<std::pair<std::string, std::string>>{
           {"analyze", "estimate exponential decay and gain functions"},
           {"metric", "build a metric and check its Lie-derivative inequality"},
           {"certify", "check the Dini decrease of the Riemannian distance"},
           {"stabilize", "synthesize u = -lambda U(w) and certify the closed loop"},
           {"simulate", "integrate a trajectory with its transition matrix"}}) {
    CLI::App* sub = cli.add_subcommand(name, help);
    add_common(sub);
    sub->callback([&cfg, name = name] { cfg.command = name; });
  }

  try {
    cli.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = cli.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (!q_text.empty()) {
      const std::vector<double> q = parse_list(q_text);
      cfg.Q = lyap::report::matrix_from_json(nlohmann::json(q), 1);
    }
    if (!radii_text.empty()) cfg.radii = parse_list(radii_text);
    if (!x0_text.empty()) cfg.x0 = parse_list(x0_text);
    for (const std::string& p : params) {
      const auto eq = p.find('=');
      if (eq == std::string::npos) throw lyap::Error("--param expects name=value, got '" + p + "'");
      const std::vector<double> v = parse_list(p.substr(eq + 1));
      if (v.size() != 1) throw lyap::Error("--param expects one value, got '" + p + "'");
      cfg.params[p.substr(0, eq)] = v[0];
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "lyapcert: %s\n", e.what());
    return 1;
  }

  const lyap::app::Outcome o = lyap::app::run(cfg);
  std::printf("%s: %s%s%s\n", cfg.command.c_str(), o.status.c_str(), o.message.empty() ? "" : " - ",
              o.message.c_str());
  if (o.exit_code != 1) std::printf("report: %s/report.json\n", cfg.out.c_str());
  return o.exit_code;
}
