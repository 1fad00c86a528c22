#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "lyap/types.hpp"

namespace lyap::app {

inline constexpr const char* kVersion = "1.0.0";

/// Everything a command needs. Serialized verbatim into every report.
struct RunConfig {
  /// analyze, metric, certify, stabilize or simulate.
  std::string command;
  /// Catalog name, `linear:<json>` or a spec file.
  std::string system = "scalar-example";
  std::map<std::string, double> params;
  /// Overrides the Q of the system file; identity when neither is given.
  std::optional<Matrix> Q;
  double tol = 1e-10;
  /// 0 uses the system's default horizon.
  double horizon = 0.0;
  std::vector<double> radii = {0.5, 1.0, 1.5, 2.0};
  int samples = 32;
  /// Grid nodes per axis on [-r, r]^n, r the largest radius.
  int grid = 9;
  /// auto, origin, along-solutions, transverse, rescaled or spec.
  std::string variant = "auto";
  /// Controller gain of stabilize.
  double lambda_gain = 3.0;
  int threads = 0;
  std::string out = "lyapcert-out";
  std::uint64_t seed = 1;
  /// Initial point of simulate (origin-centred unit vector when empty).
  std::vector<double> x0;
};

nlohmann::json to_json(const RunConfig& c);
RunConfig config_from_json(const nlohmann::json& j);
/// Throws Error on non-positive tolerances, empty or unsorted radii and
/// similar mistakes.
void validate(const RunConfig& c);

struct Outcome {
  /// 0 pass, 2 falsified or failed certificate, 1 operational error.
  int exit_code = 1;
  std::string status;
  std::string message;
  nlohmann::json report;
};

/// Runs one command and writes report.json plus its CSV files into c.out.
Outcome run(const RunConfig& c);

/// Tensor grid with `nodes` per axis on [-r, r]^n kept inside the ball |e| <= r.
std::vector<Vector> grid_points(int n, double r, int nodes);

}  // namespace lyap::app
