#pragma once

#include <string>

#include "json.hpp"
#include "lyap/estimation.hpp"
#include "lyap/metric.hpp"
#include "lyap/riemann.hpp"
#include "lyap/stabilization.hpp"

namespace lyap::report {

using nlohmann::json;

/// Version of the JSON layout written by the tool.
inline constexpr int kSchema = 1;

json to_json(const Vector& v);
/// Array of rows.
json to_json(const Matrix& m);
json to_json(const DecayEstimate& d);
json to_json(const BoundConstants& b);
json to_json(const ResidualReport& r);
json to_json(const MetricBounds& b);
json to_json(const DistanceValue& d);
json to_json(const DiniEstimate& d);
json to_json(const ControllerCertificate& c);

Vector vector_from_json(const json& j);
/// Accepts an array of rows, a flat row-major array of n*n numbers or a scalar
/// (with `n` giving the size).
Matrix matrix_from_json(const json& j, int n = 0);

/// Pretty-printed with a trailing newline. Keys are sorted, so equal inputs
/// give byte-identical files.
std::string dump(const json& j);
void write_file(const std::string& path, const std::string& text);

}  // namespace lyap::report
