#include "lyap/app.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "lyap/catalog.hpp"
#include "lyap/dynamics.hpp"
#include "lyap/linalg.hpp"
#include "lyap/report.hpp"
#include "lyap/riemann.hpp"
#include "lyap/sampling.hpp"
#include "lyap/stabilization.hpp"

namespace lyap::app {

using nlohmann::json;
using report::to_json;

namespace {

struct Loaded {
  std::string name;
  SystemSpec spec;
  Matrix Q;
  double horizon = 20.0;
};

Loaded load(const RunConfig& c) {
  const catalog::Resolved r = catalog::resolve(c.system);
  Loaded L;
  L.name = r.name;
  L.spec = parse_system_spec(r.spec_text, c.params);
  L.horizon = c.horizon > 0 ? c.horizon : r.default_horizon;
  const int qdim = L.spec.is_transverse() ? L.spec.e_dim : L.spec.dim;
  if (c.Q) {
    L.Q = c.Q->size() == 1 ? Matrix((*c.Q)(0, 0) * Matrix::Identity(qdim, qdim)) : *c.Q;
  } else if (L.spec.Q) {
    L.Q = L.spec.Q->size() == 1 ? Matrix((*L.spec.Q)(0, 0) * Matrix::Identity(qdim, qdim)) : *L.spec.Q;
  } else {
    L.Q = Matrix::Identity(qdim, qdim);
  }
  if (L.Q.rows() != qdim || L.Q.cols() != qdim) throw Error("Q has the wrong size for this system");
  require_positive_definite(L.Q);
  return L;
}

EstimateOptions estimate_options(const RunConfig& c, const Loaded& L) {
  EstimateOptions o;
  o.samples = c.samples;
  o.horizon = L.horizon;
  o.tol = c.tol;
  o.seed = c.seed;
  return o;
}

Box x_box(const Loaded& L, double r) {
  const int n = L.spec.dim - L.spec.e_dim;
  return {Vector::Constant(n, -r), Vector::Constant(n, r)};
}

std::string resolve_variant(const RunConfig& c, const Loaded& L) {
  if (c.variant != "auto") return c.variant;
  if (L.spec.has_metric()) return "spec";
  return L.spec.is_transverse() ? "transverse" : "along-solutions";
}

void write_text(const RunConfig& c, const std::string& file, const std::string& text) {
  report::write_file((std::filesystem::path(c.out) / file).string(), text);
}

std::string gain_csv(const DecayEstimate& d) {
  std::ostringstream s;
  s.precision(17);
  s << "s,k\n";
  for (const auto& p : d.gain_table) s << p.s << "," << p.k << "\n";
  return s.str();
}

struct BuiltMetric {
  MetricField field;
  std::string variant;
  std::optional<DecayEstimate> decay;
};

BuiltMetric build_metric(const RunConfig& c, const Loaded& L, const SystemModel& model) {
  BuiltMetric b;
  b.variant = resolve_variant(c, L);
  const EstimateOptions opt = estimate_options(c, L);
  if (b.variant == "spec") {
    b.field = spec_metric(L.spec, model, L.Q);
  } else if (b.variant == "transverse") {
    if (!L.spec.is_transverse()) throw Error("the transverse variant needs a spec with e_dim");
    const TransverseModel tm = make_transverse(L.spec, L.name);
    b.decay = estimate_transverse_decay(tm, x_box(L, c.radii.back()), opt);
    b.field = transverse_metric_field(tm, L.Q, *b.decay);
  } else {
    if (L.spec.is_transverse()) throw Error("variant '" + b.variant + "' needs a system without e_dim");
    switch (parse_variant(b.variant)) {
      case MetricVariant::origin:
        b.field = origin_metric(model, L.Q);
        break;
      case MetricVariant::rescaled:
        b.field = rescaled_metric_field(model, L.Q);
        break;
      case MetricVariant::along_solutions:
        b.decay = estimate_linearized_decay(model, c.radii, opt);
        b.field = along_solutions_metric(model, L.Q, *b.decay);
        break;
      default:
        throw Error("unsupported metric variant '" + b.variant + "'");
    }
  }
  return b;
}

std::vector<Vector> metric_points(const RunConfig& c, const Loaded& L) {
  const int n = L.spec.is_transverse() ? L.spec.dim - L.spec.e_dim : L.spec.dim;
  return grid_points(n, c.radii.back(), c.grid);
}

struct Status {
  int code = 0;
  std::string status = "pass";
  std::string message;
};

Status fail(std::string message) { return {2, "fail", std::move(message)}; }

// --- analyze ---------------------------------------------------------------

Status cmd_analyze(const RunConfig& c, const Loaded& L, json& result) {
  const EstimateOptions opt = estimate_options(c, L);
  if (L.spec.is_transverse()) {
    const TransverseModel tm = make_transverse(L.spec, L.name);
    const Box box = x_box(L, c.radii.back());
    const double r = c.radii.front();
    result["les"] = to_json(estimate_les(tm, r, box, opt));
    result["bound_constants"] = to_json(estimate_bound_constants(tm, r, box, 256, c.seed));
    const DecayEstimate tr = estimate_transverse_decay(tm, box, opt);
    result["transverse_decay"] = to_json(tr);
    const DecayEstimate lin = estimate_linearized_decay(tm, r, box, opt);
    result["linearized_decay"] = to_json(lin);
    write_text(c, "gain.csv", gain_csv(lin));
    return {};
  }
  const SystemModel model = make_system(L.spec, L.name);
  const DecayEstimate les = estimate_les(model, c.radii.front(), opt);
  result["les"] = to_json(les);
  const DecayEstimate gain = estimate_gain_function(model, c.radii, les, opt);
  result["gain"] = to_json(gain);
  const DecayEstimate lin = estimate_linearized_decay(model, c.radii, opt);
  result["linearized_decay"] = to_json(lin);
  // Top-level summary in the layout {lambda, gain_table, radius, samples, witnesses}.
  result["lambda"] = les.lambda;
  result["gain_table"] = to_json(gain)["gain_table"];
  result["radius"] = les.radius;
  result["samples"] = gain.samples;
  json w = to_json(les)["witnesses"];
  for (const auto& x : to_json(gain)["witnesses"]) w.push_back(x);
  result["witnesses"] = w;

  std::ostringstream s;
  s.precision(17);
  s << "s,k,k_linearized\n";
  for (const auto& p : gain.gain_table) s << p.s << "," << p.k << "," << lin.gain(p.s) << "\n";
  write_text(c, "gain.csv", s.str());
  return {};
}

// --- metric ----------------------------------------------------------------

Status cmd_metric(const RunConfig& c, const Loaded& L, json& result) {
  const SystemModel driver = L.spec.is_transverse() ? make_transverse(L.spec, L.name).manifold_dynamics()
                                                    : make_system(L.spec, L.name);
  const BuiltMetric b = build_metric(c, L, driver);
  result["variant"] = b.variant;
  if (b.decay) result["decay"] = to_json(*b.decay);
  const std::vector<Vector> pts = metric_points(c, L);
  result["points"] = static_cast<int>(pts.size());

  const ResidualReport rep = residual_report(b.field, pts);
  result["residual"] = to_json(rep);
  write_text(c, "residual.json", report::dump(to_json(rep)));

  MetricBounds bounds;
  if (b.variant == "transverse") {
    bounds = transverse_bounds(b.field, pts);
  } else if (b.variant == "along-solutions") {
    const SystemModel model = make_system(L.spec, L.name);
    const EstimateOptions opt = estimate_options(c, L);
    const DecayEstimate les = estimate_les(model, c.radii.front(), opt);
    const DecayEstimate gain = estimate_gain_function(model, c.radii, les, opt);
    result["gain"] = to_json(gain);
    bounds = metric_bounds(b.field, c.radii, &gain, 8, c.seed);
  } else {
    bounds = metric_bounds(b.field, c.radii, nullptr, 8, c.seed);
  }
  result["bounds"] = to_json(bounds);

  std::vector<Matrix> values;
  for (const auto& e : rep.entries) values.push_back(e.P);
  std::ostringstream csv;
  write_metric_csv(csv, pts, values);
  write_text(c, "metric.csv", csv.str());

  std::ostringstream env;
  env.precision(17);
  env << "s,samples,empirical_min,empirical_max,lower,upper\n";
  for (const auto& r : bounds.rows)
    env << r.s << "," << r.samples << "," << r.empirical_min << "," << r.empirical_max << "," << r.lower << ","
        << r.upper << "\n";
  write_text(c, "bounds.csv", env.str());

  if (!rep.pass) return fail("Lie-derivative residual exceeds tolerance: max eig " + std::to_string(rep.max_eig));
  return {};
}

// --- certify ---------------------------------------------------------------

struct Certificate {
  json j;
  bool pass = true;
};

Certificate certify_metric(const MetricField& metric, const std::vector<Vector>& pts, std::string& csv) {
  std::vector<Vector> nonzero;
  for (const Vector& p : pts)
    if (p.norm() > 0) nonzero.push_back(p);
  std::vector<DiniEstimate> dini(nonzero.size());
  std::vector<std::string> problems(nonzero.size());
  parallel_for(nonzero.size(), [&](std::size_t i) {
    try {
      dini[i] = dini_derivative_V(metric, nonzero[i]);
    } catch (const NumericalError& ex) {
      dini[i].flagged = true;
      dini[i].value = std::nan("");
      problems[i] = ex.what();
    }
  });
  Certificate cert;
  json entries = json::array();
  std::vector<DistanceValue> dv;
  int flagged = 0;
  for (std::size_t i = 0; i < nonzero.size(); ++i) {
    const DiniEstimate& d = dini[i];
    const double upper = metric_upper_bound(metric, nonzero[i].norm());
    bool ok = true;
    if (!d.flagged) {
      ok = std::isnan(d.bound) ? d.value < 0 : d.value <= d.bound + 1e-3;
      if (std::isfinite(upper)) ok = ok && d.V <= std::sqrt(upper) * nonzero[i].norm() * (1 + 1e-9);
    } else {
      ++flagged;
    }
    cert.pass = cert.pass && ok;
    json e = {{"point", to_json(nonzero[i])}, {"dini", to_json(d)}, {"ok", ok}, {"p_upper", upper}};
    if (!problems[i].empty()) e["problem"] = problems[i];
    entries.push_back(std::move(e));
    DistanceValue v;
    v.to = nonzero[i];
    v.value = d.V;
    v.upper_bound = d.flagged;
    dv.push_back(std::move(v));
  }
  cert.j = {{"entries", entries},
            {"points", static_cast<int>(nonzero.size())},
            {"flagged", flagged},
            {"flagged_fraction", nonzero.empty() ? 0.0 : double(flagged) / double(nonzero.size())},
            {"decrease_tolerance", 1e-3},
            {"pass", cert.pass}};
  std::ostringstream out;
  write_distance_csv(out, dv);
  csv = out.str();
  return cert;
}

Status cmd_certify(const RunConfig& c, const Loaded& L, json& result) {
  if (L.spec.is_transverse()) {
    // Transverse certificate: the first-order decay must hold before the
    // transverse metric means anything.
    const TransverseModel tm = make_transverse(L.spec, L.name);
    const EstimateOptions opt = estimate_options(c, L);
    const Box box = x_box(L, c.radii.back());
    const DecayEstimate lin = estimate_linearized_decay(tm, c.radii.front(), box, opt);
    result["linearized_decay"] = to_json(lin);
    const DecayEstimate tr = estimate_transverse_decay(tm, box, opt);
    result["transverse_decay"] = to_json(tr);
    const MetricField P = transverse_metric_field(tm, L.Q, tr);
    const std::vector<Vector> pts = metric_points(c, L);
    const ResidualReport rep = residual_report(P, pts);
    result["residual"] = to_json(rep);
    result["bounds"] = to_json(transverse_bounds(P, pts));
    result["pass"] = rep.pass;
    if (!rep.pass) return fail("transverse metric residual exceeds tolerance");
    return {};
  }
  const SystemModel model = make_system(L.spec, L.name);
  const BuiltMetric b = build_metric(c, L, model);
  result["variant"] = b.variant;
  if (b.decay) result["decay"] = to_json(*b.decay);
  std::string csv;
  const Certificate cert = certify_metric(b.field, metric_points(c, L), csv);
  result["certificate"] = cert.j;
  write_text(c, "V.csv", csv);
  if (!cert.pass) return fail("Dini decrease violated at an unflagged point");
  return {};
}

// --- stabilize -------------------------------------------------------------

Status cmd_stabilize(const RunConfig& c, const Loaded& L, json& result) {
  const ControlSystem cs = make_control_system(L.spec, L.name);
  const MetricField P = spec_metric(L.spec, cs.drift, L.Q);
  const int n = L.spec.dim;
  const double r = c.radii.back();
  const std::vector<Vector> samples = grid_points(n, r, c.grid);
  const SynthesisResult s = synthesize_controller(cs, P, c.lambda_gain, L.Q, samples);
  result["certificate"] = to_json(s.certificate);
  if (!s.controller) {
    static const char* names[] = {"", "hypothesis 1 (matrix inequality with the input term)",
                                  "hypothesis 2 (g is not a Killing field)",
                                  "hypothesis 3 (P g is not a gradient)", "closed-loop decrease"};
    const int k = s.certificate.failed_condition;
    std::ostringstream w;
    for (Eigen::Index i = 0; i < s.certificate.witness.size(); ++i) w << (i ? ", " : "") << s.certificate.witness[i];
    result["failed_condition"] = k;
    return fail(std::string(names[k]) + " fails at w = (" + w.str() + ")");
  }
  const Controller& ctl = *s.controller;
  if (!ctl.spec_text.empty()) {
    write_text(c, "closed_loop.txt", ctl.spec_text);
    result["controller"] = {{"kind", "expression"}, {"file", "closed_loop.txt"}, {"spec", ctl.spec_text}};
  } else {
    std::ostringstream t;
    write_controller_table(t, ctl, Vector::Constant(n, -r), Vector::Constant(n, r), c.grid);
    write_text(c, "controller_U.csv", t.str());
    result["controller"] = {{"kind", "table"},
                            {"file", "controller_U.csv"},
                            {"interpolation", "multilinear"},
                            {"lower", -r},
                            {"upper", r},
                            {"nodes_per_axis", c.grid}};
  }
  // Closed loop certified with the same metric.
  std::string csv;
  const Certificate cert = certify_metric(P.with_driver(ctl.closed_loop), samples, csv);
  result["closed_loop_certificate"] = cert.j;
  write_text(c, "V.csv", csv);
  if (!cert.pass) return fail("closed-loop Dini decrease violated");
  return {};
}

// --- simulate --------------------------------------------------------------

Status cmd_simulate(const RunConfig& c, const Loaded& L, json& result) {
  const SystemModel model = make_system(L.spec, L.name);
  Vector x0(model.dim());
  if (c.x0.empty()) {
    x0.setConstant(1.0 / std::sqrt(double(model.dim())));
  } else {
    if (static_cast<int>(c.x0.size()) != model.dim()) throw Error("--x0 has the wrong dimension");
    for (int i = 0; i < model.dim(); ++i) x0[i] = c.x0[static_cast<std::size_t>(i)];
  }
  const Trajectory tr = variational_flow(model, x0, L.horizon, FlowOptions{c.tol});
  std::ostringstream csv;
  tr.write_csv(csv);
  write_text(c, "trajectory.csv", csv.str());
  result["x0"] = to_json(x0);
  result["final_state"] = to_json(tr.final_state());
  result["final_phi"] = to_json(tr.final_phi());
  result["nodes"] = static_cast<int>(tr.size());
  return {};
}

json matrix_or_null(const std::optional<Matrix>& m) { return m ? to_json(*m) : json(nullptr); }

}  // namespace

json to_json(const RunConfig& c) {
  return {{"command", c.command},
          {"system", c.system},
          {"params", c.params},
          {"Q", matrix_or_null(c.Q)},
          {"tol", c.tol},
          {"horizon", c.horizon},
          {"radii", c.radii},
          {"samples", c.samples},
          {"grid", c.grid},
          {"variant", c.variant},
          {"lambda_gain", c.lambda_gain},
          {"threads", c.threads},
          {"out", c.out},
          {"seed", c.seed},
          {"x0", c.x0}};
}

RunConfig config_from_json(const json& j) {
  RunConfig c;
  c.command = j.value("command", c.command);
  c.system = j.value("system", c.system);
  if (j.contains("params")) c.params = j["params"].get<std::map<std::string, double>>();
  if (j.contains("Q") && !j["Q"].is_null()) c.Q = report::matrix_from_json(j["Q"], 1);
  c.tol = j.value("tol", c.tol);
  c.horizon = j.value("horizon", c.horizon);
  if (j.contains("radii")) c.radii = j["radii"].get<std::vector<double>>();
  c.samples = j.value("samples", c.samples);
  c.grid = j.value("grid", c.grid);
  c.variant = j.value("variant", c.variant);
  c.lambda_gain = j.value("lambda_gain", c.lambda_gain);
  c.threads = j.value("threads", c.threads);
  c.out = j.value("out", c.out);
  c.seed = j.value("seed", c.seed);
  if (j.contains("x0")) c.x0 = j["x0"].get<std::vector<double>>();
  return c;
}

void validate(const RunConfig& c) {
  static const char* commands[] = {"analyze", "metric", "certify", "stabilize", "simulate"};
  if (std::find(std::begin(commands), std::end(commands), c.command) == std::end(commands))
    throw Error("unknown command '" + c.command + "'");
  if (!(c.tol > 0)) throw Error("--tol must be positive");
  if (c.horizon < 0) throw Error("--horizon must be nonnegative");
  if (c.radii.empty()) throw Error("--radii must not be empty");
  for (std::size_t i = 0; i < c.radii.size(); ++i)
    if (!(c.radii[i] > 0) || (i > 0 && !(c.radii[i] > c.radii[i - 1])))
      throw Error("--radii must be positive and strictly increasing");
  if (c.samples < 2) throw Error("--samples must be at least 2");
  if (c.grid < 2) throw Error("--grid must be at least 2");
  if (c.threads < 0) throw Error("--threads must be nonnegative");
  if (!(c.lambda_gain >= 0)) throw Error("--lambda-gain must be nonnegative");
  static const char* variants[] = {"auto", "origin", "along-solutions", "transverse", "rescaled", "spec"};
  if (std::find(std::begin(variants), std::end(variants), c.variant) == std::end(variants))
    throw Error("unknown metric variant '" + c.variant + "'");
  if (c.out.empty()) throw Error("--out must not be empty");
}

std::vector<Vector> grid_points(int n, double r, int nodes) {
  std::vector<Vector> pts;
  std::vector<int> idx(static_cast<std::size_t>(n), 0);
  while (true) {
    Vector p(n);
    for (int i = 0; i < n; ++i) p[i] = -r + 2.0 * r * idx[static_cast<std::size_t>(i)] / (nodes - 1);
    if (p.norm() <= r * (1 + 1e-12)) pts.push_back(p);
    int k = n - 1;
    while (k >= 0 && ++idx[static_cast<std::size_t>(k)] == nodes) idx[static_cast<std::size_t>(k--)] = 0;
    if (k < 0) break;
  }
  return pts;
}

Outcome run(const RunConfig& c) {
  Outcome o;
  json rep = {{"schema", report::kSchema}, {"tool", "lyapcert"}, {"version", kVersion}, {"config", to_json(c)}};
  json result = json::object();
  Status st;
  try {
    validate(c);
    std::filesystem::create_directories(c.out);
    if (c.threads > 0) set_max_threads(c.threads);
    const Loaded L = load(c);
    rep["system"] = {{"name", L.name}, {"spec", L.spec.to_text()}, {"Q", to_json(L.Q)}, {"horizon", L.horizon}};
    if (c.command == "analyze") st = cmd_analyze(c, L, result);
    else if (c.command == "metric") st = cmd_metric(c, L, result);
    else if (c.command == "certify") st = cmd_certify(c, L, result);
    else if (c.command == "stabilize") st = cmd_stabilize(c, L, result);
    else st = cmd_simulate(c, L, result);
  } catch (const Falsified& ex) {
    st = {2, "falsified", ex.what()};
    rep["witness"] = ex.witness();
  } catch (const std::exception& ex) {
    st = {1, "error", ex.what()};
  }
  rep["result"] = std::move(result);
  rep["status"] = st.status;
  rep["message"] = st.message;
  o.exit_code = st.code;
  o.status = st.status;
  o.message = st.message;
  o.report = rep;
  if (std::filesystem::is_directory(c.out)) {
    try {
      report::write_file((std::filesystem::path(c.out) / "report.json").string(), report::dump(rep));
    } catch (const Error& ex) {
      o.exit_code = 1;
      o.status = "error";
      o.message = ex.what();
    }
  }
  return o;
}

}  // namespace lyap::app
