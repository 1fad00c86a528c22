#include "lyap/report.hpp"

#include <cmath>
#include <fstream>

namespace lyap::report {

json to_json(const Vector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

json to_json(const Matrix& m) {
  json a = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    a.push_back(std::move(row));
  }
  return a;
}

json to_json(const DecayEstimate& d) {
  json g = json::array();
  for (const auto& p : d.gain_table) g.push_back({{"s", p.s}, {"k", p.k}});
  json w = json::array();
  for (const auto& x : d.witnesses)
    w.push_back({{"what", x.what}, {"point", to_json(x.point)}, {"time", x.time}, {"value", x.value}});
  return {{"lambda", d.lambda}, {"lambda_fit", d.lambda_fit}, {"gain_table", g}, {"radius", d.radius},
          {"samples", d.samples}, {"horizon", d.horizon}, {"seed", d.seed}, {"witnesses", w}};
}

json to_json(const BoundConstants& b) {
  return {{"mu", b.mu},
          {"rho", b.rho},
          {"c_ee", b.c_ee},
          {"c_xe", b.c_xe},
          {"c_ge", b.c_ge},
          {"c", b.c},
          {"mu_at", to_json(b.mu_at)},
          {"rho_at", to_json(b.rho_at)},
          {"c_at", to_json(b.c_at)},
          {"e_radius", b.e_radius},
          {"x_box", {{"lo", to_json(b.x_box.lo)}, {"hi", to_json(b.x_box.hi)}}},
          {"samples", b.samples},
          {"domain", b.domain}};
}

json to_json(const ResidualReport& r) {
  json e = json::array();
  for (const auto& x : r.entries)
    e.push_back({{"point", to_json(x.point)},
                 {"max_eig", x.max_eig},
                 {"h", x.h},
                 {"gap", x.gap},
                 {"R", to_json(x.R)},
                 {"P", to_json(x.P)}});
  return {{"tol", r.tol}, {"max_eig", r.max_eig}, {"pass", r.pass}, {"entries", e}};
}

json to_json(const MetricBounds& b) {
  json rows = json::array();
  for (const auto& r : b.rows)
    rows.push_back({{"s", r.s},
                    {"samples", r.samples},
                    {"empirical_min", r.empirical_min},
                    {"empirical_max", r.empirical_max},
                    {"lower", r.lower},
                    {"upper", r.upper}});
  return {{"complete", b.complete}, {"rows", rows}};
}

json to_json(const DistanceValue& d) {
  return {{"value", d.value},     {"from", to_json(d.from)},         {"to", to_json(d.to)},
          {"method", d.method},   {"residual", d.residual},          {"iterations", d.iterations},
          {"upper_bound", d.upper_bound}};
}

json to_json(const DiniEstimate& d) {
  return {{"V", d.V},       {"value", d.value}, {"bound", d.bound}, {"h", d.h},
          {"quotients", d.quotients}, {"gap", d.gap}, {"flagged", d.flagged}};
}

json to_json(const ControllerCertificate& c) {
  json s = json::array();
  for (const auto& w : c.samples) s.push_back(to_json(w));
  return {{"lambda", c.lambda},
          {"killing_sup", c.killing_sup},
          {"integrability_sup", c.integrability_sup},
          {"hypothesis_sup", c.hypothesis_sup},
          {"closed_loop_sup", c.closed_loop_sup},
          {"identity_gap", c.identity_gap},
          {"failed_condition", c.failed_condition},
          {"witness", to_json(c.witness)},
          {"pass", c.pass},
          {"samples", s}};
}

Vector vector_from_json(const json& j) {
  if (j.is_number()) return Vector::Constant(1, j.get<double>());
  if (!j.is_array()) throw Error("expected an array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  return v;
}

Matrix matrix_from_json(const json& j, int n) {
  if (j.is_number()) {
    if (n <= 0) throw Error("a scalar matrix needs a dimension");
    return j.get<double>() * Matrix::Identity(n, n);
  }
  if (!j.is_array() || j.empty()) throw Error("expected a matrix");
  if (j[0].is_array()) {
    const auto r = static_cast<Eigen::Index>(j.size());
    const auto c = static_cast<Eigen::Index>(j[0].size());
    Matrix m(r, c);
    for (Eigen::Index i = 0; i < r; ++i) {
      if (!j[i].is_array() || static_cast<Eigen::Index>(j[i].size()) != c) throw Error("ragged matrix rows");
      for (Eigen::Index k = 0; k < c; ++k) m(i, k) = j[i][k].get<double>();
    }
    return m;
  }
  const Vector flat = vector_from_json(j);
  const auto k = static_cast<Eigen::Index>(std::llround(std::sqrt(double(flat.size()))));
  if (k * k != flat.size()) throw Error("a flat matrix needs n*n entries");
  if (k == 1 && n > 1) return flat[0] * Matrix::Identity(n, n);
  Matrix m(k, k);
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index c = 0; c < k; ++c) m(i, c) = flat[i * k + c];
  return m;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  out << text;
  if (!out) throw Error("write to '" + path + "' failed");
}

}  // namespace lyap::report
