#include "lyap/system.hpp"

#include <algorithm>

namespace lyap {

SystemModel::SystemModel(std::string name, int dim, Evaluator eval, JetEvaluator jets, int smoothness)
    : name_(std::move(name)), dim_(dim), smoothness_(smoothness), eval_(std::move(eval)),
      jets_(std::move(jets)) {
  if (dim_ < 1) throw Error("system dimension must be positive");
}

SystemModel SystemModel::from_expressions(std::string name, std::vector<expr::Expr> components) {
  const int n = static_cast<int>(components.size());
  if (n < 1 || n > kMaxDim) throw Error("expression system needs 1.." + std::to_string(kMaxDim) + " components");
  int smooth = 4;
  for (const auto& c : components) {
    if (c.dim() != n) throw Error("component dimension does not match the number of components");
    smooth = std::min(smooth, c.smoothness());
  }
  auto shared = std::make_shared<const std::vector<expr::Expr>>(components);

  Evaluator eval = [shared, n](const Vector& x, Vector& f, Matrix* J) {
    f.resize(n);
    if (!J) {
      std::span<const double> vars(x.data(), static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i) f[i] = (*shared)[i].evaluate<double>(vars);
      return;
    }
    thread_local std::vector<Dual<double>> vars;
    vars.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) vars[i] = JetOps<Dual<double>>::variable(n, i, x[i]);
    J->resize(n, n);
    for (int i = 0; i < n; ++i) {
      const Dual<double> d = (*shared)[i].evaluate<Dual<double>>(vars);
      f[i] = d.value;
      J->row(i) = d.grad.transpose();
    }
  };
  JetEvaluator jets = [shared, n](const Vector& x) {
    std::vector<Jet2<double>> out;
    out.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) out.push_back((*shared)[i].jet2(x));
    return out;
  };
  SystemModel m(std::move(name), n, std::move(eval), std::move(jets), std::max(smooth, 0));
  m.exprs_ = std::move(components);
  return m;
}

SystemModel SystemModel::linear(std::string name, const Matrix& A) {
  const int n = static_cast<int>(A.rows());
  if (A.cols() != n) throw Error("linear system matrix must be square");
  Evaluator eval = [A](const Vector& x, Vector& f, Matrix* J) {
    f.noalias() = A * x;
    if (J) *J = A;
  };
  JetEvaluator jets = [A, n](const Vector& x) {
    std::vector<Jet2<double>> out(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      out[i].value = A.row(i).dot(x);
      out[i].grad = A.row(i).transpose();
      out[i].hess = SmallMatrix<double>::Zero(n, n);
    }
    return out;
  };
  return SystemModel(std::move(name), n, std::move(eval), std::move(jets), 4);
}

Vector SystemModel::field(const Vector& x) const {
  Vector f(dim_);
  eval_(x, f, nullptr);
  return f;
}

Matrix SystemModel::jacobian(const Vector& x) const {
  Vector f(dim_);
  Matrix J(dim_, dim_);
  eval_(x, f, &J);
  return J;
}

std::vector<Jet2<double>> SystemModel::jets(const Vector& x) const {
  if (!jets_) throw Error("system '" + name_ + "' provides no second derivatives");
  return jets_(x);
}

void SystemModel::require_equilibrium(double tol) const {
  const double r = field(Vector::Zero(dim_)).norm();
  if (r > tol)
    throw NumericalError("origin is not an equilibrium of '" + name_ + "': |F(0)| = " + std::to_string(r));
}

SystemModel make_system(const SystemSpec& spec, std::string name) {
  return SystemModel::from_expressions(std::move(name), spec.F);
}

SystemModel parse_system(std::string_view spec_text, const std::map<std::string, double>& overrides) {
  return make_system(parse_system_spec(spec_text, overrides));
}

std::vector<Jet2<double>> eval_jet2(const SystemModel& model, const Vector& point) {
  if (point.size() != model.dim())
    throw Error("point has dimension " + std::to_string(point.size()) + ", system has " +
                std::to_string(model.dim()));
  return model.jets(point);
}

// ---------------------------------------------------------------------------

TransverseModel::TransverseModel(SystemModel full, int e_dim) : full_(std::move(full)), e_dim_(e_dim) {
  if (e_dim_ < 1 || e_dim_ >= full_.dim()) throw Error("transverse split needs 1 <= e_dim < dim");
}

Vector TransverseModel::join(const Vector& e, const Vector& x) const {
  Vector z(full_.dim());
  z << e, x;
  return z;
}

Vector TransverseModel::F(const Vector& e, const Vector& x) const { return full_.field(join(e, x)).head(e_dim_); }

Vector TransverseModel::G(const Vector& e, const Vector& x) const {
  return full_.field(join(e, x)).tail(x_dim());
}

Matrix TransverseModel::dF_de(const Vector& e, const Vector& x) const {
  return full_.jacobian(join(e, x)).topLeftCorner(e_dim_, e_dim_);
}

Matrix TransverseModel::dF_dx(const Vector& e, const Vector& x) const {
  return full_.jacobian(join(e, x)).topRightCorner(e_dim_, x_dim());
}

Matrix TransverseModel::dG_de(const Vector& e, const Vector& x) const {
  return full_.jacobian(join(e, x)).bottomLeftCorner(x_dim(), e_dim_);
}

Matrix TransverseModel::dG_dx(const Vector& e, const Vector& x) const {
  return full_.jacobian(join(e, x)).bottomRightCorner(x_dim(), x_dim());
}

namespace {

// Restrict a model on z = (head, tail) to a block of coordinates with the
// others frozen. `offset` is the first free coordinate, `count` how many.
SystemModel restricted(const SystemModel& full, Vector frozen, int offset, int count, std::string name) {
  auto eval = [full, frozen, offset, count](const Vector& y, Vector& f, Matrix* J) {
    thread_local Vector z;
    thread_local Vector fz;
    thread_local Matrix Jz;
    z = frozen;
    z.segment(offset, count) = y;
    if (J) {
      full.evaluate(z, fz, Jz);
      *J = Jz.block(offset, offset, count, count);
    } else {
      full.evaluate(z, fz);
    }
    f = fz.segment(offset, count);
  };
  SystemModel::JetEvaluator jets;
  if (full.has_jets()) {
    jets = [full, frozen, offset, count](const Vector& y) {
      Vector z = frozen;
      z.segment(offset, count) = y;
      const auto all = full.jets(z);
      std::vector<Jet2<double>> out(static_cast<std::size_t>(count));
      for (int i = 0; i < count; ++i) {
        const auto& j = all[static_cast<std::size_t>(offset + i)];
        out[i].value = j.value;
        out[i].grad = j.grad.segment(offset, count);
        out[i].hess = j.hess.block(offset, offset, count, count);
      }
      return out;
    };
  }
  return SystemModel(std::move(name), count, std::move(eval), std::move(jets), full.smoothness());
}

}  // namespace

SystemModel TransverseModel::frozen_at(const Vector& x) const {
  Vector frozen = join(Vector::Zero(e_dim_), x);
  return restricted(full_, std::move(frozen), 0, e_dim_, full_.name() + ":e");
}

SystemModel TransverseModel::manifold_dynamics() const {
  return restricted(full_, Vector::Zero(full_.dim()), e_dim_, x_dim(), full_.name() + ":x");
}

void TransverseModel::require_invariance(const std::vector<Vector>& xs, double tol) const {
  const Vector zero = Vector::Zero(e_dim_);
  for (const Vector& x : xs) {
    const double r = F(zero, x).norm();
    if (r > tol)
      throw NumericalError("manifold e = 0 is not invariant: |F(0,x)| = " + std::to_string(r));
  }
}

TransverseModel make_transverse(const SystemSpec& spec, std::string name) {
  if (!spec.is_transverse()) throw Error("spec declares no e_dim");
  return TransverseModel(make_system(spec, std::move(name)), spec.e_dim);
}

SystemModel scaled_field(const SystemModel& g, const expr::Expr& alpha) {
  if (alpha.empty()) return g;
  if (g.expressions().empty()) throw Error("scaling needs an expression-defined input field");
  std::vector<expr::Expr> scaled;
  for (const auto& c : g.expressions())
    scaled.emplace_back(expr::make_binary(expr::Op::multiply, alpha.root_ptr(), c.root_ptr()), g.dim());
  return SystemModel::from_expressions(g.name(), std::move(scaled));
}

ControlSystem make_control_system(const SystemSpec& spec, std::string name) {
  if (!spec.has_control()) throw Error("spec declares no input field g");
  ControlSystem cs;
  cs.drift = make_system(spec, name);
  cs.input = scaled_field(SystemModel::from_expressions(name + ":g", spec.g), spec.alpha);
  return cs;
}

}  // namespace lyap
