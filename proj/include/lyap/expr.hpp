#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "lyap/error.hpp"
#include "lyap/jet.hpp"
#include "lyap/types.hpp"

namespace lyap::expr {

enum class Op : std::uint8_t {
  constant,
  variable,
  parameter,
  negate,
  add,
  subtract,
  multiply,
  divide,
  power,
  sin,
  cos,
  exp,
  log,
  sqrt,
  abs2,
};

/// Immutable expression node. `value` holds the literal for constants, the
/// bound value for parameters and the folded exponent for powers.
struct Node {
  Op op = Op::constant;
  double value = 0.0;
  int index = -1;
  std::string name;
  std::shared_ptr<const Node> lhs;
  std::shared_ptr<const Node> rhs;
};

using NodePtr = std::shared_ptr<const Node>;

/// Fully parenthesized text that parses back to the same tree.
std::string to_string(const Node& node);

/// Names visible while parsing: the state dimension (variables x1..xn) and
/// parameter values.
struct Symbols {
  int dim = 0;
  std::map<std::string, double> params;
};

/// An expression over x1..xn compiled to a flat tape for evaluation.
/// Instances are immutable and safe to evaluate concurrently.
class Expr {
 public:
  Expr() = default;
  Expr(NodePtr root, int dim);

  int dim() const noexcept { return dim_; }
  const Node& root() const { return *root_; }
  const NodePtr& root_ptr() const noexcept { return root_; }
  bool empty() const noexcept { return !root_; }
  bool depends_on_variables() const;

  /// Evaluate with T = double, Dual<double> or Jet2<double>.
  template <class T>
  T evaluate(std::span<const T> vars) const;

  double operator()(const Vector& x) const;
  Dual<double> dual(const Vector& x) const;
  Jet2<double> jet2(const Vector& x) const;

  std::string to_string() const { return root_ ? expr::to_string(*root_) : std::string(); }

  /// Number of continuous derivatives guaranteed on the expression's domain,
  /// capped at 4.
  int smoothness() const;

 private:
  struct Instr {
    Op op;
    double value;
    int index;
    int a;
    int b;
    const Node* node;
  };

  NodePtr root_;
  int dim_ = 0;
  std::vector<Instr> tape_;
};

/// Parse one infix expression. `line`/`column` locate the text inside a
/// larger file for error messages.
Expr parse_expression(std::string_view text, const Symbols& symbols, int line = 1, int column = 1);

/// Build nodes programmatically.
NodePtr make_constant(double value);
NodePtr make_variable(int index);
NodePtr make_binary(Op op, NodePtr lhs, NodePtr rhs);

// ---------------------------------------------------------------------------

namespace detail {

[[noreturn]] void throw_domain(const char* what, const Node* node);

template <class T>
std::vector<T>& scratch() {
  thread_local std::vector<T> slots;
  return slots;
}

}  // namespace detail

template <class T>
T Expr::evaluate(std::span<const T> vars) const {
  using Ops = JetOps<T>;
  constexpr bool kJet = !std::is_same_v<T, double>;
  const int n = dim_;
  auto& slots = detail::scratch<T>();
  slots.resize(tape_.size());

  for (std::size_t k = 0; k < tape_.size(); ++k) {
    const Instr& in = tape_[k];
    T& out = slots[k];
    switch (in.op) {
      case Op::constant:
      case Op::parameter:
        out = Ops::constant(n, in.value);
        break;
      case Op::variable:
        out = vars[static_cast<std::size_t>(in.index)];
        break;
      case Op::negate:
        out = Ops::neg(slots[in.a]);
        break;
      case Op::add:
        out = Ops::add(slots[in.a], slots[in.b]);
        break;
      case Op::subtract:
        out = Ops::sub(slots[in.a], slots[in.b]);
        break;
      case Op::multiply:
        out = Ops::mul(slots[in.a], slots[in.b]);
        break;
      case Op::divide: {
        const double d = Ops::value(slots[in.b]);
        if (d == 0.0) detail::throw_domain("division by zero", in.node);
        const T inv = Ops::unary(slots[in.b], 1.0 / d, -1.0 / (d * d), 2.0 / (d * d * d));
        out = Ops::mul(slots[in.a], inv);
        break;
      }
      case Op::power: {
        const double a = Ops::value(slots[in.a]);
        const double p = in.value;
        const double f = std::pow(a, p);
        if (!std::isfinite(f)) detail::throw_domain("power outside its domain", in.node);
        double d1 = 0.0;
        double d2 = 0.0;
        if constexpr (kJet) {
          if (p != 0.0) d1 = p * std::pow(a, p - 1.0);
          if (p != 0.0 && p != 1.0) d2 = p * (p - 1.0) * std::pow(a, p - 2.0);
          if (!std::isfinite(d1) || !std::isfinite(d2))
            detail::throw_domain("power not differentiable", in.node);
        }
        out = Ops::unary(slots[in.a], f, d1, d2);
        break;
      }
      case Op::sin: {
        const double a = Ops::value(slots[in.a]);
        const double s = std::sin(a);
        out = Ops::unary(slots[in.a], s, std::cos(a), -s);
        break;
      }
      case Op::cos: {
        const double a = Ops::value(slots[in.a]);
        const double c = std::cos(a);
        out = Ops::unary(slots[in.a], c, -std::sin(a), -c);
        break;
      }
      case Op::exp: {
        const double f = std::exp(Ops::value(slots[in.a]));
        out = Ops::unary(slots[in.a], f, f, f);
        break;
      }
      case Op::log: {
        const double a = Ops::value(slots[in.a]);
        if (!(a > 0.0)) detail::throw_domain("logarithm of a non-positive number", in.node);
        out = Ops::unary(slots[in.a], std::log(a), 1.0 / a, -1.0 / (a * a));
        break;
      }
      case Op::sqrt: {
        const double a = Ops::value(slots[in.a]);
        if (a < 0.0) detail::throw_domain("square root of a negative number", in.node);
        const double f = std::sqrt(a);
        if constexpr (kJet) {
          if (a == 0.0) detail::throw_domain("square root not differentiable at 0", in.node);
          out = Ops::unary(slots[in.a], f, 0.5 / f, -0.25 / (f * a));
        } else {
          out = f;
        }
        break;
      }
      case Op::abs2: {
        const double a = Ops::value(slots[in.a]);
        out = Ops::unary(slots[in.a], a * a, 2.0 * a, 2.0);
        break;
      }
    }
    if (!std::isfinite(Ops::value(out))) detail::throw_domain("non-finite value", in.node);
  }
  return slots.back();
}

}  // namespace lyap::expr
