#include "lyap/expr.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>
#include <functional>
#include <numbers>
#include <unordered_map>

namespace lyap::expr {

namespace {

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

const char* function_name(Op op) {
  switch (op) {
    case Op::sin: return "sin";
    case Op::cos: return "cos";
    case Op::exp: return "exp";
    case Op::log: return "ln";
    case Op::sqrt: return "sqrt";
    case Op::abs2: return "abs2";
    default: return nullptr;
  }
}

const std::unordered_map<std::string_view, Op>& functions() {
  static const std::unordered_map<std::string_view, Op> table{
      {"sin", Op::sin},   {"cos", Op::cos},   {"exp", Op::exp},  {"ln", Op::log},
      {"log", Op::log},   {"sqrt", Op::sqrt}, {"abs2", Op::abs2}};
  return table;
}

bool is_unary_function(Op op) { return function_name(op) != nullptr; }

// ---------------------------------------------------------------------------
// Lexer

enum class Tok { number, ident, plus, minus, star, slash, caret, lparen, rparen, end };

struct Token {
  Tok kind;
  std::string_view text;
  double number = 0.0;
  int offset = 0;
};

class Lexer {
 public:
  Lexer(std::string_view src, int line, int column) : src_(src), line_(line), column_(column) {}

  Token next() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    const int start = static_cast<int>(pos_);
    if (pos_ >= src_.size()) return {Tok::end, {}, 0.0, start};
    const char c = src_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number(start);
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      while (pos_ < src_.size() &&
             (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
        ++pos_;
      return {Tok::ident, src_.substr(start, pos_ - start), 0.0, start};
    }
    ++pos_;
    switch (c) {
      case '+': return {Tok::plus, src_.substr(start, 1), 0.0, start};
      case '-': return {Tok::minus, src_.substr(start, 1), 0.0, start};
      case '*':
        if (pos_ < src_.size() && src_[pos_] == '*') {
          ++pos_;
          return {Tok::caret, src_.substr(start, 2), 0.0, start};
        }
        return {Tok::star, src_.substr(start, 1), 0.0, start};
      case '/': return {Tok::slash, src_.substr(start, 1), 0.0, start};
      case '^': return {Tok::caret, src_.substr(start, 1), 0.0, start};
      case '(': return {Tok::lparen, src_.substr(start, 1), 0.0, start};
      case ')': return {Tok::rparen, src_.substr(start, 1), 0.0, start};
      default: fail(std::string("unexpected character '") + c + "'", start);
    }
  }

  [[noreturn]] void fail(const std::string& what, int offset) const {
    throw ParseError(what, line_, column_ + offset);
  }

 private:
  Token number(int start) {
    while (pos_ < src_.size() &&
           (std::isdigit(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '.'))
      ++pos_;
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      std::size_t p = pos_ + 1;
      if (p < src_.size() && (src_[p] == '+' || src_[p] == '-')) ++p;
      if (p < src_.size() && std::isdigit(static_cast<unsigned char>(src_[p]))) {
        pos_ = p;
        while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
      }
    }
    const std::string_view text = src_.substr(start, pos_ - start);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size())
      fail("malformed number '" + std::string(text) + "'", start);
    return {Tok::number, text, value, start};
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  int line_;
  int column_;
};

// ---------------------------------------------------------------------------
// Pratt parser

class Parser {
 public:
  Parser(std::string_view src, const Symbols& symbols, int line, int column)
      : lexer_(src, line, column), symbols_(symbols) {
    advance();
  }

  NodePtr parse() {
    NodePtr root = expression(0);
    if (current_.kind != Tok::end) fail("unexpected '" + std::string(current_.text) + "'");
    return root;
  }

 private:
  static int infix_power(Tok t) {
    switch (t) {
      case Tok::plus:
      case Tok::minus: return 10;
      case Tok::star:
      case Tok::slash: return 20;
      case Tok::caret: return 40;
      default: return -1;
    }
  }

  static constexpr int kPrefixPower = 30;

  NodePtr expression(int min_power) {
    Token tok = current_;
    advance();
    NodePtr lhs = prefix(tok);
    for (;;) {
      const int power = infix_power(current_.kind);
      if (power <= min_power) break;
      const Token op = current_;
      advance();
      lhs = infix(op, std::move(lhs));
    }
    return lhs;
  }

  NodePtr prefix(const Token& tok) {
    switch (tok.kind) {
      case Tok::number: return make_constant(tok.number);
      case Tok::minus: {
        auto node = std::make_shared<Node>();
        node->op = Op::negate;
        node->lhs = expression(kPrefixPower);
        return node;
      }
      case Tok::plus: return expression(kPrefixPower);
      case Tok::lparen: {
        NodePtr inner = expression(0);
        expect(Tok::rparen, "')'");
        return inner;
      }
      case Tok::ident: return identifier(tok);
      case Tok::end: fail_at("unexpected end of expression", tok.offset);
      default: fail_at("unexpected '" + std::string(tok.text) + "'", tok.offset);
    }
  }

  NodePtr identifier(const Token& tok) {
    const std::string name(tok.text);
    if (auto it = functions().find(tok.text); it != functions().end()) {
      if (current_.kind != Tok::lparen) fail("expected '(' after function " + name);
      advance();
      auto node = std::make_shared<Node>();
      node->op = it->second;
      node->lhs = expression(0);
      expect(Tok::rparen, "')'");
      return node;
    }
    if (name == "pi" || name == "e") {
      auto node = std::make_shared<Node>();
      node->op = Op::constant;
      node->value = name == "pi" ? std::numbers::pi : std::numbers::e;
      node->name = name;
      return node;
    }
    if (name.size() > 1 && name[0] == 'x' &&
        name.find_first_not_of("0123456789", 1) == std::string::npos) {
      const int index = std::stoi(name.substr(1));
      if (index < 1 || index > symbols_.dim)
        fail_at("variable " + name + " outside declared dimension " + std::to_string(symbols_.dim),
                tok.offset);
      return make_variable(index - 1);
    }
    if (auto it = symbols_.params.find(name); it != symbols_.params.end()) {
      auto node = std::make_shared<Node>();
      node->op = Op::parameter;
      node->value = it->second;
      node->name = name;
      return node;
    }
    fail_at("unknown identifier '" + name + "'", tok.offset);
  }

  NodePtr infix(const Token& op, NodePtr lhs) {
    switch (op.kind) {
      case Tok::plus: return make_binary(Op::add, std::move(lhs), expression(10));
      case Tok::minus: return make_binary(Op::subtract, std::move(lhs), expression(10));
      case Tok::star: return make_binary(Op::multiply, std::move(lhs), expression(20));
      case Tok::slash: return make_binary(Op::divide, std::move(lhs), expression(20));
      case Tok::caret: {
        const int offset = current_.offset;
        NodePtr exponent = expression(39);
        if (Expr(exponent, symbols_.dim).depends_on_variables())
          fail_at("exponent must be constant", offset);
        auto node = std::make_shared<Node>();
        node->op = Op::power;
        node->value = Expr(exponent, symbols_.dim).evaluate<double>({});
        node->lhs = std::move(lhs);
        node->rhs = std::move(exponent);
        return node;
      }
      default: fail_at("unexpected operator", op.offset);
    }
  }

  void advance() { current_ = lexer_.next(); }

  void expect(Tok kind, const char* what) {
    if (current_.kind != kind) fail(std::string("expected ") + what);
    advance();
  }

  [[noreturn]] void fail(const std::string& what) const { lexer_.fail(what, current_.offset); }
  [[noreturn]] void fail_at(const std::string& what, int offset) const { lexer_.fail(what, offset); }

  Lexer lexer_;
  const Symbols& symbols_;
  Token current_{Tok::end, {}, 0.0, 0};
};

bool has_variables(const Node& n) {
  if (n.op == Op::variable) return true;
  if (n.lhs && has_variables(*n.lhs)) return true;
  if (n.op != Op::power && n.rhs && has_variables(*n.rhs)) return true;
  return false;
}

int smoothness_of(const Node& n) {
  constexpr int kCap = 4;
  int s = kCap;
  if (n.lhs) s = std::min(s, smoothness_of(*n.lhs));
  if (n.rhs && n.op != Op::power) s = std::min(s, smoothness_of(*n.rhs));
  if (n.op == Op::sqrt) s = 0;
  if (n.op == Op::power) {
    const double p = n.value;
    if (p != std::floor(p) || p < 0.0) s = std::min(s, std::max(0, static_cast<int>(std::floor(p))));
  }
  return s;
}

}  // namespace

std::string to_string(const Node& n) {
  switch (n.op) {
    case Op::constant:
      if (!n.name.empty()) return n.name;
      return n.value < 0 ? "(" + format_number(n.value) + ")" : format_number(n.value);
    case Op::variable: return "x" + std::to_string(n.index + 1);
    case Op::parameter: return n.name;
    case Op::negate: return "(-" + to_string(*n.lhs) + ")";
    case Op::add: return "(" + to_string(*n.lhs) + " + " + to_string(*n.rhs) + ")";
    case Op::subtract: return "(" + to_string(*n.lhs) + " - " + to_string(*n.rhs) + ")";
    case Op::multiply: return "(" + to_string(*n.lhs) + "*" + to_string(*n.rhs) + ")";
    case Op::divide: return "(" + to_string(*n.lhs) + "/" + to_string(*n.rhs) + ")";
    case Op::power: return "(" + to_string(*n.lhs) + ")^(" + to_string(*n.rhs) + ")";
    default:
      if (is_unary_function(n.op)) return std::string(function_name(n.op)) + "(" + to_string(*n.lhs) + ")";
  }
  return "?";
}

NodePtr make_constant(double value) {
  auto node = std::make_shared<Node>();
  node->op = Op::constant;
  node->value = value;
  return node;
}

NodePtr make_variable(int index) {
  auto node = std::make_shared<Node>();
  node->op = Op::variable;
  node->index = index;
  return node;
}

NodePtr make_binary(Op op, NodePtr lhs, NodePtr rhs) {
  auto node = std::make_shared<Node>();
  node->op = op;
  node->lhs = std::move(lhs);
  node->rhs = std::move(rhs);
  return node;
}

Expr::Expr(NodePtr root, int dim) : root_(std::move(root)), dim_(dim) {
  // Post-order flattening; the exponent subtree of a power is folded already.
  std::function<int(const Node&)> emit = [&](const Node& n) -> int {
    Instr in{n.op, n.value, n.index, -1, -1, &n};
    if (n.lhs) in.a = emit(*n.lhs);
    if (n.rhs && n.op != Op::power) in.b = emit(*n.rhs);
    if (n.op == Op::variable && (n.index < 0 || n.index >= dim_))
      throw Error("variable index outside declared dimension");
    tape_.push_back(in);
    return static_cast<int>(tape_.size()) - 1;
  };
  if (root_) emit(*root_);
}

bool Expr::depends_on_variables() const { return root_ && has_variables(*root_); }

int Expr::smoothness() const { return root_ ? smoothness_of(*root_) : 4; }

double Expr::operator()(const Vector& x) const {
  return evaluate<double>(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())));
}

Dual<double> Expr::dual(const Vector& x) const {
  std::vector<Dual<double>> v(static_cast<std::size_t>(dim_));
  for (int i = 0; i < dim_; ++i) v[i] = JetOps<Dual<double>>::variable(dim_, i, x[i]);
  return evaluate<Dual<double>>(v);
}

Jet2<double> Expr::jet2(const Vector& x) const {
  std::vector<Jet2<double>> v(static_cast<std::size_t>(dim_));
  for (int i = 0; i < dim_; ++i) v[i] = JetOps<Jet2<double>>::variable(dim_, i, x[i]);
  return evaluate<Jet2<double>>(v);
}

Expr parse_expression(std::string_view text, const Symbols& symbols, int line, int column) {
  if (symbols.dim < 1 || symbols.dim > kMaxDim)
    throw ParseError("dimension must be between 1 and " + std::to_string(kMaxDim), line, column);
  Parser parser(text, symbols, line, column);
  return Expr(parser.parse(), symbols.dim);
}

namespace detail {

void throw_domain(const char* what, const Node* node) {
  throw DomainError(what, node ? to_string(*node) : std::string("?"));
}

}  // namespace detail

}  // namespace lyap::expr
