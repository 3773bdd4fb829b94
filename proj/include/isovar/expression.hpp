#pragma once

// Small arithmetic-expression language used for metric profiles, conformal
// factors, boundary parametrizations and vector fields in config files.
//
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := '-' unary | power
//   power   := primary ('^' unary)?
//   primary := number | constant | variable | func '(' expr ')' | '(' expr ')'
//
// Functions: sin cos tan exp log sqrt sinh cosh tanh. Constants: pi, e.
// Expressions differentiate symbolically, so curvature formulas built on
// them stay closed-form.

#include "isovar/core.hpp"

#include <cctype>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace isovar {

class Expr {
 public:
  enum class Op { constant, variable, add, sub, mul, div, pow, neg, func };
  enum class Fn { sin, cos, tan, exp, log, sqrt, sinh, cosh, tanh };

  Expr() : Expr(constant(0.0)) {}

  static Expr constant(double v) {
    auto n = std::make_shared<Node>();
    n->op = Op::constant;
    n->value = v;
    return Expr(std::move(n));
  }

  static Expr variable(int index, std::string name) {
    auto n = std::make_shared<Node>();
    n->op = Op::variable;
    n->var = index;
    n->name = std::move(name);
    return Expr(std::move(n));
  }

  /// Parses `text` with the given variable names (their positions become the
  /// argument slots of eval()).
  static Expr parse(std::string_view text, std::vector<std::string> variables);

  double eval(std::span<const double> args) const { return eval_node(*node_, args); }
  double operator()(double x) const { return eval(std::span<const double>(&x, 1)); }
  double operator()(double x, double y) const {
    const double a[2] = {x, y};
    return eval(a);
  }

  Expr derivative(int var) const { return Expr(diff(node_, var)); }

  bool is_constant() const { return node_->op == Op::constant; }
  double constant_value() const { return node_->value; }

  std::string to_string() const { return print(*node_, 0); }

  friend Expr operator+(const Expr& a, const Expr& b) { return Expr(add(a.node_, b.node_)); }
  friend Expr operator-(const Expr& a, const Expr& b) { return Expr(sub(a.node_, b.node_)); }
  friend Expr operator*(const Expr& a, const Expr& b) { return Expr(mul(a.node_, b.node_)); }
  friend Expr operator/(const Expr& a, const Expr& b) { return Expr(divide(a.node_, b.node_)); }
  friend Expr operator-(const Expr& a) { return Expr(neg(a.node_)); }

 private:
  struct Node;
  using NodePtr = std::shared_ptr<const Node>;
  struct Node {
    Op op = Op::constant;
    double value = 0.0;
    int var = -1;
    std::string name;
    Fn fn = Fn::sin;
    NodePtr a, b;
  };

  explicit Expr(NodePtr n) : node_(std::move(n)) {}

  static NodePtr make_const(double v) {
    auto n = std::make_shared<Node>();
    n->op = Op::constant;
    n->value = v;
    return n;
  }
  static bool is_const(const NodePtr& n, double v) { return n->op == Op::constant && n->value == v; }
  static NodePtr binary(Op op, NodePtr a, NodePtr b) {
    auto n = std::make_shared<Node>();
    n->op = op;
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
  }
  static NodePtr add(NodePtr a, NodePtr b) {
    if (is_const(a, 0.0)) return b;
    if (is_const(b, 0.0)) return a;
    if (a->op == Op::constant && b->op == Op::constant) return make_const(a->value + b->value);
    return binary(Op::add, std::move(a), std::move(b));
  }
  static NodePtr sub(NodePtr a, NodePtr b) {
    if (is_const(b, 0.0)) return a;
    if (is_const(a, 0.0)) return neg(std::move(b));
    if (a->op == Op::constant && b->op == Op::constant) return make_const(a->value - b->value);
    return binary(Op::sub, std::move(a), std::move(b));
  }
  static NodePtr mul(NodePtr a, NodePtr b) {
    if (is_const(a, 0.0) || is_const(b, 0.0)) return make_const(0.0);
    if (is_const(a, 1.0)) return b;
    if (is_const(b, 1.0)) return a;
    if (a->op == Op::constant && b->op == Op::constant) return make_const(a->value * b->value);
    return binary(Op::mul, std::move(a), std::move(b));
  }
  static NodePtr divide(NodePtr a, NodePtr b) {
    if (is_const(a, 0.0)) return make_const(0.0);
    if (is_const(b, 1.0)) return a;
    if (a->op == Op::constant && b->op == Op::constant) return make_const(a->value / b->value);
    return binary(Op::div, std::move(a), std::move(b));
  }
  static NodePtr power(NodePtr a, NodePtr b) {
    if (is_const(b, 0.0)) return make_const(1.0);
    if (is_const(b, 1.0)) return a;
    if (a->op == Op::constant && b->op == Op::constant) return make_const(std::pow(a->value, b->value));
    return binary(Op::pow, std::move(a), std::move(b));
  }
  static NodePtr neg(NodePtr a) {
    if (a->op == Op::constant) return make_const(-a->value);
    if (a->op == Op::neg) return a->a;
    auto n = std::make_shared<Node>();
    n->op = Op::neg;
    n->a = std::move(a);
    return n;
  }
  static NodePtr func(Fn fn, NodePtr a) {
    if (a->op == Op::constant) return make_const(apply(fn, a->value));
    auto n = std::make_shared<Node>();
    n->op = Op::func;
    n->fn = fn;
    n->a = std::move(a);
    return n;
  }

  static double apply(Fn fn, double x) {
    switch (fn) {
      case Fn::sin: return std::sin(x);
      case Fn::cos: return std::cos(x);
      case Fn::tan: return std::tan(x);
      case Fn::exp: return std::exp(x);
      case Fn::log: return std::log(x);
      case Fn::sqrt: return std::sqrt(x);
      case Fn::sinh: return std::sinh(x);
      case Fn::cosh: return std::cosh(x);
      case Fn::tanh: return std::tanh(x);
    }
    return 0.0;
  }

  static const char* fn_name(Fn fn) {
    switch (fn) {
      case Fn::sin: return "sin";
      case Fn::cos: return "cos";
      case Fn::tan: return "tan";
      case Fn::exp: return "exp";
      case Fn::log: return "log";
      case Fn::sqrt: return "sqrt";
      case Fn::sinh: return "sinh";
      case Fn::cosh: return "cosh";
      case Fn::tanh: return "tanh";
    }
    return "?";
  }

  static double eval_node(const Node& n, std::span<const double> args) {
    switch (n.op) {
      case Op::constant: return n.value;
      case Op::variable: return args[static_cast<std::size_t>(n.var)];
      case Op::add: return eval_node(*n.a, args) + eval_node(*n.b, args);
      case Op::sub: return eval_node(*n.a, args) - eval_node(*n.b, args);
      case Op::mul: return eval_node(*n.a, args) * eval_node(*n.b, args);
      case Op::div: return eval_node(*n.a, args) / eval_node(*n.b, args);
      case Op::neg: return -eval_node(*n.a, args);
      case Op::pow: {
        const double base = eval_node(*n.a, args);
        if (n.b->op == Op::constant) {
          const double e = n.b->value;
          if (e == 2.0) return base * base;
          if (e == 3.0) return base * base * base;
          return std::pow(base, e);
        }
        return std::pow(base, eval_node(*n.b, args));
      }
      case Op::func: return apply(n.fn, eval_node(*n.a, args));
    }
    return 0.0;
  }

  static NodePtr diff(const NodePtr& n, int v) {
    switch (n->op) {
      case Op::constant: return make_const(0.0);
      case Op::variable: return make_const(n->var == v ? 1.0 : 0.0);
      case Op::add: return add(diff(n->a, v), diff(n->b, v));
      case Op::sub: return sub(diff(n->a, v), diff(n->b, v));
      case Op::neg: return neg(diff(n->a, v));
      case Op::mul:
        return add(mul(diff(n->a, v), n->b), mul(n->a, diff(n->b, v)));
      case Op::div:
        return divide(sub(mul(diff(n->a, v), n->b), mul(n->a, diff(n->b, v))), mul(n->b, n->b));
      case Op::pow: {
        if (n->b->op == Op::constant) {
          const double e = n->b->value;
          return mul(mul(make_const(e), power(n->a, make_const(e - 1.0))), diff(n->a, v));
        }
        // d(a^b) = a^b (b' ln a + b a'/a)
        NodePtr term = add(mul(diff(n->b, v), func(Fn::log, n->a)),
                           divide(mul(n->b, diff(n->a, v)), n->a));
        return mul(n, term);
      }
      case Op::func: {
        const NodePtr& a = n->a;
        NodePtr da = diff(a, v);
        if (is_const(da, 0.0)) return make_const(0.0);
        NodePtr outer;
        switch (n->fn) {
          case Fn::sin: outer = func(Fn::cos, a); break;
          case Fn::cos: outer = neg(func(Fn::sin, a)); break;
          case Fn::tan: {
            NodePtr c = func(Fn::cos, a);
            outer = divide(make_const(1.0), mul(c, c));
            break;
          }
          case Fn::exp: outer = n; break;
          case Fn::log: outer = divide(make_const(1.0), a); break;
          case Fn::sqrt: outer = divide(make_const(0.5), n); break;
          case Fn::sinh: outer = func(Fn::cosh, a); break;
          case Fn::cosh: outer = func(Fn::sinh, a); break;
          case Fn::tanh: {
            NodePtr c = func(Fn::cosh, a);
            outer = divide(make_const(1.0), mul(c, c));
            break;
          }
        }
        return mul(outer, da);
      }
    }
    return make_const(0.0);
  }

  static int precedence(const Node& n) {
    switch (n.op) {
      case Op::add:
      case Op::sub: return 1;
      case Op::mul:
      case Op::div: return 2;
      case Op::neg: return 3;
      case Op::pow: return 4;
      default: return 5;
    }
  }

  static std::string print(const Node& n, int parent) {
    std::string s;
    const int p = precedence(n);
    switch (n.op) {
      case Op::constant: {
        s = format_double(n.value);
        if (n.value < 0) s = "(" + s + ")";
        return s;
      }
      case Op::variable: return n.name;
      case Op::add: s = print(*n.a, 1) + " + " + print(*n.b, 2); break;
      case Op::sub: s = print(*n.a, 1) + " - " + print(*n.b, 2); break;
      case Op::mul: s = print(*n.a, 2) + "*" + print(*n.b, 3); break;
      case Op::div: s = print(*n.a, 2) + "/" + print(*n.b, 3); break;
      case Op::neg: s = "-" + print(*n.a, 3); break;
      case Op::pow: s = print(*n.a, 5) + "^" + print(*n.b, 4); break;
      case Op::func: return std::string(fn_name(n.fn)) + "(" + print(*n.a, 0) + ")";
    }
    if (p < parent) s = "(" + s + ")";
    return s;
  }

  class Parser;

  NodePtr node_;
};

class Expr::Parser {
 public:
  Parser(std::string_view text, const std::vector<std::string>& vars) : text_(text), vars_(vars) {}

  NodePtr parse() {
    NodePtr n = expr();
    skip();
    if (pos_ != text_.size()) fail("unexpected trailing input");
    return n;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw Error(ErrorKind::parse,
                "expression '" + std::string(text_) + "' at " + std::to_string(pos_) + ": " + msg);
  }
  void skip() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }
  bool accept(char c) {
    skip();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  NodePtr expr() {
    NodePtr n = term();
    for (;;) {
      if (accept('+')) {
        n = binary(Op::add, n, term());
      } else if (accept('-')) {
        n = binary(Op::sub, n, term());
      } else {
        return n;
      }
    }
  }
  NodePtr term() {
    NodePtr n = unary();
    for (;;) {
      if (accept('*')) {
        n = binary(Op::mul, n, unary());
      } else if (accept('/')) {
        n = binary(Op::div, n, unary());
      } else {
        return n;
      }
    }
  }
  NodePtr unary() {
    if (accept('-')) return Expr::neg(unary());
    if (accept('+')) return unary();
    return pow_expr();
  }
  NodePtr pow_expr() {
    NodePtr base = primary();
    if (accept('^')) return binary(Op::pow, base, unary());
    return base;
  }
  NodePtr primary() {
    skip();
    if (pos_ >= text_.size()) fail("unexpected end of input");
    const char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      NodePtr n = expr();
      if (!accept(')')) fail("expected ')'");
      return n;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      const std::size_t start = pos_;
      while (pos_ < text_.size() &&
             (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
        ++pos_;
      }
      const std::string id(text_.substr(start, pos_ - start));
      for (std::size_t i = 0; i < vars_.size(); ++i) {
        if (vars_[i] == id) return Expr::variable(static_cast<int>(i), id).node_;
      }
      if (id == "pi") return make_const(kPi);
      if (id == "e") return make_const(std::numbers::e);
      static const std::pair<const char*, Fn> fns[] = {
          {"sin", Fn::sin},   {"cos", Fn::cos},   {"tan", Fn::tan},
          {"exp", Fn::exp},   {"log", Fn::log},   {"sqrt", Fn::sqrt},
          {"sinh", Fn::sinh}, {"cosh", Fn::cosh}, {"tanh", Fn::tanh},
      };
      for (const auto& [name, fn] : fns) {
        if (id == name) {
          if (!accept('(')) fail("expected '(' after " + id);
          NodePtr arg = expr();
          if (!accept(')')) fail("expected ')'");
          auto n = std::make_shared<Node>();
          n->op = Op::func;
          n->fn = fn;
          n->a = std::move(arg);
          return n;
        }
      }
      fail("unknown identifier '" + id + "'");
    }
    fail(std::string("unexpected character '") + c + "'");
  }
  NodePtr number() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.')) {
      ++pos_;
    }
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      std::size_t look = pos_ + 1;
      if (look < text_.size() && (text_[look] == '+' || text_[look] == '-')) ++look;
      if (look < text_.size() && std::isdigit(static_cast<unsigned char>(text_[look]))) {
        pos_ = look;
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      }
    }
    return make_const(parse_double(text_.substr(start, pos_ - start)));
  }

  std::string_view text_;
  const std::vector<std::string>& vars_;
  std::size_t pos_ = 0;
};

inline Expr Expr::parse(std::string_view text, std::vector<std::string> variables) {
  Parser p(text, variables);
  return Expr(p.parse());
}

}  // namespace isovar
