#pragma once
// Arithmetic expressions over variables x1..xn: recursive-descent parser and
// evaluation with forward-mode derivatives. Grammar (usual precedence, unary
// minus binds below '^', '^' right-associative):
//
//   expr   := term (('+'|'-') term)*
//   term   := unary (('*'|'/') unary)*
//   unary  := '-' unary | power
//   power  := atom ('^' unary)?          exponent must fold to a constant
//   atom   := number | 'pi' | 'e' | ('sin'|'cos'|'exp') '(' expr ')'
//           | 'x'<k> | '(' expr ')'
//
// The constant-exponent restriction keeps every expression smooth in the
// variables and gives pow a closed-form derivative.

#include <cctype>
#include <cmath>
#include <numbers>
#include <memory>
#include <string>
#include <vector>

#include "csdm/core.hpp"

namespace csdm::expr {

enum class NodeKind { Constant, Variable, Neg, Sin, Cos, Exp, Add, Sub, Mul, Div, Pow };

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Node {
  NodeKind kind;
  double constant = 0.0;  // Constant payload
  int var = 0;            // Variable payload: 0-based coordinate
  double exponent = 0.0;  // Pow payload
  NodePtr a, b;
};

inline NodePtr make_constant(double v) {
  auto n = std::make_shared<Node>();
  n->kind = NodeKind::Constant;
  n->constant = v;
  return n;
}

inline NodePtr make_variable(int idx) {
  auto n = std::make_shared<Node>();
  n->kind = NodeKind::Variable;
  n->var = idx;
  return n;
}

inline NodePtr make_unary(NodeKind k, NodePtr a) {
  auto n = std::make_shared<Node>();
  n->kind = k;
  n->a = std::move(a);
  return n;
}

inline NodePtr make_binary(NodeKind k, NodePtr a, NodePtr b) {
  auto n = std::make_shared<Node>();
  n->kind = k;
  n->a = std::move(a);
  n->b = std::move(b);
  return n;
}

inline NodePtr make_pow(NodePtr base, double exponent) {
  auto n = std::make_shared<Node>();
  n->kind = NodeKind::Pow;
  n->a = std::move(base);
  n->exponent = exponent;
  return n;
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

inline double eval(const NodePtr& n, const Vector& u) {
  switch (n->kind) {
    case NodeKind::Constant: return n->constant;
    case NodeKind::Variable: return u(n->var);
    case NodeKind::Neg: return -eval(n->a, u);
    case NodeKind::Sin: return std::sin(eval(n->a, u));
    case NodeKind::Cos: return std::cos(eval(n->a, u));
    case NodeKind::Exp: return std::exp(eval(n->a, u));
    case NodeKind::Add: return eval(n->a, u) + eval(n->b, u);
    case NodeKind::Sub: return eval(n->a, u) - eval(n->b, u);
    case NodeKind::Mul: return eval(n->a, u) * eval(n->b, u);
    case NodeKind::Div: {
      double num = eval(n->a, u);
      double den = eval(n->b, u);
      if (den == 0.0) throw EvaluationError("division by zero");
      return num / den;
    }
    case NodeKind::Pow: return std::pow(eval(n->a, u), n->exponent);
  }
  throw EvaluationError("corrupt expression node");
}

// Value plus gradient, propagated forward through the tree.
struct Dual {
  double v = 0.0;
  Vector g;
};

inline Dual eval_dual(const NodePtr& n, const Vector& u) {
  switch (n->kind) {
    case NodeKind::Constant: return {n->constant, Vector::Zero(u.size())};
    case NodeKind::Variable: {
      Dual d{u(n->var), Vector::Zero(u.size())};
      d.g(n->var) = 1.0;
      return d;
    }
    case NodeKind::Neg: {
      Dual a = eval_dual(n->a, u);
      return {-a.v, -a.g};
    }
    case NodeKind::Sin: {
      Dual a = eval_dual(n->a, u);
      return {std::sin(a.v), Vector(std::cos(a.v) * a.g)};
    }
    case NodeKind::Cos: {
      Dual a = eval_dual(n->a, u);
      return {std::cos(a.v), Vector(-std::sin(a.v) * a.g)};
    }
    case NodeKind::Exp: {
      Dual a = eval_dual(n->a, u);
      double e = std::exp(a.v);
      return {e, Vector(e * a.g)};
    }
    case NodeKind::Add: {
      Dual a = eval_dual(n->a, u), b = eval_dual(n->b, u);
      return {a.v + b.v, Vector(a.g + b.g)};
    }
    case NodeKind::Sub: {
      Dual a = eval_dual(n->a, u), b = eval_dual(n->b, u);
      return {a.v - b.v, Vector(a.g - b.g)};
    }
    case NodeKind::Mul: {
      Dual a = eval_dual(n->a, u), b = eval_dual(n->b, u);
      return {a.v * b.v, Vector(a.v * b.g + b.v * a.g)};
    }
    case NodeKind::Div: {
      Dual a = eval_dual(n->a, u), b = eval_dual(n->b, u);
      if (b.v == 0.0) throw EvaluationError("division by zero");
      return {a.v / b.v, Vector((a.g - (a.v / b.v) * b.g) / b.v)};
    }
    case NodeKind::Pow: {
      Dual a = eval_dual(n->a, u);
      double c = n->exponent;
      double v = std::pow(a.v, c);
      // d/du a^c = c a^(c-1) a'; a^(c-1) is c/a * v only when a != 0.
      double coef;
      if (a.v == 0.0) {
        if (c > 1.0)
          coef = 0.0;
        else if (c == 1.0)
          coef = 1.0;
        else
          throw EvaluationError("pow: derivative singular at zero base");
      } else {
        coef = c * std::pow(a.v, c - 1.0);
      }
      if (!std::isfinite(v) || !std::isfinite(coef))
        throw EvaluationError("pow: non-finite result (base " +
                              std::to_string(a.v) + ", exponent " +
                              std::to_string(c) + ")");
      return {v, Vector(coef * a.g)};
    }
  }
  throw EvaluationError("corrupt expression node");
}

inline bool contains_variable(const NodePtr& n) {
  switch (n->kind) {
    case NodeKind::Constant: return false;
    case NodeKind::Variable: return true;
    case NodeKind::Neg:
    case NodeKind::Sin:
    case NodeKind::Cos:
    case NodeKind::Exp:
    case NodeKind::Pow: return contains_variable(n->a);
    default: return contains_variable(n->a) || contains_variable(n->b);
  }
}

// Conservative affinity test via polynomial degree; nonlinear operations on
// variable-bearing subtrees disqualify.
inline int poly_degree(const NodePtr& n) {
  constexpr int kNonPoly = 1000;
  switch (n->kind) {
    case NodeKind::Constant: return 0;
    case NodeKind::Variable: return 1;
    case NodeKind::Neg: return poly_degree(n->a);
    case NodeKind::Sin:
    case NodeKind::Cos:
    case NodeKind::Exp:
      return contains_variable(n->a) ? kNonPoly : 0;
    case NodeKind::Add:
    case NodeKind::Sub:
      return std::max(poly_degree(n->a), poly_degree(n->b));
    case NodeKind::Mul: {
      int da = poly_degree(n->a), db = poly_degree(n->b);
      return da >= kNonPoly || db >= kNonPoly ? kNonPoly : da + db;
    }
    case NodeKind::Div:
      return contains_variable(n->b) ? kNonPoly : poly_degree(n->a);
    case NodeKind::Pow: {
      if (!contains_variable(n->a)) return 0;
      double c = n->exponent;
      if (c >= 0.0 && c == std::floor(c) && c <= 100.0)
        return poly_degree(n->a) >= kNonPoly
                   ? kNonPoly
                   : poly_degree(n->a) * static_cast<int>(c);
      return kNonPoly;
    }
  }
  return kNonPoly;
}

inline bool is_affine(const NodePtr& n) { return poly_degree(n) <= 1; }

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

namespace detail {

struct Lexer {
  const std::string& text;
  std::size_t pos = 0;
  int line;

  explicit Lexer(const std::string& t, int ln) : text(t), line(ln) {}

  void skip_space() {
    while (pos < text.size() && (text[pos] == ' ' || text[pos] == '\t')) ++pos;
  }
  char peek() {
    skip_space();
    return pos < text.size() ? text[pos] : '\0';
  }
  char take() {
    char c = peek();
    if (pos < text.size()) ++pos;
    return c;
  }
  [[noreturn]] void fail(const std::string& msg) {
    throw ParseError("line " + std::to_string(line) + ", column " +
                         std::to_string(pos + 1) + ": " + msg,
                     line);
  }
};

inline NodePtr parse_expr(Lexer& lx, int dim);

inline NodePtr parse_atom(Lexer& lx, int dim) {
  char c = lx.peek();
  if (c == '(') {
    lx.take();
    NodePtr e = parse_expr(lx, dim);
    if (lx.peek() != ')') lx.fail("expected ')'");
    lx.take();
    return e;
  }
  if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
    std::size_t start = lx.pos;
    while (lx.pos < lx.text.size() &&
           (std::isdigit(static_cast<unsigned char>(lx.text[lx.pos])) ||
            lx.text[lx.pos] == '.'))
      ++lx.pos;
    if (lx.pos < lx.text.size() &&
        (lx.text[lx.pos] == 'e' || lx.text[lx.pos] == 'E')) {
      std::size_t mark = lx.pos++;
      if (lx.pos < lx.text.size() &&
          (lx.text[lx.pos] == '+' || lx.text[lx.pos] == '-'))
        ++lx.pos;
      if (lx.pos < lx.text.size() &&
          std::isdigit(static_cast<unsigned char>(lx.text[lx.pos]))) {
        while (lx.pos < lx.text.size() &&
               std::isdigit(static_cast<unsigned char>(lx.text[lx.pos])))
          ++lx.pos;
      } else {
        lx.pos = mark;  // trailing 'e' belongs to the next token
      }
    }
    try {
      return make_constant(std::stod(lx.text.substr(start, lx.pos - start)));
    } catch (const std::exception&) {
      lx.fail("malformed number");
    }
  }
  if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
    std::size_t start = lx.pos;
    while (lx.pos < lx.text.size() &&
           (std::isalnum(static_cast<unsigned char>(lx.text[lx.pos])) ||
            lx.text[lx.pos] == '_'))
      ++lx.pos;
    std::string ident = lx.text.substr(start, lx.pos - start);
    if (ident == "pi") return make_constant(std::numbers::pi);
    if (ident == "e") return make_constant(std::numbers::e);
    if (ident == "sin" || ident == "cos" || ident == "exp") {
      if (lx.peek() != '(') lx.fail("expected '(' after " + ident);
      lx.take();
      NodePtr arg = parse_expr(lx, dim);
      if (lx.peek() != ')') lx.fail("expected ')'");
      lx.take();
      NodeKind k = ident == "sin"   ? NodeKind::Sin
                   : ident == "cos" ? NodeKind::Cos
                                    : NodeKind::Exp;
      return make_unary(k, std::move(arg));
    }
    if (ident.size() >= 2 && ident[0] == 'x') {
      bool digits = true;
      for (std::size_t i = 1; i < ident.size(); ++i)
        digits = digits && std::isdigit(static_cast<unsigned char>(ident[i]));
      if (digits) {
        int k = std::stoi(ident.substr(1));
        if (k < 1 || k > dim)
          lx.fail("variable " + ident + " out of range for dimension " +
                  std::to_string(dim));
        return make_variable(k - 1);
      }
    }
    lx.fail("unknown identifier '" + ident + "'");
  }
  lx.fail(c == '\0' ? "unexpected end of expression"
                    : std::string("unexpected character '") + c + "'");
}

inline NodePtr parse_unary(Lexer& lx, int dim);

inline NodePtr parse_power(Lexer& lx, int dim) {
  NodePtr base = parse_atom(lx, dim);
  if (lx.peek() != '^') return base;
  lx.take();
  NodePtr expo = parse_unary(lx, dim);  // right-associative
  if (contains_variable(expo))
    lx.fail("exponent must evaluate to a constant");
  double c = eval(expo, Vector());
  return make_pow(std::move(base), c);
}

inline NodePtr parse_unary(Lexer& lx, int dim) {
  if (lx.peek() == '-') {
    lx.take();
    return make_unary(NodeKind::Neg, parse_unary(lx, dim));
  }
  return parse_power(lx, dim);
}

inline NodePtr parse_term(Lexer& lx, int dim) {
  NodePtr lhs = parse_unary(lx, dim);
  for (;;) {
    char c = lx.peek();
    if (c != '*' && c != '/') return lhs;
    lx.take();
    NodePtr rhs = parse_unary(lx, dim);
    lhs = make_binary(c == '*' ? NodeKind::Mul : NodeKind::Div, std::move(lhs),
                      std::move(rhs));
  }
}

inline NodePtr parse_expr(Lexer& lx, int dim) {
  NodePtr lhs = parse_term(lx, dim);
  for (;;) {
    char c = lx.peek();
    if (c != '+' && c != '-') return lhs;
    lx.take();
    NodePtr rhs = parse_term(lx, dim);
    lhs = make_binary(c == '+' ? NodeKind::Add : NodeKind::Sub, std::move(lhs),
                      std::move(rhs));
  }
}

}  // namespace detail

// Parses a single expression over x1..x<dim>. `line` seeds error locations.
inline NodePtr parse_expression(const std::string& text, int dim,
                                int line = 1) {
  detail::Lexer lx(text, line);
  NodePtr e = detail::parse_expr(lx, dim);
  if (lx.peek() != '\0')
    lx.fail(std::string("unexpected trailing input starting at '") +
            lx.peek() + "'");
  return e;
}

// Wraps an expression tree as a differentiable function.
inline ConstraintFn to_constraint(const NodePtr& ast, int label) {
  ConstraintFn f;
  f.label = label;
  f.linear = is_affine(ast);
  f.value = [ast](const Vector& u) { return eval(ast, u); };
  f.gradient = [ast](const Vector& u) { return eval_dual(ast, u).g; };
  return f;
}

}  // namespace csdm::expr
