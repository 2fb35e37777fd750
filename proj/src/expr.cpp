#include "homog/expr.hpp"

#include "homog/errors.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <unordered_map>

namespace homog::expr {

struct Instr {
  Op op;
  int index;
  double value;
};

struct Program {
  std::vector<Instr> code;
  std::size_t max_depth = 0;
};

namespace {

NodePtr make_const(double v) {
  auto n = std::make_shared<Node>();
  n->op = Op::constant;
  n->value = v;
  return n;
}

NodePtr make_var(Var v) {
  auto n = std::make_shared<Node>();
  n->op = v.kind == VarKind::slow ? Op::slow_var : Op::fast_var;
  n->index = v.index;
  return n;
}

bool is_const(const NodePtr& n) { return n->op == Op::constant; }
bool is_const(const NodePtr& n, double v) { return n->op == Op::constant && n->value == v; }

double ipow(double base, int e) {
  double result = 1.0;
  while (e > 0) {
    if (e & 1) result *= base;
    base *= base;
    e >>= 1;
  }
  return result;
}

double apply_unary(Op op, double a) {
  switch (op) {
    case Op::neg:
      return -a;
    case Op::sin:
      return std::sin(a);
    case Op::cos:
      return std::cos(a);
    case Op::exp:
      return std::exp(a);
    case Op::sqrt:
      if (a < 0.0) throw DomainError("sqrt of negative argument " + std::to_string(a));
      return std::sqrt(a);
    default:
      return a;
  }
}

double apply_binary(Op op, double a, double b) {
  switch (op) {
    case Op::add:
      return a + b;
    case Op::sub:
      return a - b;
    case Op::mul:
      return a * b;
    case Op::div:
      if (b == 0.0) throw DomainError("division by zero");
      return a / b;
    default:
      return 0.0;
  }
}

NodePtr make_unary(Op op, NodePtr a) {
  if (is_const(a)) return make_const(apply_unary(op, a->value));
  if (op == Op::neg && a->op == Op::neg) return a->lhs;
  auto n = std::make_shared<Node>();
  n->op = op;
  n->lhs = std::move(a);
  return n;
}

NodePtr make_binary(Op op, NodePtr a, NodePtr b) {
  if (is_const(a) && is_const(b) && !(op == Op::div && b->value == 0.0))
    return make_const(apply_binary(op, a->value, b->value));
  switch (op) {
    case Op::add:
      if (is_const(a, 0.0)) return b;
      if (is_const(b, 0.0)) return a;
      break;
    case Op::sub:
      if (is_const(b, 0.0)) return a;
      if (is_const(a, 0.0)) return make_unary(Op::neg, b);
      break;
    case Op::mul:
      if (is_const(a, 0.0) || is_const(b, 0.0)) return make_const(0.0);
      if (is_const(a, 1.0)) return b;
      if (is_const(b, 1.0)) return a;
      break;
    case Op::div:
      if (is_const(b, 1.0)) return a;
      if (is_const(a, 0.0) && !is_const(b)) return make_const(0.0);
      break;
    default:
      break;
  }
  auto n = std::make_shared<Node>();
  n->op = op;
  n->lhs = std::move(a);
  n->rhs = std::move(b);
  return n;
}

NodePtr make_pow(NodePtr a, int e) {
  if (e == 0) return make_const(1.0);
  if (e == 1) return a;
  if (is_const(a)) return make_const(ipow(a->value, e));
  auto n = std::make_shared<Node>();
  n->op = Op::pow;
  n->index = e;
  n->lhs = std::move(a);
  return n;
}

void compile_into(const NodePtr& n, Program& p, std::size_t depth) {
  switch (n->op) {
    case Op::constant:
    case Op::slow_var:
    case Op::fast_var:
      p.code.push_back({n->op, n->index, n->value});
      p.max_depth = std::max(p.max_depth, depth + 1);
      return;
    case Op::add:
    case Op::sub:
    case Op::mul:
    case Op::div:
      compile_into(n->lhs, p, depth);
      compile_into(n->rhs, p, depth + 1);
      p.code.push_back({n->op, 0, 0.0});
      return;
    default:
      compile_into(n->lhs, p, depth);
      p.code.push_back({n->op, n->index, 0.0});
      return;
  }
}

std::shared_ptr<const Program> compile(const NodePtr& root) {
  auto p = std::make_shared<Program>();
  compile_into(root, *p, 0);
  return p;
}

void print_into(const NodePtr& n, std::string& out) {
  char buf[40];
  switch (n->op) {
    case Op::constant:
      std::snprintf(buf, sizeof buf, "%.17g", n->value);
      if (n->value < 0.0) {
        out += "(";
        out += buf;
        out += ")";
      } else {
        out += buf;
      }
      return;
    case Op::slow_var:
      out += "x" + std::to_string(n->index);
      return;
    case Op::fast_var:
      out += "y" + std::to_string(n->index);
      return;
    case Op::add:
    case Op::sub:
    case Op::mul:
    case Op::div: {
      static constexpr std::array<const char*, 4> sym = {" + ", " - ", " * ", " / "};
      out += "(";
      print_into(n->lhs, out);
      out += sym[static_cast<int>(n->op) - static_cast<int>(Op::add)];
      print_into(n->rhs, out);
      out += ")";
      return;
    }
    case Op::neg:
      out += "(-";
      print_into(n->lhs, out);
      out += ")";
      return;
    case Op::pow:
      out += "(";
      print_into(n->lhs, out);
      out += ")^" + std::to_string(n->index);
      return;
    case Op::sin:
    case Op::cos:
    case Op::exp:
    case Op::sqrt: {
      static constexpr std::array<const char*, 4> name = {"sin(", "cos(", "exp(", "sqrt("};
      out += name[static_cast<int>(n->op) - static_cast<int>(Op::sin)];
      print_into(n->lhs, out);
      out += ")";
      return;
    }
  }
}

std::size_t count_nodes(const NodePtr& n) {
  if (!n) return 0;
  return 1 + count_nodes(n->lhs) + count_nodes(n->rhs);
}

// Recursive-descent parser:
//   expr   := term (('+' | '-') term)*
//   term   := unary (('*' | '/') unary)*
//   unary  := '-' unary | power
//   power  := primary ('^' INT)*
//   primary:= NUMBER | VAR | CONST | FUNC '(' expr ')' | '(' expr ')'
class Parser {
 public:
  Parser(std::string_view text, int m, int n) : text_(text), m_(m), n_(n) {}

  NodePtr parse() {
    skip_ws();
    if (pos_ >= text_.size()) throw ParseError(pos_, "empty expression");
    NodePtr e = parse_expr();
    skip_ws();
    if (pos_ != text_.size()) throw ParseError(pos_, std::string("unexpected '") + text_[pos_] + "'");
    return e;
  }

 private:
  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  NodePtr parse_expr() {
    NodePtr lhs = parse_term();
    for (;;) {
      if (accept('+')) {
        lhs = make_binary(Op::add, lhs, parse_term());
      } else if (accept('-')) {
        lhs = make_binary(Op::sub, lhs, parse_term());
      } else {
        return lhs;
      }
    }
  }

  NodePtr parse_term() {
    NodePtr lhs = parse_unary();
    for (;;) {
      if (accept('*')) {
        lhs = make_binary(Op::mul, lhs, parse_unary());
      } else if (accept('/')) {
        lhs = make_binary(Op::div, lhs, parse_unary());
      } else {
        return lhs;
      }
    }
  }

  NodePtr parse_unary() {
    if (accept('-')) return make_unary(Op::neg, parse_unary());
    if (accept('+')) return parse_unary();
    return parse_power();
  }

  NodePtr parse_power() {
    NodePtr base = parse_primary();
    while (accept('^')) {
      skip_ws();
      std::size_t start = pos_;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      if (start == pos_) throw ParseError(start, "exponent must be a nonnegative integer literal");
      int e = 0;
      auto [ptr, ec] = std::from_chars(text_.data() + start, text_.data() + pos_, e);
      if (ec != std::errc()) throw ParseError(start, "exponent out of range");
      base = make_pow(base, e);
    }
    return base;
  }

  NodePtr parse_primary() {
    skip_ws();
    if (pos_ >= text_.size()) throw ParseError(pos_, "unexpected end of input");
    char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      NodePtr e = parse_expr();
      if (!accept(')')) throw ParseError(pos_, "expected ')'");
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c))) return parse_identifier();
    throw ParseError(pos_, std::string("unexpected '") + c + "'");
  }

  NodePtr parse_number() {
    std::size_t start = pos_;
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(text_.data() + pos_, text_.data() + text_.size(), v);
    if (ec != std::errc()) throw ParseError(start, "malformed number");
    pos_ = static_cast<std::size_t>(ptr - text_.data());
    return make_const(v);
  }

  NodePtr parse_identifier() {
    std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
      ++pos_;
    std::string_view id = text_.substr(start, pos_ - start);

    if (id == "pi") return make_const(std::numbers::pi);
    if (id == "sqrt3") return make_const(std::numbers::sqrt3);

    static const std::unordered_map<std::string_view, Op> functions = {
        {"sin", Op::sin}, {"cos", Op::cos}, {"exp", Op::exp}, {"sqrt", Op::sqrt}};
    if (auto it = functions.find(id); it != functions.end()) {
      if (!accept('(')) throw ParseError(pos_, "expected '(' after " + std::string(id));
      NodePtr arg = parse_expr();
      if (!accept(')')) throw ParseError(pos_, "expected ')'");
      return make_unary(it->second, arg);
    }

    if ((id[0] == 'x' || id[0] == 'y') && id.size() > 1 &&
        std::all_of(id.begin() + 1, id.end(), [](char ch) { return std::isdigit(static_cast<unsigned char>(ch)); })) {
      int idx = 0;
      auto [ptr, ec] = std::from_chars(id.data() + 1, id.data() + id.size(), idx);
      if (ec != std::errc()) throw ParseError(start, "variable index out of range");
      bool slow = id[0] == 'x';
      int limit = slow ? m_ : n_;
      if (idx >= limit)
        throw ParseError(start, "variable " + std::string(id) + " out of range (" + (slow ? "m" : "n") +
                                    " = " + std::to_string(limit) + ")");
      return make_var(slow ? Var::slow(idx) : Var::fast(idx));
    }
    throw ParseError(start, "unknown identifier '" + std::string(id) + "'");
  }

  std::string_view text_;
  int m_;
  int n_;
  std::size_t pos_ = 0;
};

NodePtr diff(const NodePtr& n, Var v) {
  switch (n->op) {
    case Op::constant:
      return make_const(0.0);
    case Op::slow_var:
      return make_const(v.kind == VarKind::slow && v.index == n->index ? 1.0 : 0.0);
    case Op::fast_var:
      return make_const(v.kind == VarKind::fast && v.index == n->index ? 1.0 : 0.0);
    case Op::add:
      return make_binary(Op::add, diff(n->lhs, v), diff(n->rhs, v));
    case Op::sub:
      return make_binary(Op::sub, diff(n->lhs, v), diff(n->rhs, v));
    case Op::mul:
      return make_binary(Op::add, make_binary(Op::mul, diff(n->lhs, v), n->rhs),
                         make_binary(Op::mul, n->lhs, diff(n->rhs, v)));
    case Op::div: {
      NodePtr da = diff(n->lhs, v);
      if (is_const(n->rhs)) return make_binary(Op::div, da, n->rhs);
      NodePtr db = diff(n->rhs, v);
      NodePtr num = make_binary(Op::sub, make_binary(Op::mul, da, n->rhs), make_binary(Op::mul, n->lhs, db));
      return make_binary(Op::div, num, make_pow(n->rhs, 2));
    }
    case Op::neg:
      return make_unary(Op::neg, diff(n->lhs, v));
    case Op::pow: {
      NodePtr da = diff(n->lhs, v);
      NodePtr outer = make_binary(Op::mul, make_const(static_cast<double>(n->index)), make_pow(n->lhs, n->index - 1));
      return make_binary(Op::mul, outer, da);
    }
    case Op::sin:
      return make_binary(Op::mul, make_unary(Op::cos, n->lhs), diff(n->lhs, v));
    case Op::cos:
      return make_binary(Op::mul, make_unary(Op::neg, make_unary(Op::sin, n->lhs)), diff(n->lhs, v));
    case Op::exp:
      return make_binary(Op::mul, n, diff(n->lhs, v));
    case Op::sqrt:
      return make_binary(Op::div, diff(n->lhs, v), make_binary(Op::mul, make_const(2.0), n));
  }
  return make_const(0.0);
}

NodePtr substitute(const NodePtr& n, int j, const NodePtr& r) {
  switch (n->op) {
    case Op::constant:
    case Op::slow_var:
      return n;
    case Op::fast_var:
      return n->index == j ? r : n;
    case Op::add:
    case Op::sub:
    case Op::mul:
    case Op::div:
      return make_binary(n->op, substitute(n->lhs, j, r), substitute(n->rhs, j, r));
    case Op::pow:
      return make_pow(substitute(n->lhs, j, r), n->index);
    default:
      return make_unary(n->op, substitute(n->lhs, j, r));
  }
}

}  // namespace

Expression::Expression(int m, int n) : root_(make_const(0.0)), m_(m), n_(n), program_(compile(root_)) {}

Expression Expression::constant(double value, int m, int n) { return from_node(make_const(value), m, n); }

Expression Expression::variable(Var v, int m, int n) {
  int limit = v.kind == VarKind::slow ? m : n;
  if (v.index < 0 || v.index >= limit) throw UsageError("variable index out of range");
  return from_node(make_var(v), m, n);
}

Expression Expression::from_node(NodePtr root, int m, int n) {
  Expression e(m, n);
  e.root_ = std::move(root);
  e.program_ = compile(e.root_);
  return e;
}

bool Expression::is_constant() const noexcept { return root_->op == Op::constant; }
double Expression::constant_value() const noexcept { return root_->value; }

double Expression::evaluate(std::span<const double> x, std::span<const double> y) const {
  const Program& p = *program_;
  std::array<double, 64> small{};
  std::vector<double> big;
  double* stack = small.data();
  if (p.max_depth > small.size()) {
    big.resize(p.max_depth);
    stack = big.data();
  }
  std::size_t sp = 0;
  for (const Instr& in : p.code) {
    switch (in.op) {
      case Op::constant:
        stack[sp++] = in.value;
        break;
      case Op::slow_var:
        stack[sp++] = x[static_cast<std::size_t>(in.index)];
        break;
      case Op::fast_var:
        stack[sp++] = y[static_cast<std::size_t>(in.index)];
        break;
      case Op::add:
        --sp;
        stack[sp - 1] += stack[sp];
        break;
      case Op::sub:
        --sp;
        stack[sp - 1] -= stack[sp];
        break;
      case Op::mul:
        --sp;
        stack[sp - 1] *= stack[sp];
        break;
      case Op::div:
        --sp;
        if (stack[sp] == 0.0) throw DomainError("division by zero");
        stack[sp - 1] /= stack[sp];
        break;
      case Op::pow:
        stack[sp - 1] = ipow(stack[sp - 1], in.index);
        break;
      default:
        stack[sp - 1] = apply_unary(in.op, stack[sp - 1]);
        break;
    }
  }
  return stack[0];
}

std::string Expression::str() const {
  std::string out;
  print_into(root_, out);
  return out;
}

std::size_t Expression::size() const { return count_nodes(root_); }

Expression parse(std::string_view text, int m, int n) {
  Parser p(text, m, n);
  return Expression::from_node(p.parse(), m, n);
}

namespace {
Expression binary(Op op, const Expression& a, const Expression& b) {
  return Expression::from_node(make_binary(op, a.root(), b.root()), std::max(a.slow_dim(), b.slow_dim()),
                               std::max(a.fast_dim(), b.fast_dim()));
}
Expression unary(Op op, const Expression& a) {
  return Expression::from_node(make_unary(op, a.root()), a.slow_dim(), a.fast_dim());
}
}  // namespace

Expression operator+(const Expression& a, const Expression& b) { return binary(Op::add, a, b); }
Expression operator-(const Expression& a, const Expression& b) { return binary(Op::sub, a, b); }
Expression operator*(const Expression& a, const Expression& b) { return binary(Op::mul, a, b); }
Expression operator/(const Expression& a, const Expression& b) { return binary(Op::div, a, b); }
Expression operator-(const Expression& a) { return unary(Op::neg, a); }
Expression operator*(double c, const Expression& a) {
  return Expression::constant(c, a.slow_dim(), a.fast_dim()) * a;
}
Expression pow(const Expression& a, int exponent) {
  if (exponent < 0) throw UsageError("negative exponent");
  return Expression::from_node(make_pow(a.root(), exponent), a.slow_dim(), a.fast_dim());
}
Expression sin(const Expression& a) { return unary(Op::sin, a); }
Expression cos(const Expression& a) { return unary(Op::cos, a); }
Expression exp(const Expression& a) { return unary(Op::exp, a); }
Expression sqrt(const Expression& a) { return unary(Op::sqrt, a); }

Expression differentiate(const Expression& e, Var v) {
  return Expression::from_node(diff(e.root(), v), e.slow_dim(), e.fast_dim());
}

std::vector<Expression> gradient_fast(const Expression& e) {
  std::vector<Expression> g;
  g.reserve(static_cast<std::size_t>(e.fast_dim()));
  for (int j = 0; j < e.fast_dim(); ++j) g.push_back(differentiate(e, Var::fast(j)));
  return g;
}

Expression laplacian_fast(const Expression& e) {
  Expression sum(e.slow_dim(), e.fast_dim());
  for (int j = 0; j < e.fast_dim(); ++j)
    sum = sum + differentiate(differentiate(e, Var::fast(j)), Var::fast(j));
  return sum;
}

Expression apply_generator(const Expression& V, const Expression& g) {
  if (V.fast_dim() != g.fast_dim()) throw UsageError("apply_generator: fast dimensions differ");
  Expression result = laplacian_fast(g);
  for (int j = 0; j < g.fast_dim(); ++j)
    result = result - differentiate(V, Var::fast(j)) * differentiate(g, Var::fast(j));
  return result;
}

Expression substitute_fast(const Expression& e, int j, const Expression& replacement) {
  return Expression::from_node(substitute(e.root(), j, replacement.root()),
                               std::max(e.slow_dim(), replacement.slow_dim()),
                               std::max(e.fast_dim(), replacement.fast_dim()));
}

}  // namespace homog::expr
