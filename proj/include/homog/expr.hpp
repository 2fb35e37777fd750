#pragma once

// Scalar expressions in slow variables x0..x(m-1) and fast variables
// y0..y(n-1): parsing, printing, symbolic differentiation and evaluation.
//
// Expressions are immutable. Each one carries a compiled postfix program so
// that repeated evaluation (quadrature nodes, time steps) does not walk the
// tree.

#include <Eigen/Core>

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace homog::expr {

enum class Op : std::uint8_t {
  constant,
  slow_var,
  fast_var,
  add,
  sub,
  mul,
  div,
  neg,
  pow,
  sin,
  cos,
  exp,
  sqrt,
};

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Node {
  Op op = Op::constant;
  double value = 0.0;  // constant value
  int index = 0;       // variable index, or exponent for Op::pow
  NodePtr lhs;
  NodePtr rhs;
};

enum class VarKind : std::uint8_t { slow, fast };

struct Var {
  VarKind kind;
  int index;

  static constexpr Var slow(int i) { return {VarKind::slow, i}; }
  static constexpr Var fast(int j) { return {VarKind::fast, j}; }
  friend constexpr bool operator==(Var, Var) = default;
};

struct Program;

class Expression {
 public:
  /// The constant 0 over (m, n) variables.
  Expression(int m = 0, int n = 0);

  static Expression constant(double value, int m, int n);
  static Expression variable(Var v, int m, int n);
  static Expression from_node(NodePtr root, int m, int n);

  int slow_dim() const noexcept { return m_; }
  int fast_dim() const noexcept { return n_; }
  const NodePtr& root() const noexcept { return root_; }

  bool is_constant() const noexcept;
  /// Value of a constant expression; only meaningful when is_constant().
  double constant_value() const noexcept;

  /// Evaluates at (x, y). Throws DomainError on division by zero or sqrt of
  /// a negative argument.
  double evaluate(std::span<const double> x, std::span<const double> y) const;
  double operator()(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const {
    return evaluate({x.data(), static_cast<std::size_t>(x.size())},
                    {y.data(), static_cast<std::size_t>(y.size())});
  }

  /// Fully parenthesised infix; constants printed with 17 significant digits
  /// so that parse(str()) evaluates identically.
  std::string str() const;

  /// Number of tree nodes (shared subtrees counted once per use).
  std::size_t size() const;

 private:
  NodePtr root_;
  int m_ = 0;
  int n_ = 0;
  std::shared_ptr<const Program> program_;
};

Expression parse(std::string_view text, int m, int n);

Expression operator+(const Expression& a, const Expression& b);
Expression operator-(const Expression& a, const Expression& b);
Expression operator*(const Expression& a, const Expression& b);
Expression operator/(const Expression& a, const Expression& b);
Expression operator-(const Expression& a);
Expression operator*(double c, const Expression& a);
Expression pow(const Expression& a, int exponent);
Expression sin(const Expression& a);
Expression cos(const Expression& a);
Expression exp(const Expression& a);
Expression sqrt(const Expression& a);

/// Exact symbolic derivative with constant folding only.
Expression differentiate(const Expression& e, Var v);

std::vector<Expression> gradient_fast(const Expression& e);
Expression laplacian_fast(const Expression& e);

/// Delta_y g - grad_y V . grad_y g, the generator of dY = -grad V dt + sqrt(2) dW.
Expression apply_generator(const Expression& V, const Expression& g);

/// Replaces fast variable y_j by `replacement` (which must share dimensions).
Expression substitute_fast(const Expression& e, int j, const Expression& replacement);

}  // namespace homog::expr
