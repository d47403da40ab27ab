// Small arithmetic expression language used by config-defined symbol terms.
// Grammar: numbers, pi, variables, + - * / ^, unary minus, sin cos exp log sqrt.
// Derivatives are formed by structural differentiation of the parsed tree.
#pragma once

#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace latweyl {

class Expr {
 public:
  enum class Op { Const, Var, Add, Sub, Mul, Div, Pow, Neg, Sin, Cos, Exp, Log, Sqrt };

  // Variables are referenced by position in `var_names`.
  static Expr parse(const std::string& text, const std::vector<std::string>& var_names);
  static Expr constant(double v);
  static Expr variable(int index);

  double eval(std::span<const double> vars) const;
  Expr derivative(int var) const;
  bool is_zero() const;
  bool is_constant(double v) const;
  bool depends_on(int var) const;
  std::string str() const;

 private:
  struct Node;
  explicit Expr(std::shared_ptr<const Node> n) : n_(std::move(n)) {}
  static Expr make(Op op, Expr a, Expr b);
  static Expr make1(Op op, Expr a);
  std::shared_ptr<const Node> n_;
  friend class ExprParser;
};

// Expression plus lazily built mixed partial derivatives, keyed by multi-index.
class DiffExpr {
 public:
  DiffExpr(Expr e, int nvars);
  double eval(std::span<const double> vars) const;
  // counts[v] = number of derivatives in variable v.
  double eval_derivative(std::span<const double> vars, std::span<const int> counts) const;
  const Expr& expr() const { return base_; }

 private:
  struct Cache;
  const Expr& partial(const std::vector<int>& counts) const;
  Expr base_;
  int nvars_;
  std::shared_ptr<Cache> cache_;
};

}  // namespace latweyl
