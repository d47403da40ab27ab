#include "latweyl/expr.hpp"

#include <cctype>
#include <cmath>
#include <mutex>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace latweyl {

struct Expr::Node {
  Op op;
  double value = 0.0;  // Const
  int var = -1;        // Var
  Expr a{nullptr};
  Expr b{nullptr};
};

Expr Expr::constant(double v) {
  auto n = std::make_shared<Node>();
  n->op = Op::Const;
  n->value = v;
  return Expr(n);
}

Expr Expr::variable(int index) {
  auto n = std::make_shared<Node>();
  n->op = Op::Var;
  n->var = index;
  return Expr(n);
}

// Constructors fold trivial constants so repeated differentiation stays small.
Expr Expr::make(Op op, Expr a, Expr b) {
  const bool ca = a.n_->op == Op::Const, cb = b.n_->op == Op::Const;
  if (ca && cb) {
    const double x = a.n_->value, y = b.n_->value;
    switch (op) {
      case Op::Add: return constant(x + y);
      case Op::Sub: return constant(x - y);
      case Op::Mul: return constant(x * y);
      case Op::Div: return constant(x / y);
      case Op::Pow: return constant(std::pow(x, y));
      default: break;
    }
  }
  switch (op) {
    case Op::Add:
      if (a.is_zero()) return b;
      if (b.is_zero()) return a;
      break;
    case Op::Sub:
      if (b.is_zero()) return a;
      if (a.is_zero()) return make1(Op::Neg, b);
      break;
    case Op::Mul:
      if (a.is_zero() || b.is_zero()) return constant(0.0);
      if (a.is_constant(1.0)) return b;
      if (b.is_constant(1.0)) return a;
      break;
    case Op::Div:
      if (a.is_zero()) return constant(0.0);
      if (b.is_constant(1.0)) return a;
      break;
    case Op::Pow:
      if (b.is_zero()) return constant(1.0);
      if (b.is_constant(1.0)) return a;
      break;
    default: break;
  }
  auto n = std::make_shared<Node>();
  n->op = op;
  n->a = std::move(a);
  n->b = std::move(b);
  return Expr(n);
}

Expr Expr::make1(Op op, Expr a) {
  if (a.n_->op == Op::Const) {
    const double x = a.n_->value;
    switch (op) {
      case Op::Neg: return constant(-x);
      case Op::Sin: return constant(std::sin(x));
      case Op::Cos: return constant(std::cos(x));
      case Op::Exp: return constant(std::exp(x));
      case Op::Log: return constant(std::log(x));
      case Op::Sqrt: return constant(std::sqrt(x));
      default: break;
    }
  }
  if (op == Op::Neg && a.n_->op == Op::Neg) return a.n_->a;
  auto n = std::make_shared<Node>();
  n->op = op;
  n->a = std::move(a);
  return Expr(n);
}

bool Expr::is_zero() const { return is_constant(0.0); }

bool Expr::is_constant(double v) const { return n_->op == Op::Const && n_->value == v; }

bool Expr::depends_on(int var) const {
  switch (n_->op) {
    case Op::Const: return false;
    case Op::Var: return n_->var == var;
    case Op::Add: case Op::Sub: case Op::Mul: case Op::Div: case Op::Pow:
      return n_->a.depends_on(var) || n_->b.depends_on(var);
    default: return n_->a.depends_on(var);
  }
}

double Expr::eval(std::span<const double> v) const {
  const Node& n = *n_;
  switch (n.op) {
    case Op::Const: return n.value;
    case Op::Var: return v[n.var];
    case Op::Add: return n.a.eval(v) + n.b.eval(v);
    case Op::Sub: return n.a.eval(v) - n.b.eval(v);
    case Op::Mul: return n.a.eval(v) * n.b.eval(v);
    case Op::Div: return n.a.eval(v) / n.b.eval(v);
    case Op::Pow: {
      const Node& e = *n.b.n_;
      if (e.op == Op::Const && e.value == std::round(e.value) && std::abs(e.value) < 64) {
        const double base = n.a.eval(v);
        int p = static_cast<int>(e.value);
        double r = 1.0, bb = base;
        for (int q = std::abs(p); q; q >>= 1, bb *= bb)
          if (q & 1) r *= bb;
        return p < 0 ? 1.0 / r : r;
      }
      return std::pow(n.a.eval(v), n.b.eval(v));
    }
    case Op::Neg: return -n.a.eval(v);
    case Op::Sin: return std::sin(n.a.eval(v));
    case Op::Cos: return std::cos(n.a.eval(v));
    case Op::Exp: return std::exp(n.a.eval(v));
    case Op::Log: return std::log(n.a.eval(v));
    case Op::Sqrt: return std::sqrt(n.a.eval(v));
  }
  return 0.0;
}

Expr Expr::derivative(int var) const {
  const Node& n = *n_;
  if (!depends_on(var)) return constant(0.0);
  switch (n.op) {
    case Op::Const: return constant(0.0);
    case Op::Var: return constant(1.0);
    case Op::Add: return make(Op::Add, n.a.derivative(var), n.b.derivative(var));
    case Op::Sub: return make(Op::Sub, n.a.derivative(var), n.b.derivative(var));
    case Op::Mul:
      return make(Op::Add, make(Op::Mul, n.a.derivative(var), n.b),
                  make(Op::Mul, n.a, n.b.derivative(var)));
    case Op::Div: {
      // (a'b - ab') / b^2
      Expr num = make(Op::Sub, make(Op::Mul, n.a.derivative(var), n.b),
                      make(Op::Mul, n.a, n.b.derivative(var)));
      return make(Op::Div, num, make(Op::Pow, n.b, constant(2.0)));
    }
    case Op::Pow: {
      if (!n.b.depends_on(var)) {
        // d(a^c) = c a^(c-1) a'
        Expr c = n.b;
        Expr lower = make(Op::Pow, n.a, make(Op::Sub, c, constant(1.0)));
        return make(Op::Mul, make(Op::Mul, c, lower), n.a.derivative(var));
      }
      // a^b = exp(b log a)
      Expr inner = make(Op::Mul, n.b, make1(Op::Log, n.a));
      return make(Op::Mul, *this, inner.derivative(var));
    }
    case Op::Neg: return make1(Op::Neg, n.a.derivative(var));
    case Op::Sin: return make(Op::Mul, make1(Op::Cos, n.a), n.a.derivative(var));
    case Op::Cos:
      return make1(Op::Neg, make(Op::Mul, make1(Op::Sin, n.a), n.a.derivative(var)));
    case Op::Exp: return make(Op::Mul, *this, n.a.derivative(var));
    case Op::Log: return make(Op::Div, n.a.derivative(var), n.a);
    case Op::Sqrt:
      return make(Op::Div, n.a.derivative(var), make(Op::Mul, constant(2.0), *this));
  }
  return constant(0.0);
}

std::string Expr::str() const {
  const Node& n = *n_;
  std::ostringstream os;
  os.precision(17);
  auto bin = [&](const char* s) {
    os << '(' << n.a.str() << s << n.b.str() << ')';
  };
  auto fn = [&](const char* s) { os << s << '(' << n.a.str() << ')'; };
  switch (n.op) {
    case Op::Const: os << n.value; break;
    case Op::Var: os << "v" << n.var; break;
    case Op::Add: bin("+"); break;
    case Op::Sub: bin("-"); break;
    case Op::Mul: bin("*"); break;
    case Op::Div: bin("/"); break;
    case Op::Pow: bin("^"); break;
    case Op::Neg: fn("-"); break;
    case Op::Sin: fn("sin"); break;
    case Op::Cos: fn("cos"); break;
    case Op::Exp: fn("exp"); break;
    case Op::Log: fn("log"); break;
    case Op::Sqrt: fn("sqrt"); break;
  }
  return os.str();
}

class ExprParser {
 public:
  ExprParser(const std::string& s, const std::vector<std::string>& vars) : s_(s), vars_(vars) {}

  Expr parse() {
    Expr e = sum();
    skip();
    if (pos_ != s_.size()) fail("unexpected character");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw std::invalid_argument("expression '" + s_ + "': " + what + " at offset " +
                                std::to_string(pos_));
  }
  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool eat(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  Expr sum() {
    Expr e = product();
    for (;;) {
      if (eat('+')) e = Expr::make(Expr::Op::Add, e, product());
      else if (eat('-')) e = Expr::make(Expr::Op::Sub, e, product());
      else return e;
    }
  }
  Expr product() {
    Expr e = unary();
    for (;;) {
      if (eat('*')) e = Expr::make(Expr::Op::Mul, e, unary());
      else if (eat('/')) e = Expr::make(Expr::Op::Div, e, unary());
      else return e;
    }
  }
  Expr unary() {
    if (eat('-')) return Expr::make1(Expr::Op::Neg, unary());
    if (eat('+')) return unary();
    return power();
  }
  Expr power() {
    Expr base = atom();
    if (eat('^')) return Expr::make(Expr::Op::Pow, base, unary());
    return base;
  }
  Expr atom() {
    skip();
    if (pos_ >= s_.size()) fail("unexpected end");
    if (eat('(')) {
      Expr e = sum();
      if (!eat(')')) fail("missing ')'");
      return e;
    }
    const char c = s_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      std::size_t used = 0;
      double v = std::stod(s_.substr(pos_), &used);
      pos_ += used;
      return Expr::constant(v);
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t start = pos_;
      while (pos_ < s_.size() &&
             (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_'))
        ++pos_;
      const std::string id = s_.substr(start, pos_ - start);
      static const std::map<std::string, Expr::Op> fns = {
          {"sin", Expr::Op::Sin}, {"cos", Expr::Op::Cos},   {"exp", Expr::Op::Exp},
          {"log", Expr::Op::Log}, {"sqrt", Expr::Op::Sqrt}};
      if (auto it = fns.find(id); it != fns.end()) {
        if (!eat('(')) fail("expected '(' after " + id);
        Expr arg = sum();
        if (!eat(')')) fail("missing ')'");
        return Expr::make1(it->second, arg);
      }
      if (id == "pi") return Expr::constant(std::numbers::pi);
      for (std::size_t i = 0; i < vars_.size(); ++i)
        if (vars_[i] == id) return Expr::variable(static_cast<int>(i));
      fail("unknown identifier '" + id + "'");
    }
    fail("unexpected character");
  }

  const std::string& s_;
  const std::vector<std::string>& vars_;
  std::size_t pos_ = 0;
};

Expr Expr::parse(const std::string& text, const std::vector<std::string>& var_names) {
  return ExprParser(text, var_names).parse();
}

struct DiffExpr::Cache {
  std::mutex mu;
  std::map<std::vector<int>, Expr> partials;
};

DiffExpr::DiffExpr(Expr e, int nvars)
    : base_(std::move(e)), nvars_(nvars), cache_(std::make_shared<Cache>()) {}

double DiffExpr::eval(std::span<const double> vars) const { return base_.eval(vars); }

const Expr& DiffExpr::partial(const std::vector<int>& counts) const {
  std::lock_guard<std::mutex> lock(cache_->mu);
  if (auto it = cache_->partials.find(counts); it != cache_->partials.end()) return it->second;
  Expr e = base_;
  for (int v = 0; v < nvars_; ++v)
    for (int k = 0; k < counts[v]; ++k) e = e.derivative(v);
  return cache_->partials.emplace(counts, e).first->second;
}

double DiffExpr::eval_derivative(std::span<const double> vars,
                                 std::span<const int> counts) const {
  bool any = false;
  for (int c : counts) any |= c > 0;
  if (!any) return base_.eval(vars);
  return partial(std::vector<int>(counts.begin(), counts.end())).eval(vars);
}

}  // namespace latweyl
