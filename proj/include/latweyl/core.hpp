// Lattices, torus grids, order functions, symbols and the sampled hypothesis checks.
#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace latweyl {

using cplx = std::complex<double>;
using Pt = std::span<const double>;
using Idx = std::span<const int>;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Error classes map onto CLI exit codes (config 2, hypothesis 3, numerical 4).
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct HypothesisError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Box {x in eps Z^d : |x|_inf <= L}; points are eps * (i - half) per axis.
class LatticeBox {
 public:
  LatticeBox(int dim, double eps, double halfwidth);

  int dim() const { return dim_; }
  double eps() const { return eps_; }
  double halfwidth() const { return L_; }
  int per_axis() const { return n_; }
  int half() const { return half_; }
  std::size_t size() const { return size_; }

  double coord(int axis_index) const { return eps_ * (axis_index - half_); }
  void index(std::size_t flat, int* idx) const;
  std::size_t flat(const int* idx) const;
  void point(std::size_t flat, double* x) const;
  std::vector<double> point(std::size_t flat) const;
  // Inverse of point(); throws if x is not a box point.
  std::size_t index_of(Pt x) const;

 private:
  int dim_;
  double eps_, L_;
  int n_, half_;
  std::size_t size_;
};

// Nodes xi_k = -pi + 2 pi k / M per axis, uniform weights (2 pi / M)^d.
class TorusGrid {
 public:
  TorusGrid(int dim, int M);
  int dim() const { return dim_; }
  int nodes_per_axis() const { return M_; }
  std::size_t size() const { return size_; }
  double node(int k) const { return -kPi + kTwoPi * k / M_; }
  double weight() const;
  void point(std::size_t flat, double* xi) const;

 private:
  int dim_, M_;
  std::size_t size_;
};

struct OrderFunction {
  std::function<double(Pt, Pt)> eval;
  double C = 1.0;
  int M = 0;
  std::string description = "1";

  double operator()(Pt x, Pt xi) const { return eval(x, xi); }
  static OrderFunction constant_one();
  // m = (1 + |x|^2)^k; Peetre's inequality gives C = 2^k, M = 2k.
  static OrderFunction japanese_power(int k);
};

struct TemperingReport {
  double max_ratio;
  bool pass;
};
// Max over random pairs of m(x,xi) / (C <x-y>^M m(y,mu)).
TemperingReport check_tempering(const OrderFunction& m, int dim, int samples, double x_halfwidth,
                                std::uint64_t seed);

struct SymbolTerm {
  std::function<cplx(Pt, Pt)> value;
  // Partial derivative with multi-indices (ax, axi); may be empty.
  std::function<cplx(Pt, Pt, Idx, Idx)> deriv;
  // Highest total derivative order that `deriv` answers; beyond it finite differences take over.
  int deriv_order = 0;
};

// a(x,xi;eps) = sum_j eps^j a_j(x,xi), a finite expansion treated as exact.
class Symbol {
 public:
  Symbol(std::string name, int dim, std::vector<SymbolTerm> terms, OrderFunction m,
         bool is_real);

  const std::string& name() const { return name_; }
  int dim() const { return dim_; }
  int num_terms() const { return static_cast<int>(terms_->size()); }
  bool is_real() const { return is_real_; }
  bool period_tested() const { return period_tested_; }
  const OrderFunction& order_function() const { return order_; }
  const SymbolTerm& term_def(int j) const { return (*terms_)[j]; }

  // Reduces xi into [-pi, pi)^d, then sums eps^j a_j.
  cplx eval(Pt x, Pt xi, double eps) const;
  // Raw term evaluation without xi reduction.
  cplx term(int j, Pt x, Pt xi) const;
  cplx derivative(int j, Pt x, Pt xi, Idx ax, Idx axi) const;
  // Smallest analytic derivative order over all terms (INT_MAX when FD never needed).
  int analytic_order() const;

  Symbol with_name(std::string name) const;
  Symbol with_period_tested(bool tested) const;
  Symbol leading() const;  // a_0 only
  Symbol truncated(int num_terms) const;

 private:
  std::string name_;
  int dim_;
  std::shared_ptr<const std::vector<SymbolTerm>> terms_;
  OrderFunction order_;
  bool is_real_;
  bool period_tested_ = false;
};

double reduce_angle(double xi);

// alpha * a + beta * b, term by term.
Symbol linear_combination(const Symbol& a, cplx alpha, const Symbol& b, cplx beta);

class Interval {
 public:
  Interval(double alpha, double beta);
  double alpha() const { return alpha_; }
  double beta() const { return beta_; }
  bool contains(double v) const { return alpha_ <= v && v <= beta_; }
  double length() const { return beta_ - alpha_; }

 private:
  double alpha_, beta_;
};

// Regular sampling grid for the hypothesis proxies.
struct SamplingSpec {
  double x_halfwidth = 4.0;
  int x_nodes = 0;   // 0 selects a dimension-dependent default
  int xi_nodes = 0;
  int random_samples = 2000;
  std::uint64_t seed = 12345;
  int x_nodes_for(int dim) const { return x_nodes > 0 ? x_nodes : (dim == 1 ? 201 : 41); }
  int xi_nodes_for(int dim) const { return xi_nodes > 0 ? xi_nodes : (dim == 1 ? 128 : 24); }
};

struct PeriodicityReport {
  double max_violation;
  bool pass;
};
PeriodicityReport check_periodicity(const Symbol& sym, int sample_count, double tol,
                                    double x_halfwidth = 4.0, std::uint64_t seed = 12345);

struct EllipticReport {
  double inf_ratio;
};
EllipticReport check_elliptic_shifted(const Symbol& sym, const SamplingSpec& grid,
                                      const std::vector<double>& eps_list);

struct EssBoundReport {
  double inf_outside;
  bool pass;
};
// Samples R <= |x| <= R_out with R_out = max(2R, R + 4).
EssBoundReport check_ess_bound(const Symbol& sym, const Interval& J, double R,
                               const SamplingSpec& grid);

struct RealnessReport {
  double max_imag;
  bool pass;
};
RealnessReport check_realness(const Symbol& sym, const SamplingSpec& grid, double tol = 1e-12);

// Registry of test Hamiltonians. Parameter values are numbers or expression strings.
using ParamValue = std::variant<double, std::string>;
using ParamMap = std::map<std::string, ParamValue>;

Symbol builtin_symbol(const std::string& name, const ParamMap& params);
std::vector<std::string> builtin_symbol_names();

// Symbol from expression strings; variables x, xi (d = 1) or x1..xd, xi1..xid.
Symbol expression_symbol(const std::string& name, int dim, const std::vector<std::string>& terms,
                         OrderFunction m, bool is_real);

// Calls fn(x, xi) for every node of the product grid [-R,R]^d x torus.
void for_each_phase_point(int dim, double R, int x_nodes, int xi_nodes,
                          const std::function<void(Pt, Pt)>& fn);

}  // namespace latweyl
