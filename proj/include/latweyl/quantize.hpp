// Discrete t-quantization on a lattice box and the symbol calculus built on it.
#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "latweyl/core.hpp"

namespace latweyl {

struct OperatorMatrix {
  LatticeBox lattice;
  double eps;
  double t;
  Eigen::MatrixXcd entries;
  double hermitian_defect;  // max |A - A*| entry
  std::string symbol_name;
  std::size_t alias_warnings = 0;

  double max_abs_entry() const;
};

// (2 pi)^-d sum over the torus grid of e^{i (y-x) xi / eps} a(t x + (1-t) y, xi; eps).
// Entries with |(y-x)/eps|_inf >= M/2 are aliased: returned as 0 and flagged.
cplx kernel_entry(const Symbol& sym, double t, Pt x, Pt y, double eps, const TorusGrid& grid,
                  bool* aliased = nullptr);

OperatorMatrix build_operator(const Symbol& sym, double t, const LatticeBox& lattice, double eps,
                              const TorusGrid& grid);

double hermitian_defect(const Eigen::MatrixXcd& A);
double spectral_norm(const Eigen::MatrixXcd& A);

// All multi-indices alpha in N^d with |alpha| = order.
std::vector<std::vector<int>> multi_indices(int dim, int order);

// Symbol a_t with Op_t(a_t) = Op_s(a_s) + O(eps^order); keeps terms 0..order-1.
Symbol change_quantization(const Symbol& sym, double s, double t, int order);

struct SharpProductResult {
  Symbol terms;
  int order;
};
// a #_t b truncated to terms 0..order-1 (error O(eps^order)).
SharpProductResult sharp_product(const Symbol& a, const Symbol& b, double t, int order);

struct CompositionReport {
  std::vector<double> eps;
  std::vector<double> errors;
  double fitted_order;
};
// Spectral-norm error of Op(a)Op(b) - Op(a #_t b truncated) over an eps sweep on [-L,L]^d.
CompositionReport verify_composition(const Symbol& a, const Symbol& b, double t, int order,
                                     double L, const std::vector<double>& eps_list,
                                     const TorusGrid& grid);

// grad_x phi(t, x, eta), returned in `out`.
using GradPhi = std::function<void(double t, Pt x, Pt eta, double* out)>;

struct GradPhiPeriodicity {
  double max_violation;
  bool pass;
};
// Samples |(grad phi(t,x,eta+2 pi e_k) - (eta+2 pi e_k)) - (grad phi(t,x,eta) - eta)|.
GradPhiPeriodicity check_gradphi_periodicity(const GradPhi& gradphi, int dim, double t_val,
                                             double x_halfwidth, int samples, double tol,
                                             std::uint64_t seed = 777);

// q_0(x, xi + grad_x phi(t_val, x, eta)); throws HypothesisError if the gradient periodicity fails.
Symbol conjugated_symbol_leading(const Symbol& q, const GradPhi& gradphi, double t_val, Pt eta,
                                 double x_halfwidth = 4.0);

}  // namespace latweyl
