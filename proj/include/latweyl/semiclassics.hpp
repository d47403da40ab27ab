// Smooth cutoffs, almost analytic extensions, the Helffer-Sjostrand integral, Poisson summation
// remainders, stationary phase and eps-scaled Fourier transforms.
#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "latweyl/core.hpp"
#include "latweyl/expr.hpp"
#include "latweyl/jet.hpp"
#include "latweyl/scalar.hpp"

namespace latweyl {

// Smooth bump on [center - halfwidth, center + halfwidth]. With plateau p in (0,1) it is 1 for
// |x - c| <= p h and uses the exp(-1/s) smooth step in between; with p = 0 it is
// exp(1 - 1/(1 - u^2)), u = (x - c)/h, peaking at 1.
class BumpFunction {
 public:
  BumpFunction(double center, double halfwidth, double plateau = 0.0);

  double center() const { return c_; }
  double halfwidth() const { return h_; }
  double plateau() const { return p_; }

  double operator()(double x) const;
  double derivative(int k, double x) const;
  JetD jet(const JetD& x) const;
  ScalarFunction as_function() const;

 private:
  double c_, h_, p_;
};

// exp(-1/s) smooth step from 0 (s <= 0) to 1 (s >= 1), on jets.
JetD smooth_step(const JetD& s);

class SmoothingKernel {
 public:
  // psi = (g * g~)/(g * g~)(0) with g the plain bump on [-T/2, T/2]; supp psi = [-T, T].
  explicit SmoothingKernel(double support_halfwidth = 1.0);

  double support_halfwidth() const { return T_; }
  double operator()(double t) const;
  // F_1 psi(lambda) = |G(lambda)|^2 / (sqrt(2 pi) ||g||^2) with G the transform of g.
  double fourier_unit(double lambda) const;
  // Direct quadrature of (1/sqrt(2 pi)) int e^{-i t lambda} psi(t) dt with psi itself
  // evaluated by quadrature; slow, used to cross-check fourier_unit.
  cplx fourier_unit_direct(double lambda) const;
  bool nonneg_transform() const { return true; }

 private:
  double T_;
  BumpFunction g_;
  double norm_;  // int g^2
};

// (F_eps psi)(lambda) = (1/sqrt(2 pi)) int e^{-i t lambda/eps} psi(t) dt.
cplx scaled_fourier(const SmoothingKernel& psi, double lambda, double eps);

struct AaeGrid {
  double x_lo, x_hi, y_lo, y_hi;
  double step = 0.01;
};

// f~(x+iy) = chi(y/sigma) sum_{k<=N} f^(k)(x) (iy)^k / k!, chi a plateau bump.
class AlmostAnalyticExtension {
 public:
  AlmostAnalyticExtension(ScalarFunction f, int order, double sigma, AaeGrid grid);

  int order() const { return N_; }
  double sigma() const { return sigma_; }
  const AaeGrid& grid() const { return grid_; }
  const ScalarFunction& function() const { return f_; }

  cplx value(double x, double y) const;
  cplx dbar(double x, double y) const;
  // max over grid cell centres with 0 < |y| of |dbar| / |y|^N, estimated on a grid of `step`.
  double estimate_constant(double step) const;
  double constant() const { return C_N_; }

 private:
  ScalarFunction f_;
  int N_;
  double sigma_;
  AaeGrid grid_;
  BumpFunction chi_;
  double C_N_;
};

// sigma defaults to half the support width of f; the grid covers supp f x [-sigma, sigma].
AlmostAnalyticExtension build_aae(const ScalarFunction& f, int order, double sigma = 0.0,
                                  double step = 0.01);

// -(1/pi) sum over midpoint cells of dbar f~(z) (z - A)^{-1} |cell|.
Eigen::MatrixXcd hs_apply(const Eigen::MatrixXcd& A, const AlmostAnalyticExtension& aae);

// d = 1 oscillatory sum versus integral.
struct PoissonInput {
  // Amplitude as a jet in x for a given eps; must vanish outside [k_lo, k_hi].
  std::function<JetD(const JetD&, double eps)> amplitude;
  std::function<JetD(const JetD&)> phase;
  double k_lo, k_hi;
};
struct PoissonReport {
  cplx sum, integral;
  double remainder;
  double bound;          // eps^{2k} sum_{1<=|n|<=n_max} int_K |W^k a|(x, 2 pi n)
  double tail_estimate;  // geometric |xi|^{-2k} extrapolation of the omitted dual terms
  double max_phase_slope;
  bool pass;
};
PoissonReport poisson_compare(const PoissonInput& in, double eps, int k, int n_max = 3);

// Jet of an expression in one variable around x.
JetD expr_jet(const DiffExpr& e, const JetD& x);

// sum_{x in aZ} e^{-x^2/2} against a^-1 sqrt(2 pi) sum_{xi in (2 pi/a) Z} e^{-xi^2/2}.
struct GaussianPoissonReport {
  double lattice_sum, dual_sum, abs_err;
};
GaussianPoissonReport gaussian_poisson_check(double a);

struct Phase2D {
  std::function<double(double, double)> value;
  std::function<void(double, double, double*)> gradient;
  std::function<void(double, double, double*)> hessian;  // row-major 2x2
};
Phase2D phase_from_expr(const Expr& e);  // variables t, s

struct StationaryPhaseInput {
  std::function<double(double, double)> u;
  double box[4];  // t_lo, t_hi, s_lo, s_hi containing supp u (numerically)
  Phase2D phi;
  double guess[2] = {0.0, 0.0};
};
struct StationaryPhaseRow {
  double eps;
  cplx integral, leading;
  double remainder;
};
struct StationaryPhaseReport {
  double critical[2];
  int signature;
  double det;
  cplx A;
  std::vector<StationaryPhaseRow> rows;
  double slope;
};
StationaryPhaseReport stationary_phase_check(const StationaryPhaseInput& in,
                                             const std::vector<double>& eps_list);
// Composite Gauss-Legendre with panels sized to the phase oscillation.
cplx oscillatory_integral_2d(const StationaryPhaseInput& in, double eps);

}  // namespace latweyl
