// Hamiltonian characteristics, the Hamilton-Jacobi phase, the leading transport amplitude and the
// oscillatory-integral parametrix for e^{itP/eps} f(P).
#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "latweyl/core.hpp"
#include "latweyl/scalar.hpp"
#include "latweyl/semiclassics.hpp"

namespace latweyl {

// RK4 samples of x' = grad_xi H, xi' = -grad_x H for H = Re a_0.
struct Trajectory {
  std::vector<double> times;
  std::vector<std::vector<double>> x, xi;
  std::vector<double> action;  // int (xi . x' - H) dtau
  double energy_drift = 0.0;   // max |H(x,xi) - H(x0,xi0)|
};
// Throws NumericalError when the drift exceeds 10 tol max(1, horizon).
Trajectory flow_step(const Symbol& H, Pt x0, Pt xi0, double dt, int steps, double tol = 1e-8);

// End state of one characteristic with its variational data.
struct Characteristic {
  std::vector<double> x, xi;
  double action = 0.0;
  Eigen::MatrixXd dx_dx0;   // d x(t) / d x0 at fixed xi0
  Eigen::MatrixXd dxi_dx0;
  cplx a1_integral = 0.0;  // int a_1(x, xi) dtau, when requested
};
Characteristic shoot(const Symbol& H, Pt x0, Pt xi0, double t, double max_dt = 2.5e-3,
                     const Symbol* a1 = nullptr);

struct HJOptions {
  double max_dt = 2.5e-3;  // RK4 step bound along characteristics
  double newton_tol = 1e-10;
  int max_newton = 50;
  double min_jacobian = 1e-6;  // det dx/dx0 below this counts as a caustic
  bool ghosts = true;          // also solve at xi + 2 pi e_k for the periodicity check
  bool auto_shrink = false;    // drop the slices from the first failure on instead of throwing
};

// phi(t,x,xi) on times x (x_axis)^d x (xi_axis)^d, flattened as [time][x][xi] with the last axis
// fastest inside each block.
struct PhaseSolution {
  int dim = 1;
  double horizon = 0.0;
  double requested_horizon = 0.0;  // larger than horizon when auto_shrink dropped slices
  std::vector<double> times, x_axis, xi_axis;
  std::vector<double> phi, periodic_part;
  std::vector<double> gradx, foot;  // dim entries per node
  std::vector<double> jacobian;     // det dx/dx0
  // ghost[k] holds periodic_part solved independently at xi + 2 pi e_k.
  std::vector<std::vector<double>> ghost;
  double max_gradx_periodic = 0.0;  // max |grad_x phi_T|, must stay below 2 pi

  std::size_t x_count() const;
  std::size_t xi_count() const;
  std::size_t node(std::size_t ti, std::size_t xf, std::size_t xif) const {
    return (ti * x_count() + xf) * xi_count() + xif;
  }
  void x_point(std::size_t xf, double* x) const;
  void xi_point(std::size_t xif, double* xi) const;
};

// Characteristics from (x0, xi) with Newton inversion of x(t; x0, xi) = x, continuing in t.
// A caustic (Newton failure, small Jacobian, or |grad_x phi_T| >= 2 pi) raises NumericalError
// naming the largest safe time reached, or with auto_shrink truncates the solution there.
PhaseSolution solve_hamilton_jacobi(const Symbol& H, std::vector<double> times,
                                    const std::vector<double>& x_axis,
                                    const std::vector<double>& xi_axis,
                                    const HJOptions& opt = {});

struct PeriodicityCheck {
  double max_violation;
};
PeriodicityCheck check_phase_periodicity(const PhaseSolution& ps);

// max |d_t phi + H(x, grad_x phi)| over interior nodes with both derivatives taken by finite
// differences of the phi samples (fourth order when five points are available).
double hj_residual(const Symbol& H, const PhaseSolution& ps);

struct ParametrixInit {
  BumpFunction chi{0.0, 1.0, 0.5};                // applied per coordinate
  std::function<cplx(Pt x, Pt xi)> c;             // Weyl symbol data at the midpoint
};
double product_cutoff(const BumpFunction& chi, Pt x);

// mu_0(t,x,y,xi) = A(t,x,xi) chi(y) c((x0 + y)/2, xi), x0 the characteristic foot, with
// A = chi(x0) J^{-1/2} exp(i int a_1 dtau).
struct ParametrixAmplitude {
  ParametrixInit init;
  std::vector<cplx> factor;  // A on the PhaseSolution nodes
  const PhaseSolution* phase = nullptr;

  cplx mu0(std::size_t node, Pt y, Pt xi) const;
};
ParametrixAmplitude solve_transport_leading(const Symbol& H, const PhaseSolution& ps,
                                            const ParametrixInit& init,
                                            const Symbol* a1 = nullptr,
                                            double max_dt = 2.5e-3);

// (2 pi)^-d sum over torus nodes of e^{i (y xi - phi(t,x,xi))/eps} mu_0(t,x,y,xi), with phi_T
// and the amplitude interpolated multilinearly in x. t must be one of the solved times and the
// torus nodes must coincide with the solution's xi axis.
Eigen::MatrixXcd build_parametrix(const ParametrixAmplitude& mu, const PhaseSolution& ps, double t,
                                  const LatticeBox& lattice, double eps, const TorusGrid& grid);

struct ParametrixConfig {
  double L = 6.0;
  int M = 128;
  double chi_plateau = 4.4, chi_support = 5.6;
  HJOptions hj{.max_dt = 0.0125, .ghosts = false};  // RK4 error is far below eps here
};
struct ParametrixRow {
  double eps, t, error, norm;
};
struct ParametrixReport {
  std::vector<ParametrixRow> rows;
  std::vector<double> eps, sup_error;  // sup over t per eps
  double slope = 0.0;
  double norm_constant = 0.0;  // max (||U(t)|| - 1)_+ / eps
};
// Spectral-norm error of the parametrix against propagator * f(P) from the exact eigensystem.
ParametrixReport parametrix_error_sweep(const Symbol& sym, const ScalarFunction& f,
                                        const std::vector<double>& t_list,
                                        const std::vector<double>& eps_list,
                                        const ParametrixConfig& cfg = {});

}  // namespace latweyl
