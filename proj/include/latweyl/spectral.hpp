// Dense Hermitian eigensolves and the spectral experiments built on them.
#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "latweyl/core.hpp"
#include "latweyl/quantize.hpp"
#include "latweyl/scalar.hpp"

namespace latweyl {

struct SpectralDecomposition {
  Eigen::VectorXd eigenvalues;    // ascending
  Eigen::MatrixXcd eigenvectors;  // columns
  std::string source;
  double eps = 0.0;               // 0 when not built from an operator
  double residual = 0.0;          // max_j ||A v_j - lambda_j v_j||
  double unitarity_defect = 0.0;  // max |V*V - I|
  double symmetrization_defect = 0.0;

  std::size_t dim() const { return static_cast<std::size_t>(eigenvalues.size()); }
};

// Symmetrises (A + A*)/2 and solves. Throws NumericalError if the defect exceeds
// max_defect * max|A|, the solver fails, or residual/unitarity exceed 1e-8 bounds.
SpectralDecomposition eigendecompose(const OperatorMatrix& A, double max_defect = 1e-8);
SpectralDecomposition eigendecompose(const Eigen::MatrixXcd& A, const std::string& source = "matrix",
                                     double max_defect = 1e-8);

// Weyl quantization of sym on [-L,L]^d followed by eigendecompose.
SpectralDecomposition weyl_spectrum(const Symbol& sym, double eps, double L, int M);
// Eigenvalues only (no eigenvectors or residual checks beyond the Hermitian defect); sorted.
Eigen::VectorXd weyl_eigenvalues(const Symbol& sym, double eps, double L, int M,
                                 double max_defect = 1e-8);

struct CountResult {
  Interval interval;
  double eps;
  std::size_t count;
  double boundary_gap;  // min over eigenvalues of distance to {alpha, beta}
};
CountResult count_eigenvalues(const SpectralDecomposition& spec, const Interval& iv);

// Moves alpha/beta by 1e-6 (repeatedly) while an eigenvalue sits within 1e-9 of them.
Interval rejitter_interval(const SpectralDecomposition& spec, const Interval& iv);

struct TraceIdentityReport {
  double lhs, rhs, abs_err;
};
TraceIdentityReport trace_identity_check(const Symbol& sym, double t, const LatticeBox& lattice,
                                         double eps, const TorusGrid& grid);

Eigen::MatrixXcd apply_function_exact(const SpectralDecomposition& spec,
                                      const std::function<cplx(double)>& f);

// Midpoint rule in x on [-R,R]^d and the torus rule in xi; integrand sampled at cell centres.
double phase_space_integral(int dim, double R, int x_cells, int xi_nodes,
                            const std::function<double(Pt, Pt)>& fn);

struct TraceFRow {
  double eps;
  double trace;       // tr f(P_eps)
  double leading;     // (2 pi eps)^-d int f(a0)
  double correction;  // (2 pi eps)^-d eps int f'(a0) a1
  double remainder;   // (2 pi eps)^d tr - int f(a0) - eps int f'(a0) a1
};
struct TraceFReport {
  std::vector<TraceFRow> rows;
  double int_f;   // int f(a0) dx dxi
  double int_f1;  // int f'(a0) a1 dx dxi
  double slope;
};
struct TraceFOptions {
  double L = 3.0;
  int M = 64;
  int x_cells = 3000;
  int xi_nodes = 1024;
};
TraceFReport trace_f_comparison(const Symbol& sym, const ScalarFunction& f,
                                const std::vector<double>& eps_list, const TraceFOptions& opt);

// sum_j e^{i t lambda_j / eps} v_j v_j*
Eigen::MatrixXcd propagator(const SpectralDecomposition& spec, double t, double eps);

struct ClusterReport {
  std::vector<double> eps;
  std::vector<std::size_t> counts;
  std::size_t max_count;
};
ClusterReport cluster_count_sweep(const Symbol& sym, double lambda0,
                                  const std::vector<double>& eps_list, double width_factor,
                                  double L, int M);

struct TruncationReport {
  std::vector<double> L;
  std::vector<std::size_t> counts;
  std::vector<bool> deficit;  // count below the largest-box count
  bool stable;                // identical counts for the two largest L
};
TruncationReport truncation_convergence(const Symbol& sym, const Interval& iv, double eps,
                                        const std::vector<double>& L_list, int M);

}  // namespace latweyl
