// Shipped fixture suites shared by the command-line experiments and the acceptance run.
#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "latweyl/core.hpp"
#include "latweyl/semiclassics.hpp"

namespace latweyl::fixtures {

// Band-limited symbols for the trace identity, each with its quantization and box.
struct TraceCase {
  std::string name;
  Symbol symbol;
  double t, eps, L;
  int M;
};
std::vector<TraceCase> trace_identity_cases();

struct PoissonCase {
  std::string name;
  PoissonInput input;
  int k;
  bool zero_phase;  // remainder must decay superpolynomially
};
std::vector<PoissonCase> poisson_cases();

struct StatPhaseCase {
  std::string name;
  StationaryPhaseInput input;
  bool gaussian;  // closed-form Fresnel value available
};
std::vector<StatPhaseCase> stationary_phase_cases();
// int e^{i (t^2+s^2)/(2 eps)} e^{-(t^2+s^2)/2} dt ds
cplx gaussian_fresnel(double eps);

// Hermitian Q diag(ev) Q* with a pseudo-random unitary Q.
Eigen::MatrixXcd hermitian_with_spectrum(const std::vector<double>& ev, std::uint64_t seed);
struct HSCase {
  std::string name;
  Eigen::MatrixXcd A;
};
// Dimensions 2, 10, 100 with spectra 0.1 away from the edges of supp f.
std::vector<HSCase> hs_cases();
// f = Bump(0, 0.6, plateau 0.3).
BumpFunction hs_function();

struct CalculusRow {
  std::string check;
  int order;          // truncation order, 0 when not applicable
  double value;       // fitted slope or defect
  double threshold;
  bool pass;
};
std::vector<CalculusRow> calculus_suite();

}  // namespace latweyl::fixtures
