// Phase-space volumes, Liouville measures, the eigenvalue-count experiment and the smoothed
// density of states.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "latweyl/core.hpp"
#include "latweyl/scalar.hpp"
#include "latweyl/semiclassics.hpp"
#include "latweyl/spectral.hpp"

namespace latweyl {

struct VolumeQuad {
  double x_halfwidth = 3.0;
  int x_cells = 2000;   // per axis, d = 1 grid rule
  int xi_cells = 1500;
  std::uint64_t mc_samples = 10'000'000;  // 0 disables the Monte Carlo estimate
  std::uint64_t seed = 2024;
};

struct VolumeResult {
  Interval interval;
  double value = 0.0;             // grid rule for d = 1, Monte Carlo otherwise
  double refinement_delta = 0.0;  // |value - value at doubled steps|
  double mc_value = 0.0, mc_stderr = 0.0;
  VolumeQuad quad;
  std::string method;
};

// vol {a_0 <= lambda} inside [-R,R]^d x T^d for every level in one pass over the grid. Each cell
// contributes the exact measure of {linearised a_0 <= lambda}, which makes the rule second order
// across the level set. d = 1 only.
std::vector<double> sublevel_volumes(const Symbol& sym, const std::vector<double>& levels,
                                     double R, int x_cells, int xi_cells);

// Stratified Monte Carlo estimate of vol {alpha <= a_0 <= beta}; any d. stderr from the
// per-sample spread.
struct MonteCarloVolume {
  double value, stderr_;
};
MonteCarloVolume monte_carlo_volume(const Symbol& sym, const Interval& iv, double R,
                                    std::uint64_t samples, std::uint64_t seed);

// Throws HypothesisError when a_0 does not exceed beta on the ring outside the box.
VolumeResult phase_space_volume(const Symbol& sym, const Interval& iv, const VolumeQuad& quad = {});

struct ShellReport {
  double min_gradient;  // min |grad a_0| on cells the level set crosses
  std::size_t cells;    // number of such cells (0: level set absent)
};
ShellReport shell_gradient(const Symbol& sym, double lambda, double R, int cells_per_axis = 400);

struct LiouvilleResult {
  double central_difference;
  double shell;  // int ds / |grad a_0| along the marching-squares contour (d = 1); NaN otherwise
  double min_gradient;
};
// Throws HypothesisError when lambda is near-critical (min |grad a_0| below threshold).
LiouvilleResult liouville_measure(const Symbol& sym, double lambda, const VolumeQuad& quad = {},
                                  double h = 1e-3, double critical_threshold = 0.1);
// Central-difference path only, for a whole grid of levels in one pass.
std::vector<double> liouville_curve(const Symbol& sym, const std::vector<double>& lambdas,
                                    const VolumeQuad& quad = {}, double h = 1e-3);

struct WeylConfig {
  double L = 3.0;
  int M = 64;
  VolumeQuad quad;
  double sandwich_delta = 0.1;
  double truncation_extra = 1.0;  // the count is cross-checked on a box this much larger
  double critical_threshold = 0.1;
};
struct WeylRow {
  double eps;
  std::size_t N;
  double scaled, volume, remainder;
  bool sandwich, truncation_stable;
};
struct WeylReport {
  std::string symbol;
  Interval interval;
  std::vector<WeylRow> rows;  // eps descending
  double slope = 0.0, constant = 0.0;
  VolumeResult volume, lower, upper;  // lower/upper: interval shrunk/grown by sandwich_delta
};
WeylReport weyl_experiment(const Symbol& sym, const Interval& iv, std::vector<double> eps_list,
                           const WeylConfig& cfg = {});

// I_1(lambda) = (eps sqrt(2 pi))^-1 sum_{lambda_j in supp f} f(lambda_j) F_eps psi(lambda - lambda_j).
std::vector<double> smoothed_dos(const SpectralDecomposition& spec, const ScalarFunction& f,
                                 const SmoothingKernel& psi, const std::vector<double>& lambdas,
                                 double eps);

struct DosConfig {
  double L = 3.0;
  int M = 64;
  VolumeQuad quad{.mc_samples = 0};
  double h = 1e-3;  // central-difference step of the Liouville curve
};
struct DosRow {
  double eps;
  std::vector<double> scaled;  // (2 pi eps)^d I_1 per lambda
  double deviation;            // max |scaled - target| / max target
};
struct DosReport {
  std::vector<double> lambdas, liouville, target;  // target = f * liouville
  std::vector<DosRow> rows;
  double slope = 0.0;
};
DosReport dos_vs_liouville_sweep(const Symbol& sym, const ScalarFunction& f,
                                 const SmoothingKernel& psi, const std::vector<double>& lambdas,
                                 const std::vector<double>& eps_list, const DosConfig& cfg = {});

}  // namespace latweyl
