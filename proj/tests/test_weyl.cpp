#include <boost/math/quadrature/tanh_sinh.hpp>
#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "latweyl/weyl.hpp"

using namespace latweyl;

namespace {

Symbol harmonic() { return builtin_symbol("lattice_laplacian_plus_quadratic", {}); }

// vol {alpha <= 2(1-cos xi) + x^2 <= beta}: the x-section at fixed xi has exact length
// 2(sqrt(beta-h)_+ - sqrt(alpha-h)_+). Split at the kinks and integrate each smooth piece.
double exact_volume(double alpha, double beta) {
  auto len = [&](double xi) {
    const double h = 2 * (1 - std::cos(xi));
    return 2 * (std::sqrt(std::max(0.0, beta - h)) - std::sqrt(std::max(0.0, alpha - h)));
  };
  std::vector<double> cuts{0.0, kPi};
  for (double l : {alpha, beta})
    if (l > 0 && l < 4) cuts.push_back(std::acos(1 - l / 2));
  std::sort(cuts.begin(), cuts.end());
  boost::math::quadrature::tanh_sinh<double> ts;
  double v = 0;
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) v += ts.integrate(len, cuts[k], cuts[k + 1]);
  return 2 * v;  // xi and -xi
}

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = lo + (hi - lo) * i / (n - 1);
  return v;
}

}  // namespace

TEST_CASE("phase-space volume of the harmonic fixture") {
  const double Vstar = exact_volume(0.5, 2.5);
  const auto v = phase_space_volume(harmonic(), Interval(0.5, 2.5));
  CHECK(std::abs(v.value - Vstar) / Vstar < 1e-5);
  CHECK(std::abs(v.mc_value - v.value) / v.value < 1e-4);
  CHECK(std::abs(v.mc_value - Vstar) < 5 * v.mc_stderr);
  CHECK(v.refinement_delta < 1e-4);
  CHECK(v.value > 0);

  // Fixed seed and sample count reproduce the estimate bitwise.
  const auto again = monte_carlo_volume(harmonic(), Interval(0.5, 2.5), 3.0, 10'000'000, 2024);
  CHECK(again.value == v.mc_value);
}

TEST_CASE("volume: empty, monotone, additive") {
  VolumeQuad q{.mc_samples = 0};
  auto H = harmonic();
  CHECK(phase_space_volume(H, Interval(-2.0, -1.0), q).value == 0.0);
  const double a = phase_space_volume(H, Interval(0.5, 1.5), q).value;
  const double b = phase_space_volume(H, Interval(1.5, 2.5), q).value;
  const double ab = phase_space_volume(H, Interval(0.5, 2.5), q).value;
  CHECK(a <= ab);
  CHECK(b <= ab);
  CHECK(std::abs(a + b - ab) < 1e-9);
  CHECK(std::abs(a - exact_volume(0.5, 1.5)) < 1e-5);

  // The box [-3,3] does not contain {a_0 <= 12}.
  CHECK_THROWS_AS(phase_space_volume(H, Interval(0.5, 12.0), q), HypothesisError);
}

TEST_CASE("Liouville measure") {
  auto H = harmonic();
  const auto l = liouville_measure(H, 1.5);
  CHECK(std::abs(l.central_difference - l.shell) / l.shell < 1e-3);
  // d/dlambda of the exact sublevel volume.
  const double h = 1e-4;
  const double want = (exact_volume(0.0, 1.5 + h) - exact_volume(0.0, 1.5 - h)) / (2 * h);
  CHECK(std::abs(l.central_difference - want) / want < 1e-4);
  CHECK(l.min_gradient > 0.1);

  const auto below = liouville_measure(H, -0.5);
  CHECK(below.central_difference == 0.0);
  CHECK(below.shell == 0.0);

  CHECK_THROWS_AS(liouville_measure(H, 0.0), HypothesisError);  // minimum at the origin
  CHECK_THROWS_AS(liouville_measure(H, 4.0), HypothesisError);  // saddle at (0, pi)
}

TEST_CASE("coarea identity") {
  auto H = harmonic();
  const int n = 81;
  const auto lam = linspace(0.5, 2.5, n);
  const auto rho = liouville_curve(H, lam);
  // Simpson.
  const double dl = lam[1] - lam[0];
  double s = rho.front() + rho.back();
  for (int i = 1; i + 1 < n; ++i) s += (i % 2 ? 4 : 2) * rho[i];
  s *= dl / 3;
  const double vol = phase_space_volume(H, Interval(0.5, 2.5), {.mc_samples = 0}).value;
  CHECK(std::abs(s - vol) / vol < 1e-3);
}

TEST_CASE("Weyl count experiment") {
  auto H = harmonic();
  const Interval iv(0.5, 2.5);
  const auto rep = weyl_experiment(H, iv, {0.025, 0.1, 0.05, 0.0125});
  REQUIRE(rep.rows.size() == 4);
  for (std::size_t k = 1; k < rep.rows.size(); ++k) CHECK(rep.rows[k].eps < rep.rows[k - 1].eps);
  const double Vstar = exact_volume(0.5, 2.5);
  for (const auto& r : rep.rows) {
    CHECK(r.sandwich);
    CHECK(r.truncation_stable);
    CHECK(r.remainder == doctest::Approx(r.scaled - r.volume));
    CHECK(r.scaled == doctest::Approx(kTwoPi * r.eps * static_cast<double>(r.N)));
  }
  CHECK(rep.lower.value < rep.volume.value);
  CHECK(rep.upper.value > rep.volume.value);
  CHECK(std::abs(rep.rows.back().scaled - Vstar) / Vstar < 0.01);

  // Independent count at the coarsest eps from the full eigendecomposition.
  const auto spec = weyl_spectrum(H, 0.1, 3.0, 64);
  CHECK(count_eigenvalues(spec, iv).count == rep.rows.front().N);

  const auto none = weyl_experiment(H, Interval(-2.0, -1.0), {0.1, 0.05});
  for (const auto& r : none.rows) {
    CHECK(r.N == 0);
    CHECK(r.remainder == 0.0);
  }
  CHECK_THROWS_AS(weyl_experiment(H, Interval(0.0, 2.5), {0.1}), HypothesisError);
  CHECK_THROWS_AS(weyl_experiment(H, iv, {}), ConfigError);
}

TEST_CASE("smoothed density of states") {
  auto H = harmonic();
  const SmoothingKernel psi(0.5);
  const double eps = 0.025;
  const BumpFunction f(1.5, 1.0, 0.3);

  SpectralDecomposition one;
  one.eigenvalues = Eigen::VectorXd::Constant(1, 1.5);
  one.eps = eps;
  const auto lam = linspace(1.3, 1.7, 9);
  const auto single = smoothed_dos(one, f.as_function(), psi, lam, eps);
  for (std::size_t i = 0; i < lam.size(); ++i)
    CHECK(single[i] == doctest::Approx(scaled_fourier(psi, lam[i] - 1.5, eps).real() /
                                       (eps * std::sqrt(kTwoPi))).epsilon(1e-14));

  SpectralDecomposition spec;
  spec.eigenvalues = weyl_eigenvalues(H, eps, 3.0, 64);
  spec.eps = eps;
  const BumpFunction far(-3.0, 1.0);  // below min a_0 = 0
  for (double v : smoothed_dos(spec, far.as_function(), psi, lam, eps)) CHECK(v == 0.0);

  const auto grid = linspace(0.0, 3.0, 121);
  for (double v : smoothed_dos(spec, f.as_function(), psi, grid, eps)) CHECK(v >= -1e-10);

  const double rho = liouville_measure(H, 1.5).central_difference;
  const double I = smoothed_dos(spec, f.as_function(), psi, {1.5}, eps)[0];
  CHECK(std::abs(kTwoPi * eps * I - f(1.5) * rho) / (f(1.5) * rho) < 0.15);
}

// psi support stays inside the caustic horizon of the fixture (about 0.775).
TEST_CASE("DOS against the Liouville curve") {
  auto H = harmonic();
  const BumpFunction f(1.5, 1.0, 0.3);
  const auto lam = linspace(1.0, 2.0, 21);
  const auto rep = dos_vs_liouville_sweep(H, f.as_function(), SmoothingKernel(0.5), lam,
                                          {0.05, 0.025});
  REQUIRE(rep.rows.size() == 2);
  CHECK(rep.rows[1].deviation <= 0.15);
  CHECK(rep.rows[0].deviation / rep.rows[1].deviation >= 1.6);

  const auto wide = dos_vs_liouville_sweep(H, f.as_function(), SmoothingKernel(0.75), lam,
                                           {0.05, 0.025});
  for (int k = 0; k < 2; ++k) {
    const double r = wide.rows[k].deviation / rep.rows[k].deviation;
    CHECK(r <= 2.0);
    CHECK(r >= 0.5);
  }

  const auto zero = dos_vs_liouville_sweep(H, ScalarFunction::zero(), SmoothingKernel(0.5), lam,
                                           {0.05});
  CHECK(zero.rows[0].deviation == 0.0);
}
