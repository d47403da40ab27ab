#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "latweyl/semiclassics.hpp"
#include "latweyl/spectral.hpp"

using namespace latweyl;

namespace {

Symbol harmonic(const std::string& a1 = "") {
  ParamMap p;
  if (!a1.empty()) p["a1"] = a1;
  return builtin_symbol("lattice_laplacian_plus_quadratic", p);
}

// Sturm count of eigenvalues below s for the real symmetric tridiagonal (2 + x_i^2, -1).
int sturm_below(const std::vector<double>& diag, double s) {
  int count = 0;
  double q = 1.0;
  for (std::size_t i = 0; i < diag.size(); ++i) {
    q = diag[i] - s - (i ? 1.0 / q : 0.0);
    if (q == 0.0) q = 1e-300;
    if (q < 0) ++count;
  }
  return count;
}

double bisect_kth(const std::vector<double>& diag, int k) {
  double lo = -10, hi = 100;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (sturm_below(diag, mid) > k ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("eigendecompose on small matrices") {
  Eigen::MatrixXcd D = Eigen::MatrixXcd::Zero(3, 3);
  D(0, 0) = 3;
  D(1, 1) = 1;
  D(2, 2) = 2;
  auto s = eigendecompose(D);
  CHECK(s.eigenvalues[0] == doctest::Approx(1));
  CHECK(s.eigenvalues[1] == doctest::Approx(2));
  CHECK(s.eigenvalues[2] == doctest::Approx(3));
  CHECK(s.eigenvectors.cwiseAbs().maxCoeff() == doctest::Approx(1));
  CHECK(s.residual < 1e-12);
  CHECK(s.unitarity_defect < 1e-12);

  Eigen::MatrixXcd B(2, 2);
  B << 0, -1, -1, 0;
  auto s2 = eigendecompose(B);
  CHECK(s2.eigenvalues[0] == doctest::Approx(-1));
  CHECK(s2.eigenvalues[1] == doctest::Approx(1));

  Eigen::MatrixXcd bad(2, 2);
  bad << 0, 1, 0, 0;
  CHECK_THROWS_AS(eigendecompose(bad), NumericalError);
}

TEST_CASE("harmonic fixture against an independent Sturm bisection") {
  const double eps = 0.1, L = 3.0;
  auto spec = weyl_spectrum(harmonic(), eps, L, 64);
  LatticeBox box(1, eps, L);
  std::vector<double> diag(box.size());
  for (std::size_t i = 0; i < box.size(); ++i) {
    const double x = box.coord(static_cast<int>(i));
    diag[i] = 2 + x * x;
  }
  for (int k : {0, 1, 5, 20, 60}) CHECK(spec.eigenvalues[k] == doctest::Approx(bisect_kth(diag, k)).epsilon(1e-10));
  // Harmonic approximation: lowest level near eps.
  CHECK(std::abs(spec.eigenvalues[0] - eps) < 0.1 * eps);
  CHECK(spec.residual < 1e-8 * spec.eigenvalues.cwiseAbs().maxCoeff());
  CHECK(spec.unitarity_defect < 1e-8);
  CHECK(spec.eps == eps);
}

TEST_CASE("counting") {
  SpectralDecomposition s;
  s.eigenvalues = Eigen::VectorXd::LinSpaced(4, 0, 3);
  CHECK(count_eigenvalues(s, Interval(0.5, 2.5)).count == 2);
  CHECK(count_eigenvalues(s, Interval(0.5, 2.5)).boundary_gap == doctest::Approx(0.5));
  CHECK(count_eigenvalues(s, Interval(3.5, 9)).count == 0);
  CHECK(count_eigenvalues(s, Interval(0, 3)).count == 4);
  CHECK(count_eigenvalues(s, Interval(1, 2)).boundary_gap == 0.0);
  const auto j = rejitter_interval(s, Interval(1, 2));
  CHECK(j.alpha() > 1.0);
  CHECK(count_eigenvalues(s, j).boundary_gap >= 1e-9);
}

TEST_CASE("counting is monotone under inclusion") {
  auto spec = weyl_spectrum(harmonic(), 0.05, 3.0, 64);
  for (double a = 0.0; a < 3; a += 0.37)
    for (double b = a + 0.1; b < 6; b += 0.53) {
      const auto inner = count_eigenvalues(spec, Interval(a + 0.05, b)).count;
      const auto outer = count_eigenvalues(spec, Interval(a, b + 0.05)).count;
      CHECK(inner <= outer);
    }
}

TEST_CASE("trace identity") {
  TorusGrid g(1, 64);
  LatticeBox box(1, 0.1, 2.0);
  auto one = builtin_symbol("x_only", {{"f", std::string("1")}});
  auto r1 = trace_identity_check(one, 0.5, box, 0.1, g);
  CHECK(r1.lhs == doctest::Approx(static_cast<double>(box.size())));
  CHECK(r1.abs_err < 1e-12);

  auto gauss = builtin_symbol("x_only", {{"f", std::string("exp(-x^2)")}});
  auto r2 = trace_identity_check(gauss, 0.0, box, 0.1, g);
  double direct = 0;
  for (std::size_t i = 0; i < box.size(); ++i) direct += std::exp(-std::pow(box.coord(int(i)), 2));
  CHECK(r2.lhs == doctest::Approx(direct).epsilon(1e-13));
  CHECK(r2.abs_err < 1e-12);

  auto gc = builtin_symbol("expression", {{"a0", std::string("exp(-x^2)*cos(xi)")}});
  for (double t : {0.0, 0.3, 0.5, 1.0}) {
    auto r3 = trace_identity_check(gc, t, box, 0.1, g);
    CHECK(std::abs(r3.lhs) < 1e-12);
    CHECK(r3.abs_err < 1e-12);
  }
}

TEST_CASE("exact functional calculus") {
  auto spec = weyl_spectrum(harmonic(), 0.1, 2.0, 64);
  LatticeBox box(1, 0.1, 2.0);
  const auto A = build_operator(harmonic(), 0.5, box, 0.1, TorusGrid(1, 64)).entries;
  const Eigen::MatrixXcd id = apply_function_exact(spec, [](double l) { return cplx(l); });
  CHECK((id - A).cwiseAbs().maxCoeff() < 1e-10);
  const Eigen::MatrixXcd one = apply_function_exact(spec, [](double) { return cplx(1.0); });
  CHECK((one - Eigen::MatrixXcd::Identity(A.rows(), A.cols())).cwiseAbs().maxCoeff() < 1e-10);
  const double top = spec.eigenvalues.maxCoeff();
  BumpFunction off(top + 2, 1.0);
  const Eigen::MatrixXcd z = apply_function_exact(spec, [&](double l) { return cplx(off(l)); });
  CHECK(z.cwiseAbs().maxCoeff() == 0.0);

  // Spectral mapping: eigenvalues of f(A) are f(lambda_j).
  auto f = [](double l) { return std::exp(-l) + 0.3 * l * l; };
  auto fs = eigendecompose(apply_function_exact(spec, [&](double l) { return cplx(f(l)); }));
  std::vector<double> want(spec.dim());
  for (std::size_t j = 0; j < spec.dim(); ++j) want[j] = f(spec.eigenvalues[j]);
  std::sort(want.begin(), want.end());
  for (std::size_t j = 0; j < spec.dim(); ++j)
    CHECK(fs.eigenvalues[j] == doctest::Approx(want[j]).epsilon(1e-9));
}

TEST_CASE("propagator group law") {
  auto spec = weyl_spectrum(harmonic(), 0.05, 2.0, 64);
  const double eps = 0.05;
  const auto n = static_cast<Eigen::Index>(spec.dim());
  const Eigen::MatrixXcd I = Eigen::MatrixXcd::Identity(n, n);
  CHECK((propagator(spec, 0.0, eps) - I).cwiseAbs().maxCoeff() < 1e-10);
  const Eigen::MatrixXcd U1 = propagator(spec, 0.3, eps), U2 = propagator(spec, -0.3, eps);
  CHECK((U1 * U2 - I).cwiseAbs().maxCoeff() < 1e-8);
  CHECK((U1 * U1.adjoint() - I).cwiseAbs().maxCoeff() < 1e-8);
  CHECK((propagator(spec, 0.1, eps) * propagator(spec, 0.25, eps) - propagator(spec, 0.35, eps))
            .cwiseAbs()
            .maxCoeff() < 1e-8);
}

TEST_CASE("trace asymptotics") {
  BumpFunction f(1.5, 1.0, 0.3);
  TraceFOptions opt;
  const std::vector<double> eps{0.1, 0.05, 0.025, 0.0125};
  auto r0 = trace_f_comparison(harmonic(), f.as_function(), eps, opt);
  CHECK(r0.slope >= 1.6);
  CHECK(r0.int_f1 == 0.0);
  // a_1 = x is odd, so its first-order contribution integrates to zero.
  auto rx = trace_f_comparison(harmonic("x"), f.as_function(), eps, opt);
  CHECK(std::abs(rx.int_f1) < 1e-10);
  CHECK(rx.slope >= 1.6);
  auto rc = trace_f_comparison(harmonic("cos(xi)"), f.as_function(), eps, opt);
  CHECK(std::abs(rc.int_f1) > 1e-3);
  CHECK(rc.slope >= 1.6);
  for (const auto& row : r0.rows) CHECK(row.leading > 0);

  auto rz = trace_f_comparison(harmonic(), ScalarFunction::zero(), {0.1, 0.05}, opt);
  for (const auto& row : rz.rows) {
    CHECK(row.trace == 0.0);
    CHECK(row.leading == 0.0);
    CHECK(row.remainder == 0.0);
  }
  BumpFunction high(40, 1.0);
  auto rh = trace_f_comparison(harmonic(), high.as_function(), {0.1}, opt);
  CHECK(rh.rows[0].trace == 0.0);
  CHECK(rh.rows[0].leading == 0.0);
}

TEST_CASE("cluster counts") {
  const std::vector<double> eps{0.1, 0.05, 0.025};
  auto r = cluster_count_sweep(harmonic(), 1.5, eps, 1.0, 3.0, 64);
  CHECK(r.max_count <= 4);
  auto r0 = cluster_count_sweep(harmonic(), 1.5, eps, 0.0, 3.0, 64);
  CHECK(r0.max_count <= 1);
  auto top = cluster_count_sweep(harmonic(), 100.0, eps, 1.0, 3.0, 64);
  CHECK(top.max_count == 0);
}

TEST_CASE("truncation convergence") {
  auto r = truncation_convergence(harmonic(), Interval(0.5, 2.5), 0.05, {0.8, 3.0, 6.0}, 64);
  CHECK(r.stable);
  CHECK(r.counts[1] == r.counts[2]);
  CHECK(r.deficit[0]);
  CHECK_FALSE(r.deficit[2]);
  auto e = truncation_convergence(harmonic(), Interval(-3, -2), 0.05, {2.0, 4.0}, 64);
  CHECK(e.counts[0] == 0);
  CHECK(e.counts[1] == 0);
}
