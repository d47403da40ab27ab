#include <cmath>
#include <vector>

#include "doctest.h"
#include "latweyl/dynamics.hpp"
#include "latweyl/quantize.hpp"

using namespace latweyl;

namespace {

Symbol expr1(const std::string& a0, const std::string& a1 = "") {
  std::vector<std::string> terms{a0};
  if (!a1.empty()) terms.push_back(a1);
  return expression_symbol("e", 1, terms, OrderFunction::constant_one(), true);
}

std::vector<double> axis(double lo, double hi, int n) {
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = lo + (hi - lo) * i / (n - 1);
  return v;
}

std::vector<double> torus_axis(int M) {
  TorusGrid g(1, M);
  std::vector<double> v(M);
  for (int k = 0; k < M; ++k) v[k] = g.node(k);
  return v;
}

}  // namespace

TEST_CASE("free motion") {
  auto H = expr1("2*(1-cos(xi))");
  const double x0 = 0.3, xi0 = 1.1;
  auto tr = flow_step(H, Pt(&x0, 1), Pt(&xi0, 1), 0.01, 100);
  for (std::size_t n = 0; n < tr.times.size(); ++n) {
    CHECK(tr.xi[n][0] == doctest::Approx(xi0).epsilon(1e-14));
    CHECK(std::abs(tr.x[n][0] - (x0 + tr.times[n] * 2 * std::sin(xi0))) < 1e-12);
  }
  CHECK(tr.energy_drift < 1e-14);
}

TEST_CASE("harmonic orbit against the closed form") {
  auto H = expr1("(x^2+xi^2)/2");
  const double x0 = 1.0, xi0 = 0.5;
  auto err_at = [&](double dt) {
    const int steps = static_cast<int>(std::lround(kTwoPi / dt));
    auto tr = flow_step(H, Pt(&x0, 1), Pt(&xi0, 1), kTwoPi / steps, steps);
    double e = 0;
    for (std::size_t n = 0; n < tr.times.size(); ++n) {
      const double t = tr.times[n];
      e = std::max(e, std::abs(tr.x[n][0] - (x0 * std::cos(t) + xi0 * std::sin(t))));
      e = std::max(e, std::abs(tr.xi[n][0] - (xi0 * std::cos(t) - x0 * std::sin(t))));
    }
    return std::make_pair(e, tr);
  };
  auto [e1, tr] = err_at(1e-3);
  CHECK(tr.energy_drift <= 1e-8);
  CHECK(std::abs(tr.x.back()[0] - x0) < 1e-10);  // period 2 pi
  CHECK(e1 < 1e-10);
  const double a = err_at(0.1).first, b = err_at(0.05).first;
  CHECK(a / b > 12);
  CHECK(a / b < 20);
  CHECK_THROWS_AS(flow_step(H, Pt(&x0, 1), Pt(&xi0, 1), 1.5, 20), NumericalError);
}

TEST_CASE("variational data matches finite differences") {
  auto H = builtin_symbol("lattice_laplacian_plus_quadratic", {});
  const double x0 = 0.4, xi0 = 0.9, h = 1e-6;
  const auto c = shoot(H, Pt(&x0, 1), Pt(&xi0, 1), 0.3);
  const double xp = x0 + h, xm = x0 - h;
  const auto cp = shoot(H, Pt(&xp, 1), Pt(&xi0, 1), 0.3);
  const auto cm = shoot(H, Pt(&xm, 1), Pt(&xi0, 1), 0.3);
  CHECK(c.dx_dx0(0, 0) == doctest::Approx((cp.x[0] - cm.x[0]) / (2 * h)).epsilon(1e-7));
  CHECK(c.dxi_dx0(0, 0) == doctest::Approx((cp.xi[0] - cm.xi[0]) / (2 * h)).epsilon(1e-7));
}

TEST_CASE("Hamilton-Jacobi with x-independent H") {
  auto H = builtin_symbol("xi_only", {{"f", std::string("2*(1-cos(xi))")}});
  const auto xs = axis(-2, 2, 21), xis = torus_axis(16);
  const auto ps = solve_hamilton_jacobi(H, {0.0, 0.05, 0.1}, xs, xis);
  double worst = 0, t0 = 0;
  for (std::size_t ti = 0; ti < ps.times.size(); ++ti)
    for (std::size_t xf = 0; xf < xs.size(); ++xf)
      for (std::size_t q = 0; q < xis.size(); ++q) {
        const double want = xs[xf] * xis[q] - ps.times[ti] * 2 * (1 - std::cos(xis[q]));
        worst = std::max(worst, std::abs(ps.phi[ps.node(ti, xf, q)] - want));
        if (ti == 0) t0 = std::max(t0, std::abs(ps.periodic_part[ps.node(0, xf, q)]));
      }
  CHECK(worst <= 1e-8);
  CHECK(t0 == 0.0);
  CHECK(check_phase_periodicity(ps).max_violation <= 1e-10);
  CHECK(ps.horizon == 0.1);
}

TEST_CASE("Hamilton-Jacobi general fixture") {
  auto H = builtin_symbol("lattice_laplacian_plus_quadratic", {});
  const auto xs = axis(-2, 2, 81), xis = torus_axis(32);
  std::vector<double> ts;
  for (int k = 0; k <= 8; ++k) ts.push_back(0.0125 * k);
  const auto ps = solve_hamilton_jacobi(H, ts, xs, xis);
  CHECK(hj_residual(H, ps) <= 1e-5);
  CHECK(check_phase_periodicity(ps).max_violation <= 1e-5);
  CHECK(ps.max_gradx_periodic < kTwoPi);
  // grad_x phi from the characteristics agrees with differencing phi in x.
  const std::size_t xf = 40, q = 7, ti = 8;
  const double fd = (ps.phi[ps.node(ti, xf + 1, q)] - ps.phi[ps.node(ti, xf - 1, q)]) /
                    (xs[xf + 1] - xs[xf - 1]);
  CHECK(ps.gradx[ps.node(ti, xf, q)] == doctest::Approx(fd).epsilon(1e-3));

  CHECK_THROWS_AS(solve_hamilton_jacobi(H, {0.0, 0.5, 1.0, 1.5}, xs, xis), NumericalError);
  const auto cut = solve_hamilton_jacobi(H, {0.0, 0.5, 1.0, 1.5}, xs, xis,
                                         {.ghosts = false, .auto_shrink = true});
  CHECK(cut.requested_horizon == 1.5);
  CHECK(cut.horizon == 0.5);
  CHECK(cut.times.size() == 2);
  CHECK(cut.phi.size() == 2 * xs.size() * xis.size());
  CHECK(cut.max_gradx_periodic < kTwoPi);
  CHECK_THROWS_AS(solve_hamilton_jacobi(H, {-0.1}, xs, xis), ConfigError);
}

TEST_CASE("transport along characteristics") {
  const BumpFunction chi(0.0, 3.0, 0.5);
  auto c = [](Pt x, Pt xi) { return cplx(std::exp(-x[0] * x[0]) * (1 + 0.2 * std::cos(xi[0]))); };
  const auto xs = axis(-4, 4, 41), xis = torus_axis(8);

  // Pure advection by h'(xi) = 2 sin xi.
  auto H = builtin_symbol("xi_only", {{"f", std::string("2*(1-cos(xi))")}});
  const auto ps = solve_hamilton_jacobi(H, {0.0, 0.1, 0.2}, xs, xis);
  const auto mu = solve_transport_leading(H, ps, {chi, c});
  double worst = 0;
  for (std::size_t ti = 0; ti < ps.times.size(); ++ti)
    for (std::size_t xf = 0; xf < xs.size(); ++xf)
      for (std::size_t q = 0; q < xis.size(); ++q) {
        const double x0 = xs[xf] - ps.times[ti] * 2 * std::sin(xis[q]);
        const double y = 0.3, xi = xis[q], mid = 0.5 * (x0 + y);
        const cplx want = chi(x0) * chi(y) * c(Pt(&mid, 1), Pt(&xi, 1));
        worst = std::max(worst, std::abs(mu.mu0(ps.node(ti, xf, q), Pt(&y, 1), Pt(&xi, 1)) - want));
      }
  CHECK(worst < 1e-10);

  // F = 0: the amplitude does not move.
  auto Hx = builtin_symbol("x_only", {{"f", std::string("x^2")}});
  const auto px = solve_hamilton_jacobi(Hx, {0.0, 0.2}, xs, xis);
  const auto mx = solve_transport_leading(Hx, px, {chi, c});
  for (std::size_t xf = 0; xf < xs.size(); ++xf)
    CHECK(std::abs(mx.factor[px.node(1, xf, 3)] - mx.factor[px.node(0, xf, 3)]) < 1e-12);

  // Constant a_1 = 0.7 contributes exp(0.7 i t).
  auto a1 = expr1("0.7");
  const auto ma = solve_transport_leading(H, ps, {chi, c}, &a1);
  const std::size_t nd = ps.node(2, 20, 5);
  CHECK(std::abs(ma.factor[nd] - mu.factor[nd] * std::exp(cplx(0, 0.7 * 0.2))) < 1e-12);
}

TEST_CASE("parametrix assembly") {
  auto H = builtin_symbol("lattice_laplacian_plus_quadratic", {});
  const double eps = 0.1;
  const LatticeBox box(1, eps, 2.0);
  const TorusGrid grid(1, 32);
  std::vector<double> xs(box.per_axis());
  for (int i = 0; i < box.per_axis(); ++i) xs[i] = box.coord(i);
  const auto ps = solve_hamilton_jacobi(H, {0.0, 0.05}, xs, torus_axis(32));
  const BumpFunction chi(0.0, 1.8, 0.6);

  // t = 0 is chi Op_{1/2}(c) chi.
  auto cfun = [](Pt x, Pt xi) { return cplx(std::exp(-x[0] * x[0]) * (2 + std::cos(xi[0]))); };
  const auto mu = solve_transport_leading(H, ps, {chi, cfun});
  const Eigen::MatrixXcd U0 = build_parametrix(mu, ps, 0.0, box, eps, grid);
  auto csym = expr1("exp(-x^2)*(2+cos(xi))");
  Eigen::MatrixXcd op = build_operator(csym, 0.5, box, eps, grid).entries;
  Eigen::VectorXd cx(box.size());
  for (std::size_t i = 0; i < box.size(); ++i) cx[i] = chi(box.coord(static_cast<int>(i)));
  op = cx.asDiagonal() * op * cx.asDiagonal();
  CHECK((U0 - op).cwiseAbs().maxCoeff() < 1e-12);

  // xi-independent amplitude at t = 0 gives a diagonal.
  const auto m1 = solve_transport_leading(H, ps, {chi, [](Pt, Pt) { return cplx(1.0); }});
  const Eigen::MatrixXcd D = build_parametrix(m1, ps, 0.0, box, eps, grid);
  Eigen::MatrixXcd want = Eigen::MatrixXcd::Zero(box.size(), box.size());
  for (std::size_t i = 0; i < box.size(); ++i) want(i, i) = cx[i] * cx[i];
  CHECK((D - want).cwiseAbs().maxCoeff() < 1e-13);

  const auto m0 = solve_transport_leading(H, ps, {chi, [](Pt, Pt) { return cplx(0.0); }});
  CHECK(build_parametrix(m0, ps, 0.05, box, eps, grid).cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(build_parametrix(mu, ps, 0.03, box, eps, grid), ConfigError);
  CHECK_THROWS_AS(build_parametrix(mu, ps, 0.0, box, eps, TorusGrid(1, 16)), ConfigError);
}

TEST_CASE("parametrix error against the exact propagator") {
  auto H = builtin_symbol("lattice_laplacian_plus_quadratic", {});
  const BumpFunction f(0.0, 16.0);
  auto r = parametrix_error_sweep(H, f.as_function(), {0.0, 0.05}, {0.1, 0.05});
  REQUIRE(r.rows.size() == 4);
  CHECK(r.rows[2].t == 0.0);
  CHECK(r.rows[2].error <= 1e-3);  // t = 0 at eps = 0.05
  CHECK(r.rows[1].error / r.rows[3].error >= 1.7);
  for (const auto& row : r.rows) CHECK(row.norm <= 1 + r.norm_constant * row.eps + 1e-12);
  CHECK(r.norm_constant < 1.0);

  auto z = parametrix_error_sweep(H, ScalarFunction::zero(), {0.0, 0.05}, {0.1});
  for (const auto& row : z.rows) {
    CHECK(row.error == 0.0);
    CHECK(row.norm == 0.0);
  }
}
