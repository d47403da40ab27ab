#include "latweyl/fixtures.hpp"

#include <cmath>

#include "latweyl/fit.hpp"
#include "latweyl/quantize.hpp"
#include "latweyl/rng.hpp"

namespace latweyl::fixtures {

namespace {

Symbol expr(const std::string& a0, int d = 1) {
  ParamMap p{{"a0", a0}};
  if (d != 1) p["d"] = static_cast<double>(d);
  return builtin_symbol("expression", p);
}

PoissonInput expr_input(BumpFunction b, const std::string& phase, double eps_coupling) {
  DiffExpr ph(Expr::parse(phase, {"x"}), 1);
  return {[b, eps_coupling](const JetD& x, double eps) {
            return b.jet(x) * (1.0 + eps_coupling * eps * x);
          },
          [ph](const JetD& x) { return expr_jet(ph, x); }, b.center() - b.halfwidth(),
          b.center() + b.halfwidth()};
}

}  // namespace

std::vector<TraceCase> trace_identity_cases() {
  return {
      {"gauss_cos", expr("exp(-x^2)*(2+cos(xi))"), 0.5, 0.1, 3.0, 64},
      {"lorentz_two_modes", expr("(3+cos(xi)+0.5*sin(2*xi))/(1+x^2)"), 0.0, 0.05, 3.0, 64},
      {"skew_mixed", expr("exp(-x^2/2)*(1+0.5*cos(3*xi))+0.2*x*exp(-x^2)*sin(xi)"), 0.3, 0.1,
       3.0, 64},
      {"laplacian_well", builtin_symbol("lattice_laplacian_plus_quadratic", {}), 1.0, 0.1, 2.0,
       64},
      {"laplacian_well_2d", builtin_symbol("lattice_laplacian_plus_quadratic", {{"d", 2.0}}), 0.5,
       0.2, 1.0, 8},
  };
}

std::vector<PoissonCase> poisson_cases() {
  return {
      {"zero_phase_bump", expr_input(BumpFunction(0.0, 1.0), "0", 0.0), 1, true},
      {"linear_phase_pi", expr_input(BumpFunction(0.0, 1.0), "3.141592653589793*x", 0.0), 1,
       false},
      {"curved_phase", expr_input(BumpFunction(0.2, 0.8), "2*x+0.5*sin(3*x)", 1.0), 1, false},
  };
}

std::vector<StatPhaseCase> stationary_phase_cases() {
  BumpFunction b(0.0, 1.0);
  StationaryPhaseInput hyp;
  hyp.u = [b](double t, double s) { return b(t) * b(s); };
  hyp.box[0] = hyp.box[2] = -1;
  hyp.box[1] = hyp.box[3] = 1;
  hyp.phi = phase_from_expr(Expr::parse("t*s", {"t", "s"}));

  StationaryPhaseInput g;
  g.u = [](double t, double s) { return std::exp(-0.5 * (t * t + s * s)); };
  g.box[0] = g.box[2] = -8.5;
  g.box[1] = g.box[3] = 8.5;
  g.phi = phase_from_expr(Expr::parse("(t^2+s^2)/2", {"t", "s"}));
  g.guess[0] = 0.3;
  return {{"hyperbolic_ts", hyp, false}, {"gaussian_signature_2", g, true}};
}

cplx gaussian_fresnel(double eps) { return kTwoPi * eps / cplx(eps, -1.0); }

Eigen::MatrixXcd hermitian_with_spectrum(const std::vector<double>& ev, std::uint64_t seed) {
  const auto n = static_cast<Eigen::Index>(ev.size());
  Eigen::MatrixXcd R(n, n);
  std::uint64_t c = 0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j, c += 2)
      R(i, j) = cplx(counter_uniform(seed, 1, c) - 0.5, counter_uniform(seed, 2, c + 1) - 0.5);
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(R);
  const Eigen::MatrixXcd Q = qr.householderQ();
  Eigen::VectorXcd d(n);
  for (Eigen::Index i = 0; i < n; ++i) d[i] = ev[i];
  return Q * d.asDiagonal() * Q.adjoint();
}

BumpFunction hs_function() { return BumpFunction(0.0, 0.6, 0.3); }

std::vector<HSCase> hs_cases() {
  std::vector<HSCase> out;
  Eigen::MatrixXcd A(2, 2);
  A << 0, 0, 0, 1;
  out.push_back({"diag_0_1", A});
  for (int n : {10, 100}) {
    std::vector<double> ev;
    for (int k = 0; static_cast<int>(ev.size()) < n; ++k) {
      const double l = -1.5 + 3.0 * k / (1.3 * n) + (k % 3 == 0 ? 0.004 : 0.0);
      if (std::abs(std::abs(l) - 0.6) >= 0.1) ev.push_back(l);
    }
    out.push_back({"random_hermitian_" + std::to_string(n), hermitian_with_spectrum(ev, 11 + n)});
  }
  return out;
}

std::vector<CalculusRow> calculus_suite() {
  std::vector<CalculusRow> rows;
  const TorusGrid g(1, 32);
  const std::vector<double> eps{0.1, 0.05, 0.025};

  auto a = expr("exp(-x^2)*cos(xi)");
  auto b = expr("exp(-x^2/2)*sin(xi)");
  for (int N : {1, 2}) {
    const auto r = verify_composition(a, b, 0.5, N, 6.0, eps, g);
    rows.push_back({"composition_slope", N, r.fitted_order, N - 0.25, r.fitted_order >= N - 0.25});
  }

  auto s = expr("exp(-x^2)*(1+cos(xi))+0.5*exp(-(x-0.5)^2)*sin(2*xi)");
  for (int N : {1, 2}) {
    const auto at = change_quantization(s, 0.5, 0.0, N);
    std::vector<double> err;
    for (double e : eps) {
      const LatticeBox box(1, e, 5.0);
      err.push_back(spectral_norm(build_operator(s, 0.5, box, e, g).entries -
                                  build_operator(at, 0.0, box, e, g).entries));
    }
    const double slope = fit_loglog(eps, err).slope;
    rows.push_back({"change_of_quantization_slope", N, slope, N - 0.25, slope >= N - 0.25});
  }

  auto h = expr("exp(-x^2)*(1+cos(xi))+x*sin(2*xi)+1/(2+cos(xi+x))");
  double worst = 0.0;
  for (double e : eps) {
    const auto A = build_operator(h, 0.5, LatticeBox(1, e, 2.0), e, TorusGrid(1, 64));
    worst = std::max(worst, A.hermitian_defect / A.max_abs_entry());
  }
  rows.push_back({"hermitian_defect", 0, worst, 1e-10, worst <= 1e-10});

  auto xo = builtin_symbol("x_only", {{"f", std::string("exp(-x^2)*(1+x^3)")}});
  double diff = 0.0;
  for (double e : eps) {
    const LatticeBox box(1, e, 2.0);
    const auto A0 = build_operator(xo, 0.0, box, e, g).entries;
    for (double t : {0.3, 0.5, 1.0})
      diff = std::max(diff, (build_operator(xo, t, box, e, g).entries - A0).cwiseAbs().maxCoeff());
  }
  // The t = 0 fast path and the per-pair path agree up to summation round-off.
  rows.push_back({"x_only_quantization_independence", 0, diff, 1e-13, diff <= 1e-13});
  return rows;
}

}  // namespace latweyl::fixtures
