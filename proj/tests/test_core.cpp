#include <cmath>
#include <vector>

#include "doctest.h"
#include "latweyl/core.hpp"
#include "latweyl/expr.hpp"
#include "latweyl/jet.hpp"

using namespace latweyl;

namespace {

std::vector<double> v1(double a) { return {a}; }

Symbol harmonic() { return builtin_symbol("lattice_laplacian_plus_quadratic", {}); }

// Term with value only, so every derivative goes through finite differences.
Symbol value_only(std::function<cplx(Pt, Pt)> f, int dim = 1) {
  SymbolTerm t;
  t.value = std::move(f);
  return Symbol("value_only", dim, {t}, OrderFunction::constant_one(), true);
}

}  // namespace

TEST_CASE("lattice box geometry") {
  LatticeBox b(1, 0.1, 3.0);
  CHECK(b.per_axis() == 61);
  CHECK(b.size() == 61);
  CHECK(b.point(0)[0] == doctest::Approx(-3.0));
  CHECK(b.point(30)[0] == 0.0);

  LatticeBox b2(1, 0.0125, 3.0);
  CHECK(b2.per_axis() == 2 * 240 + 1);

  LatticeBox b3(2, 0.25, 1.0);
  CHECK(b3.size() == 81);
  for (std::size_t i = 0; i < b3.size(); ++i) {
    const auto p = b3.point(i);
    CHECK(b3.index_of(p) == i);
    for (double c : p) {
      const double r = c / 0.25;
      CHECK(r == std::round(r));
      CHECK(std::abs(c) <= 1.0);
    }
  }
  CHECK_THROWS_AS(LatticeBox(1, 0.0, 1.0), ConfigError);
  CHECK_THROWS(b.index_of(v1(0.05)));
}

TEST_CASE("torus quadrature integrates exponentials exactly") {
  for (int M : {8, 17, 64}) {
    TorusGrid g(1, M);
    for (int k = -(M - 1); k < M; ++k) {
      cplx s = 0;
      for (int m = 0; m < M; ++m) s += std::polar(1.0, k * g.node(m));
      s *= g.weight();
      if (k == 0)
        CHECK(std::abs(s - kTwoPi) < 1e-12);
      else
        CHECK(std::abs(s) < 1e-12);
    }
  }
  // Shift invariance of the node set modulo 2 pi.
  TorusGrid g(1, 16);
  for (int m = 0; m < 16; ++m) {
    const double shifted = reduce_angle(g.node(m) + kTwoPi / 16);
    bool found = false;
    for (int q = 0; q < 16; ++q) found |= std::abs(reduce_angle(shifted - g.node(q))) < 1e-12;
    CHECK(found);
  }
  TorusGrid g2(2, 8);
  CHECK(g2.size() == 64);
  CHECK(g2.weight() == doctest::Approx(std::pow(kTwoPi / 8, 2)));
}

TEST_CASE("symbol evaluation") {
  Symbol one = value_only([](Pt, Pt) { return cplx(1.0); });
  CHECK(one.eval(v1(0.3), v1(1.0), 0.1) == cplx(1.0));

  Symbol h = harmonic();
  CHECK(h.eval(v1(1.0), v1(0.0), 0.1).real() == doctest::Approx(1.0));
  CHECK(h.eval(v1(0.0), v1(kPi), 0.1).real() == doctest::Approx(4.0));

  Symbol h1 = builtin_symbol("lattice_laplacian_plus_quadratic", {{"a1", std::string("1")}});
  CHECK(h1.eval(v1(0.0), v1(kPi), 0.1).real() == doctest::Approx(4.1));

  Symbol h2 = builtin_symbol("lattice_laplacian_plus_quadratic", {{"c", 1.0}, {"d", 2.0}});
  std::vector<double> z{0, 0}, pp{kPi, kPi};
  CHECK(h2.eval(z, pp, 0.1).real() == doctest::Approx(8.0));

  // Reduction of xi before dispatch: a_0 = xi evaluated at 3 pi/2 sees -pi/2.
  Symbol lin = builtin_symbol("xi_only", {{"f", std::string("xi")}});
  CHECK(lin.eval(v1(0), v1(1.5 * kPi), 0.1).real() == doctest::Approx(-0.5 * kPi));
  CHECK(lin.term(0, v1(0), v1(1.5 * kPi)).real() == doctest::Approx(1.5 * kPi));
}

TEST_CASE("evaluation is linear in the expansion") {
  Symbol a = builtin_symbol("expression", {{"a0", std::string("sin(x)*cos(xi)")},
                                           {"a1", std::string("x^2")}});
  Symbol b = builtin_symbol("expression", {{"a0", std::string("exp(-x^2)+sin(2*xi)")}});
  const cplx al(0.7, -0.2), be(-1.3, 0.4);
  Symbol c = linear_combination(a, al, b, be);
  for (double x : {-1.2, 0.0, 0.9})
    for (double xi : {-2.0, 0.3, 3.0}) {
      const cplx lhs = c.eval(v1(x), v1(xi), 0.07);
      const cplx rhs = al * a.eval(v1(x), v1(xi), 0.07) + be * b.eval(v1(x), v1(xi), 0.07);
      CHECK(std::abs(lhs - rhs) < 1e-14);
    }
}

TEST_CASE("periodicity check") {
  auto cosxi = builtin_symbol("xi_only", {{"f", std::string("cos(xi)")}});
  auto r1 = check_periodicity(cosxi, 100, 1e-12);
  CHECK(r1.pass);
  CHECK(r1.max_violation < 1e-12);

  auto xi = builtin_symbol("xi_only", {{"f", std::string("xi")}});
  auto r2 = check_periodicity(xi, 100, 1e-12);
  CHECK_FALSE(r2.pass);
  CHECK(r2.max_violation == doctest::Approx(kTwoPi));

  auto x2 = builtin_symbol("x_only", {{"f", std::string("x^2")}});
  auto r3 = check_periodicity(x2, 100, 1e-12);
  CHECK(r3.pass);
  CHECK(r3.max_violation == 0.0);
}

TEST_CASE("shifted ellipticity") {
  SamplingSpec g;
  auto x2 = builtin_symbol("x_only", {{"f", std::string("x^2")}});
  CHECK(check_elliptic_shifted(x2, g, {0.1}).inf_ratio >= 1.0);
  auto zero = builtin_symbol("x_only", {{"f", std::string("0")}});
  CHECK(check_elliptic_shifted(zero, g, {0.1}).inf_ratio == doctest::Approx(1.0));
  // Closed form: sqrt(a^2+1)/(1+x^2) >= sqrt(x^4+1)/(1+x^2), minimal 1/sqrt(2) at x = 1, xi = 0.
  const double r = check_elliptic_shifted(harmonic(), g, {0.1, 0.05}).inf_ratio;
  CHECK(r > 0.4);
  CHECK(r == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-3));
}

TEST_CASE("essential bound") {
  SamplingSpec g;
  auto r1 = check_ess_bound(harmonic(), Interval(0, 3), 2.0, g);
  CHECK(r1.inf_outside == doctest::Approx(4.0));
  CHECK(r1.pass);

  auto one = builtin_symbol("x_only", {{"f", std::string("1")}});
  auto r2 = check_ess_bound(one, Interval(0, 3), 1.0, g);
  CHECK(r2.inf_outside == doctest::Approx(1.0));
  CHECK_FALSE(r2.pass);

  auto x2 = builtin_symbol("x_only", {{"f", std::string("x^2")}});
  auto r3 = check_ess_bound(x2, Interval(0, 3), 1.5, g);
  CHECK(r3.inf_outside == doctest::Approx(2.25));
  CHECK_FALSE(r3.pass);
}

TEST_CASE("realness and tempering") {
  SamplingSpec g;
  CHECK(check_realness(harmonic(), g).pass);
  for (int k : {0, 1, 2}) {
    auto rep = check_tempering(OrderFunction::japanese_power(k), 2, 2000, 10.0, 3);
    CHECK(rep.pass);
  }
}

TEST_CASE("registry validation") {
  CHECK_THROWS_AS(builtin_symbol("nope", {}), ConfigError);
  CHECK_THROWS_AS(builtin_symbol("x_only", {}), ConfigError);
  CHECK_THROWS_AS(builtin_symbol("x_only", {{"f", std::string("xi")}}), ConfigError);
  CHECK_THROWS_AS(builtin_symbol("lattice_laplacian_plus_quadratic", {{"q", 1.0}}), ConfigError);
  CHECK_THROWS_AS(builtin_symbol("lattice_laplacian_plus_quadratic", {{"c", std::string("1")}}),
                  ConfigError);
  auto x2 = builtin_symbol("x_only", {{"f", std::string("x^2")}});
  const int one[1] = {1}, zero[1] = {0}, two[1] = {2};
  for (double x : {-1.0, 0.5})
    for (double xi : {-1.0, 2.0}) {
      CHECK(x2.derivative(0, v1(x), v1(xi), zero, one) == cplx(0.0));
      CHECK(x2.derivative(0, v1(x), v1(xi), one, one) == cplx(0.0));
      CHECK(x2.derivative(0, v1(x), v1(xi), two, zero).real() == doctest::Approx(2.0));
    }
}

TEST_CASE("analytic derivatives of builtins match closed forms") {
  auto dw = builtin_symbol("cosine_double_well", {{"c", 0.5}, {"w", 1.2}});
  // a_0 = 2(1-cos xi) + 0.5 (x^2 - 1.44)^2
  const double x = 0.7, xi = 0.4;
  const int z[1] = {0}, o[1] = {1}, t2[1] = {2}, t3[1] = {3}, t4[1] = {4}, t5[1] = {5};
  CHECK(dw.derivative(0, v1(x), v1(xi), o, z).real() ==
        doctest::Approx(0.5 * 2 * (x * x - 1.44) * 2 * x));
  CHECK(dw.derivative(0, v1(x), v1(xi), t2, z).real() == doctest::Approx(0.5 * (12 * x * x - 4 * 1.44)));
  CHECK(dw.derivative(0, v1(x), v1(xi), t3, z).real() == doctest::Approx(0.5 * 24 * x));
  CHECK(dw.derivative(0, v1(x), v1(xi), t4, z).real() == doctest::Approx(12.0));
  CHECK(dw.derivative(0, v1(x), v1(xi), t5, z).real() == 0.0);
  CHECK(dw.derivative(0, v1(x), v1(xi), z, o).real() == doctest::Approx(2 * std::sin(xi)));
  CHECK(dw.derivative(0, v1(x), v1(xi), z, t3).real() == doctest::Approx(-2 * std::sin(xi)));
  CHECK(dw.derivative(0, v1(x), v1(xi), o, o).real() == 0.0);

  auto d2 = builtin_symbol("cosine_double_well", {{"d", 2.0}});
  std::vector<double> p{0.3, -0.8}, q{0.1, 0.2};
  const int a11[2] = {1, 1}, z2[2] = {0, 0};
  // d^2/dx1 dx2 of (x1^2+x2^2-1)^2 = 8 x1 x2
  CHECK(d2.derivative(0, p, q, a11, z2).real() == doctest::Approx(8 * 0.3 * -0.8));
}

TEST_CASE("finite-difference fallback") {
  Symbol s = value_only([](Pt x, Pt xi) { return cplx(std::sin(x[0]) * std::cos(xi[0])); });
  const double x = 0.4, xi = -0.9;
  const int z[1] = {0}, o[1] = {1}, t2[1] = {2};
  CHECK(std::abs(s.derivative(0, v1(x), v1(xi), o, z) - std::cos(x) * std::cos(xi)) < 1e-10);
  CHECK(std::abs(s.derivative(0, v1(x), v1(xi), z, o) + std::sin(x) * std::sin(xi)) < 1e-10);
  CHECK(std::abs(s.derivative(0, v1(x), v1(xi), o, o) + std::cos(x) * std::sin(xi)) < 1e-7);
  CHECK(std::abs(s.derivative(0, v1(x), v1(xi), t2, z) + std::sin(x) * std::cos(xi)) < 1e-7);
  CHECK(std::abs(s.derivative(0, v1(x), v1(xi), t2, t2) - std::sin(x) * std::cos(xi)) < 1e-3);
}

TEST_CASE("expression parser and structural derivatives") {
  std::vector<std::string> vars{"x", "xi"};
  DiffExpr e(Expr::parse("2*(1-cos(xi)) + x^2 - 3*x/2 + exp(-x)*sqrt(2+sin(x))", vars), 2);
  const double pt[2] = {0.3, 1.1};
  const double x = 0.3, xi = 1.1;
  const double val = 2 * (1 - std::cos(xi)) + x * x - 1.5 * x + std::exp(-x) * std::sqrt(2 + std::sin(x));
  CHECK(e.eval(pt) == doctest::Approx(val));
  const int dxi[2] = {0, 2};
  CHECK(e.eval_derivative(pt, dxi) == doctest::Approx(2 * std::cos(xi)));
  // Compare a third x-derivative against a jet of the same function.
  JetD X = JetD::variable(3, x);
  JetD f = X * X - 1.5 * X + exp(-X) * sqrt(2.0 + sin(X));
  const int dx3[2] = {3, 0};
  CHECK(e.eval_derivative(pt, dx3) == doctest::Approx(f.derivative(3)));
  CHECK_THROWS(Expr::parse("2*(x", vars));
  CHECK_THROWS(Expr::parse("y+1", vars));
  CHECK(Expr::parse("pi", vars).eval(pt) == doctest::Approx(kPi));
  CHECK(Expr::parse("-x^2", vars).eval(pt) == doctest::Approx(-0.09));
}

TEST_CASE("jet arithmetic") {
  const double x0 = 0.35;
  JetD X = JetD::variable(6, x0);
  JetD e = exp(2.0 * X);
  for (int k = 0; k <= 6; ++k) CHECK(e.derivative(k) == doctest::Approx(std::pow(2.0, k) * std::exp(2 * x0)));
  JetD s = sin(X);
  CHECK(s.derivative(5) == doctest::Approx(std::cos(x0)));
  JetD q = 1.0 / (1.0 + X * X);
  // d/dx (1+x^2)^-1 = -2x/(1+x^2)^2
  CHECK(q.derivative(1) == doctest::Approx(-2 * x0 / std::pow(1 + x0 * x0, 2)));
  JetD l = log(X);
  CHECK(l.derivative(3) == doctest::Approx(2.0 / std::pow(x0, 3)));
  JetD p = pow(X, 3);
  CHECK(p.derivative(3) == doctest::Approx(6.0));
  CHECK(p.differentiated().value() == doctest::Approx(3 * x0 * x0));
}

TEST_CASE("interval") {
  CHECK_THROWS_AS(Interval(1.0, 1.0), ConfigError);
  Interval iv(0.5, 2.5);
  CHECK(iv.contains(0.5));
  CHECK(iv.contains(2.5));
  CHECK_FALSE(iv.contains(2.6));
}
