// Prints one PASS/FAIL line per acceptance criterion with the measured values and runtime.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "latweyl/dynamics.hpp"
#include "latweyl/fit.hpp"
#include "latweyl/fixtures.hpp"
#include "latweyl/quantize.hpp"
#include "latweyl/spectral.hpp"
#include "latweyl/weyl.hpp"

using namespace latweyl;

namespace {

struct Verdict {
  bool pass;
  std::string detail;
};

std::string fmt(const char* f, auto... a) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, a...);
  return buf;
}

Symbol harmonic(const std::string& a1 = "") {
  ParamMap p;
  if (!a1.empty()) p["a1"] = a1;
  return builtin_symbol("lattice_laplacian_plus_quadratic", p);
}

const std::vector<double> kSweep{0.1, 0.05, 0.025, 0.0125};

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = lo + (hi - lo) * i / (n - 1);
  return v;
}

Verdict weyl_law() {
  const auto r = weyl_experiment(harmonic(), Interval(0.5, 2.5), kSweep);
  bool sandwich = true;
  std::string counts;
  for (const auto& row : r.rows) {
    sandwich = sandwich && row.sandwich;
    counts += fmt("%s%zu", counts.empty() ? "" : "/", row.N);
  }
  const double last = std::abs(r.rows.back().scaled - r.volume.value) / r.volume.value;
  return {r.slope >= 0.8 && sandwich,
          fmt("slope %.3f (>= 0.8), sandwich %s, N = %s, V* = %.7f, |2 pi eps N - V*|/V* = %.4f "
              "at eps 0.0125",
              r.slope, sandwich ? "holds" : "violated", counts.c_str(), r.volume.value, last)};
}

Verdict trace_identity() {
  double worst = 0;
  for (const auto& tc : fixtures::trace_identity_cases()) {
    const int d = tc.symbol.dim();
    const auto r = trace_identity_check(tc.symbol, tc.t, LatticeBox(d, tc.eps, tc.L), tc.eps,
                                        TorusGrid(d, tc.M));
    worst = std::max(worst, r.abs_err / std::abs(r.lhs));
  }
  return {worst <= 1e-10, fmt("max relative error %.2e over 5 fixtures (<= 1e-10)", worst)};
}

Verdict trace_asymptotics() {
  const BumpFunction f(1.5, 1.0, 0.3);
  const auto r0 = trace_f_comparison(harmonic(), f.as_function(), kSweep, {});
  const auto r1 = trace_f_comparison(harmonic("cos(xi)"), f.as_function(), kSweep, {});
  return {r0.slope >= 1.6 && r1.slope >= 1.6,
          fmt("slope a1=0: %.3f, a1=cos(xi): %.3f (>= 1.6; c1 term %.4f)", r0.slope, r1.slope,
              r1.int_f1)};
}

Verdict helffer_sjostrand() {
  const auto f = fixtures::hs_function();
  const auto aae = build_aae(f.as_function(), 5, 0.2, 0.0025);
  double worst = 0;
  std::string per;
  for (const auto& hc : fixtures::hs_cases()) {
    const auto exact =
        apply_function_exact(eigendecompose(hc.A, hc.name), [&](double l) { return cplx(f(l)); });
    const double err = (hs_apply(hc.A, aae) - exact).norm();
    worst = std::max(worst, err);
    per += fmt("%sdim %ld: %.1e", per.empty() ? "" : ", ", static_cast<long>(hc.A.rows()), err);
  }
  return {worst <= 1e-6, fmt("Frobenius %s (<= 1e-6; N=5, sigma 0.2, step 0.0025)", per.c_str())};
}

Verdict poisson() {
  const std::vector<double> eps{0.1, 0.05, 0.025};
  bool within = true;
  double ratio = 0, slope = NAN;
  for (const auto& pc : fixtures::poisson_cases()) {
    std::vector<double> rem;
    for (double e : eps) {
      const auto r = poisson_compare(pc.input, e, pc.k);
      within = within && r.pass;
      if (r.bound > 0) ratio = std::max(ratio, r.remainder / r.bound);
      rem.push_back(r.remainder);
    }
    if (pc.zero_phase) slope = fit_loglog(eps, rem).slope;
  }
  return {within && slope >= 4,
          fmt("remainder <= bound on 3 fixtures x 3 eps: %s (max remainder/bound %.2e); "
              "zero-phase slope %.2f (>= 4)",
              within ? "yes" : "no", ratio, slope)};
}

Verdict stationary_phase() {
  bool ok = true;
  std::string d;
  for (const auto& sc : fixtures::stationary_phase_cases()) {
    if (sc.gaussian) {
      const auto r = stationary_phase_check(sc.input, {0.01});
      const double err = std::abs(r.rows[0].integral - fixtures::gaussian_fresnel(0.01));
      ok = ok && err <= 1e-6;
      d += fmt(", Fresnel error %.1e at eps 0.01 (<= 1e-6)", err);
    } else {
      const auto r = stationary_phase_check(sc.input, kSweep);
      const double a = std::abs(r.A - kTwoPi);
      ok = ok && a <= 1e-12 && r.slope >= 1.8;
      d = fmt("|A - 2 pi| %.1e, slope %.3f (>= 1.8)", a, r.slope) + d;
    }
  }
  return {ok, d};
}

Verdict hamilton_jacobi() {
  const auto xs = linspace(-2, 2, 81);
  std::vector<double> xis;
  const TorusGrid tg(1, 32);
  for (int q = 0; q < 32; ++q) xis.push_back(tg.node(q));
  std::vector<double> ts;
  for (int k = 0; k <= 8; ++k) ts.push_back(0.0125 * k);

  const auto Hx = builtin_symbol("xi_only", {{"f", std::string("2*(1-cos(xi))")}});
  const auto pe = solve_hamilton_jacobi(Hx, ts, xs, xis);
  double exact = 0;
  for (std::size_t ti = 0; ti < ts.size(); ++ti)
    for (std::size_t i = 0; i < xs.size(); ++i)
      for (std::size_t q = 0; q < xis.size(); ++q)
        exact = std::max(exact, std::abs(pe.phi[pe.node(ti, i, q)] -
                                         (xs[i] * xis[q] - ts[ti] * 2 * (1 - std::cos(xis[q])))));

  const auto H = harmonic();
  const auto ps = solve_hamilton_jacobi(H, ts, xs, xis);
  const double res = hj_residual(H, ps), per = check_phase_periodicity(ps).max_violation;
  return {exact <= 1e-8 && res <= 1e-5 && per <= 1e-5,
          fmt("x-independent max error %.1e (<= 1e-8); T=0.1 residual %.1e, periodicity %.1e "
              "(<= 1e-5)",
              exact, res, per)};
}

Verdict parametrix() {
  const BumpFunction f(0.0, 16.0, 0.0);
  const auto r = parametrix_error_sweep(harmonic(), f.as_function(),
                                        {0.0, 0.0125, 0.025, 0.0375, 0.05}, {0.1, 0.05, 0.025});
  double t0 = NAN;
  for (const auto& row : r.rows)
    if (row.t == 0.0 && row.eps == 0.05) t0 = row.error;
  return {r.slope >= 0.8 && t0 <= 1e-3,
          fmt("sup-error slope %.3f (>= 0.8), sup errors %.2e/%.2e/%.2e; t=0 error %.1e at eps "
              "0.05 (<= 1e-3)",
              r.slope, r.sup_error[0], r.sup_error[1], r.sup_error[2], t0)};
}

Verdict dos() {
  const BumpFunction f(1.5, 1.0, 0.3);
  const auto r = dos_vs_liouville_sweep(harmonic(), f.as_function(), SmoothingKernel(0.5),
                                        linspace(1.0, 2.0, 21), kSweep);
  double at = NAN;
  std::string devs;
  for (const auto& row : r.rows) {
    if (row.eps == 0.025) at = row.deviation;
    devs += fmt("%s%.3f", devs.empty() ? "" : "/", row.deviation);
  }
  return {r.slope >= 0.8 && at <= 0.15,
          fmt("slope %.3f (>= 0.8), deviations %s, %.3f at eps 0.025 (<= 0.15)", r.slope,
              devs.c_str(), at)};
}

Verdict clustering() {
  std::size_t worst = 0;
  std::string counts;
  for (double l0 : {1.0, 1.5, 2.0}) {
    const auto r = cluster_count_sweep(harmonic(), l0, kSweep, 1.0, 3.0, 64);
    worst = std::max(worst, r.max_count);
    for (auto c : r.counts) counts += fmt("%s%zu", counts.empty() ? "" : "/", c);
  }
  return {worst <= 4, fmt("max count %zu in [l0 +- eps/2], l0 in {1, 1.5, 2} (<= 4); counts %s",
                          worst, counts.c_str())};
}

Verdict calculus() {
  bool ok = true;
  std::string d;
  for (const auto& r : fixtures::calculus_suite()) {
    ok = ok && r.pass;
    d += fmt("%s%s%s %.3g", d.empty() ? "" : ", ", r.check.c_str(),
             r.order ? fmt(" N=%d", r.order).c_str() : "", r.value);
  }
  return {ok, d};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    double budget_s;
    std::function<Verdict()> run;
  };
  const std::vector<Criterion> all{
      {"sharp Weyl law", 120, weyl_law},
      {"trace identity", 10, trace_identity},
      {"trace asymptotics", 60, trace_asymptotics},
      {"Helffer-Sjostrand", 30, helffer_sjostrand},
      {"Poisson summation", 10, poisson},
      {"stationary phase", 10, stationary_phase},
      {"Hamilton-Jacobi", 60, hamilton_jacobi},
      {"parametrix", 180, parametrix},
      {"DOS vs Liouville", 120, dos},
      {"no clustering", 60, clustering},
      {"calculus suite", 120, calculus},
  };
  int failed = 0, k = 0;
  for (const auto& c : all) {
    ++k;
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {false, std::string("aborted: ") + e.what()};
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = s <= c.budget_s;
    const bool pass = v.pass && in_time;
    failed += !pass;
    std::printf("%s %2d %s: %s; %.1f s (budget %.0f s%s)\n", pass ? "PASS" : "FAIL", k, c.name,
                v.detail.c_str(), s, c.budget_s, in_time ? "" : ", exceeded");
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria pass\n", static_cast<int>(all.size()) - failed, all.size());
  return failed ? 1 : 0;
}
