#include "latweyl/semiclassics.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <boost/math/quadrature/gauss.hpp>
#include <cmath>
#include <limits>

#include "latweyl/fit.hpp"
#include "latweyl/quantize.hpp"

namespace latweyl {

namespace {

using boost::math::quadrature::gauss;

// Composite 32-point Gauss-Legendre on [a,b]. Adaptive rules stall on the flat
// exp(-1/(1-u^2)) edges of the bumps, fixed panels do not.
template <class F>
auto gl(F f, double a, double b, int panels) -> decltype(f(a)) {
  using R = decltype(f(a));
  R total{};
  if (!(b > a)) return total;
  const auto& xg = gauss<double, 32>::abscissa();
  const auto& wg = gauss<double, 32>::weights();
  const double h = (b - a) / panels;
  for (int p = 0; p < panels; ++p) {
    const double m = a + (p + 0.5) * h, r = 0.5 * h;
    R s{};
    for (std::size_t q = 0; q < xg.size(); ++q) s += wg[q] * (f(m + r * xg[q]) + f(m - r * xg[q]));
    total += r * s;
  }
  return total;
}

// Panels so that each holds at most ~3 oscillations of frequency omega.
int panels_for(double width, double omega, int min_panels) {
  return std::max(min_panels, static_cast<int>(std::ceil(width * omega / 20.0)));
}

double factorial(int k) {
  double f = 1.0;
  for (int i = 2; i <= k; ++i) f *= i;
  return f;
}

}  // namespace

JetD smooth_step(const JetD& s) {
  const int n = s.order();
  if (s[0] <= 1e-3) return JetD(n, 0.0);  // exp(-1/s) and all its derivatives underflow
  if (s[0] >= 1 - 1e-3) return JetD(n, 1.0);
  const JetD e1 = exp(-1.0 / s);
  const JetD e2 = exp(-1.0 / (1.0 - s));
  return e1 / (e1 + e2);
}

BumpFunction::BumpFunction(double center, double halfwidth, double plateau)
    : c_(center), h_(halfwidth), p_(plateau) {
  if (!(halfwidth > 0)) throw ConfigError("bump: halfwidth must be positive");
  if (!(plateau >= 0 && plateau < 1)) throw ConfigError("bump: plateau must lie in [0,1)");
}

JetD BumpFunction::jet(const JetD& x) const {
  const int n = x.order();
  const JetD u = (x - c_) * (1.0 / h_);
  if (std::abs(u[0]) >= 1) return JetD(n, 0.0);
  if (p_ == 0.0) {
    const JetD q = 1.0 - u * u;
    if (q[0] <= 1e-3) return JetD(n, 0.0);
    return exp(1.0 - 1.0 / q);
  }
  if (std::abs(u[0]) <= p_) return JetD(n, 1.0);
  const JetD v = u[0] > 0 ? u : -u;
  return smooth_step((1.0 - v) * (1.0 / (1 - p_)));
}

double BumpFunction::operator()(double x) const { return jet(JetD(0, x)).value(); }

double BumpFunction::derivative(int k, double x) const {
  return jet(JetD::variable(k, x)).derivative(k);
}

ScalarFunction BumpFunction::as_function() const {
  ScalarFunction f;
  const BumpFunction b = *this;
  f.value = [b](double x) { return b(x); };
  f.derivative = [b](int k, double x) { return b.derivative(k, x); };
  f.support_lo = c_ - h_;
  f.support_hi = c_ + h_;
  f.description = "bump(c=" + std::to_string(c_) + ",h=" + std::to_string(h_) +
                  ",p=" + std::to_string(p_) + ")";
  return f;
}

SmoothingKernel::SmoothingKernel(double support_halfwidth)
    : T_(support_halfwidth), g_(0.0, 0.5 * support_halfwidth, 0.0) {
  if (!(support_halfwidth > 0)) throw ConfigError("smoothing kernel: support must be positive");
  norm_ = gl([&](double s) { return g_(s) * g_(s); }, -0.5 * T_, 0.5 * T_, 32);
}

double SmoothingKernel::operator()(double t) const {
  const double a = std::abs(t);
  if (a >= T_) return 0.0;
  if (a == 0.0) return 1.0;
  return gl([&](double s) { return g_(s) * g_(s - a); }, a - 0.5 * T_, 0.5 * T_, 32) / norm_;
}

double SmoothingKernel::fourier_unit(double lambda) const {
  const double G = gl([&](double s) { return g_(s) * std::cos(s * lambda); }, -0.5 * T_,
                      0.5 * T_, panels_for(T_, std::abs(lambda), 32));
  return G * G / (std::sqrt(kTwoPi) * norm_);
}

cplx SmoothingKernel::fourier_unit_direct(double lambda) const {
  // psi is even, so only the cosine part survives.
  const double re = gl([&](double t) { return std::cos(t * lambda) * (*this)(t); }, -T_, T_,
                       panels_for(2 * T_, std::abs(lambda), 16));
  return {re / std::sqrt(kTwoPi), 0.0};
}

cplx scaled_fourier(const SmoothingKernel& psi, double lambda, double eps) {
  if (!(eps > 0)) throw std::invalid_argument("scaled_fourier: eps must be positive");
  return {psi.fourier_unit(lambda / eps), 0.0};
}

AlmostAnalyticExtension::AlmostAnalyticExtension(ScalarFunction f, int order, double sigma,
                                                 AaeGrid grid)
    : f_(std::move(f)), N_(order), sigma_(sigma), grid_(grid), chi_(0.0, 1.0, 0.5) {
  if (order < 0) throw ConfigError("aae: order must be nonnegative");
  if (!(sigma > 0)) throw ConfigError("aae: cutoff width must be positive");
  if (!f_.derivative) throw ConfigError("aae: derivative callbacks required");
  C_N_ = estimate_constant(grid_.step);
}

cplx AlmostAnalyticExtension::value(double x, double y) const {
  const double c = chi_(y / sigma_);
  if (c == 0.0) return 0.0;
  cplx s = 0.0, p = 1.0;
  const cplx iy(0.0, y);
  for (int k = 0; k <= N_; ++k) {
    s += f_.derivative(k, x) * p;
    p *= iy / static_cast<double>(k + 1);
  }
  return c * s;
}

cplx AlmostAnalyticExtension::dbar(double x, double y) const {
  const double c = chi_(y / sigma_);
  const double dc = chi_.derivative(1, y / sigma_);
  if (c == 0.0 && dc == 0.0) return 0.0;
  const cplx iy(0.0, y);
  cplx taylor = 0.0, p = 1.0;
  for (int k = 0; k <= N_; ++k) {
    taylor += f_.derivative(k, x) * p;
    if (k < N_) p *= iy / static_cast<double>(k + 1);
  }
  // p now holds (iy)^N / N!.
  return 0.5 * (c * f_.derivative(N_ + 1, x) * p + cplx(0.0, dc / sigma_) * taylor);
}

double AlmostAnalyticExtension::estimate_constant(double step) const {
  const int nx = std::max(1, static_cast<int>(std::ceil((grid_.x_hi - grid_.x_lo) / step)));
  const int ny = std::max(1, static_cast<int>(std::ceil((grid_.y_hi - grid_.y_lo) / step)));
  const double hx = (grid_.x_hi - grid_.x_lo) / nx, hy = (grid_.y_hi - grid_.y_lo) / ny;
  double C = 0.0;
  for (int i = 0; i < nx; ++i) {
    const double x = grid_.x_lo + (i + 0.5) * hx;
    for (int j = 0; j < ny; ++j) {
      const double y = grid_.y_lo + (j + 0.5) * hy;
      if (y == 0.0) continue;
      C = std::max(C, std::abs(dbar(x, y)) / std::pow(std::abs(y), N_));
    }
  }
  return C;
}

AlmostAnalyticExtension build_aae(const ScalarFunction& f, int order, double sigma,
                                  double step) {
  if (!f.compact()) throw ConfigError("aae: f must have compact support");
  const double width = f.support_hi - f.support_lo;
  if (sigma <= 0) sigma = 0.5 * width;
  if (width <= 0) sigma = 1.0;  // f == 0; any positive width works
  AaeGrid g{f.support_lo, f.support_hi, -sigma, sigma, step};
  return AlmostAnalyticExtension(f, order, sigma, g);
}

Eigen::MatrixXcd hs_apply(const Eigen::MatrixXcd& A, const AlmostAnalyticExtension& aae) {
  const Eigen::Index n = A.rows();
  if (A.cols() != n) throw std::invalid_argument("hs_apply: matrix not square");
  if (n == 0) return A;
  if (hermitian_defect(A) > 1e-8 * std::max(1.0, A.cwiseAbs().maxCoeff()))
    throw NumericalError("hs_apply: matrix is not Hermitian");

  Eigen::VectorXd diag(n), sub(std::max<Eigen::Index>(n - 1, 0));
  Eigen::MatrixXcd Q;
  if (n == 1) {
    diag[0] = A(0, 0).real();
    Q = Eigen::MatrixXcd::Identity(1, 1);
  } else {
    Eigen::Tridiagonalization<Eigen::MatrixXcd> tri(A);
    diag = tri.diagonal();
    sub = tri.subDiagonal();
    Q = tri.matrixQ();
  }

  const auto& g = aae.grid();
  const int N = aae.order();
  const int nx = std::max(1, static_cast<int>(std::ceil((g.x_hi - g.x_lo) / g.step)));
  int ny = std::max(2, static_cast<int>(std::ceil((g.y_hi - g.y_lo) / g.step)));
  ny += ny % 2;  // keeps cell centres off the real axis for symmetric ranges
  const double hx = (g.x_hi - g.x_lo) / nx, hy = (g.y_hi - g.y_lo) / ny;

  // Derivatives of f per x column, shared by every y.
  std::vector<std::vector<double>> fk(nx, std::vector<double>(N + 2));
  std::vector<bool> live(nx, false);
  for (int i = 0; i < nx; ++i) {
    const double x = g.x_lo + (i + 0.5) * hx;
    for (int k = 0; k <= N + 1; ++k) {
      fk[i][k] = aae.function().derivative(k, x);
      if (fk[i][k] != 0.0) live[i] = true;
    }
  }
  const BumpFunction chi(0.0, 1.0, 0.5);
  const double sigma = aae.sigma();
  auto dbar_at = [&](int i, double y) {
    const double c = chi(y / sigma), dc = chi.derivative(1, y / sigma);
    const cplx iy(0.0, y);
    cplx taylor = 0.0, p = 1.0;
    for (int k = 0; k <= N; ++k) {
      taylor += fk[i][k] * p;
      if (k < N) p *= iy / static_cast<double>(k + 1);
    }
    return 0.5 * (c * fk[i][N + 1] * p + cplx(0.0, dc / sigma) * taylor);
  };

  // Rows are processed in fixed blocks with one buffer each, then added in row order,
  // so the result does not depend on the thread count.
  constexpr int kBlock = 8;
  Eigen::MatrixXcd S = Eigen::MatrixXcd::Zero(n, n);
  std::vector<Eigen::MatrixXcd> buf(kBlock, Eigen::MatrixXcd::Zero(n, n));
  for (int j0 = 0; j0 < ny; j0 += kBlock) {
    const int jn = std::min(kBlock, ny - j0);
#pragma omp parallel for schedule(static)
    for (int b = 0; b < jn; ++b) {
      Eigen::MatrixXcd& acc = buf[b];
      acc.setZero();
      const double y = g.y_lo + (j0 + b + 0.5) * hy;
      std::vector<cplx> delta(n);
      Eigen::MatrixXcd G(n, n);
      for (int i = 0; i < nx; ++i) {
        if (!live[i]) continue;
        const cplx w = dbar_at(i, y);
        if (w == 0.0) continue;
        const cplx z(g.x_lo + (i + 0.5) * hx, y);
        // Pivots of (z - T); nonzero because Im z != 0 and T is Hermitian.
        delta[0] = z - diag[0];
        for (Eigen::Index k = 1; k < n; ++k)
          delta[k] = z - diag[k] - sub[k - 1] * sub[k - 1] / delta[k - 1];
        // Backward pivots give the diagonal of the inverse.
        cplx eb = z - diag[n - 1];
        G(n - 1, n - 1) = 1.0 / delta[n - 1];
        for (Eigen::Index k = n - 2; k >= 0; --k) {
          eb = z - diag[k] - sub[k] * sub[k] / eb;
          G(k, k) = 1.0 / (delta[k] + eb - (z - diag[k]));
        }
        // Off-diagonal entries by the LU back-substitution recurrence (off-diagonal of z-T is -sub).
        for (Eigen::Index c = 1; c < n; ++c)
          for (Eigen::Index r = c - 1; r >= 0; --r) {
            G(r, c) = sub[r] / delta[r] * G(r + 1, c);
            G(c, r) = G(r, c);
          }
        acc.noalias() += w * G;
      }
    }
    for (int b = 0; b < jn; ++b) S += buf[b];
  }
  S *= -hx * hy / kPi;
  return Q * S * Q.adjoint();
}

JetD expr_jet(const DiffExpr& e, const JetD& x) {
  const int n = x.order();
  // Only an independent variable jet is supported: x = x0 + h.
  JetD r(n);
  const double x0 = x[0];
  for (int k = 0; k <= n; ++k) {
    const int cnt[1] = {k};
    r[k] = e.eval_derivative(std::span<const double>(&x0, 1), cnt) / factorial(k);
  }
  return r;
}

namespace {

// (W^k a)(x, xi) for d = 1 via jets of order 2k.
cplx apply_W(const PoissonInput& in, double x, double xi, double eps, int k) {
  const JetD X = JetD::variable(2 * k + 2, x);
  const JetD ph = in.phase(X);
  const JetD d1 = ph.differentiated();
  const JetD d2 = d1.differentiated();
  const JetC w = to_complex(d2) * cplx(0.0, eps) - to_complex((d1 - xi) * (d1 - xi));
  JetC b = to_complex(in.amplitude(JetD::variable(2 * k, x), eps));
  for (int r = 0; r < k; ++r) b = (b / w).differentiated().differentiated();
  return b[0];
}

}  // namespace

PoissonReport poisson_compare(const PoissonInput& in, double eps, int k, int n_max) {
  if (!(eps > 0)) throw std::invalid_argument("poisson_compare: eps must be positive");
  if (k < 1) throw std::invalid_argument("poisson_compare: k >= d = 1 required");
  if (!(in.k_hi > in.k_lo)) throw ConfigError("poisson_compare: empty support interval");
  PoissonReport rep{};
  // (PoisAppCond) on K, by dense sampling.
  for (int s = 0; s <= 4000; ++s) {
    const double x = in.k_lo + (in.k_hi - in.k_lo) * s / 4000.0;
    rep.max_phase_slope =
        std::max(rep.max_phase_slope, std::abs(in.phase(JetD::variable(1, x))[1]));
  }
  if (rep.max_phase_slope >= kTwoPi)
    throw HypothesisError("poisson_compare: |phi'| reaches 2 pi on the support");

  auto amp = [&](double x) { return in.amplitude(JetD(0, x), eps)[0]; };
  auto ph = [&](double x) { return in.phase(JetD(0, x))[0]; };

  const long lo = static_cast<long>(std::ceil(in.k_lo / eps - 1e-9));
  const long hi = static_cast<long>(std::floor(in.k_hi / eps + 1e-9));
  cplx sum = 0.0;
  for (long j = lo; j <= hi; ++j) {
    const double x = eps * static_cast<double>(j);
    sum += std::exp(cplx(0.0, ph(x) / eps)) * amp(x);
  }
  rep.sum = eps * sum;
  const int np = panels_for(in.k_hi - in.k_lo, rep.max_phase_slope / eps, 64);
  rep.integral = gl([&](double x) { return std::exp(cplx(0.0, ph(x) / eps)) * amp(x); }, in.k_lo,
                    in.k_hi, np);
  rep.remainder = std::abs(rep.sum - rep.integral);

  double bound = 0.0, last = 0.0;
  for (int n = 1; n <= n_max; ++n) {
    double term = 0.0;
    for (int sgn : {-1, 1}) {
      const double xi = kTwoPi * n * sgn;
      term += gl([&](double x) { return std::abs(apply_W(in, x, xi, eps, k)); }, in.k_lo,
                 in.k_hi, 64);
    }
    bound += term;
    last = term;
  }
  const double e2k = std::pow(eps, 2 * k);
  rep.bound = e2k * bound;
  double geo = 0.0;
  for (int m = n_max + 1; m < n_max + 100000; ++m) geo += std::pow(double(n_max) / m, 2 * k);
  rep.tail_estimate = e2k * last * geo;
  rep.pass = rep.remainder <= rep.bound + rep.tail_estimate + 1e-13;
  return rep;
}

GaussianPoissonReport gaussian_poisson_check(double a) {
  if (!(a > 0)) throw std::invalid_argument("gaussian_poisson_check: a > 0 required");
  auto sum_sym = [](double step) {
    double s = 1.0;
    for (int n = 1;; ++n) {
      const double v = std::exp(-0.5 * (step * n) * (step * n));
      if (v < 1e-300) break;
      s += 2 * v;
    }
    return s;
  };
  const double lhs = sum_sym(a);
  const double rhs = std::sqrt(kTwoPi) / a * sum_sym(kTwoPi / a);
  return {lhs, rhs, std::abs(lhs - rhs)};
}

Phase2D phase_from_expr(const Expr& e) {
  DiffExpr de(e, 2);
  Phase2D p;
  p.value = [de](double t, double s) {
    const double v[2] = {t, s};
    return de.eval(v);
  };
  p.gradient = [de](double t, double s, double* g) {
    const double v[2] = {t, s};
    const int c0[2] = {1, 0}, c1[2] = {0, 1};
    g[0] = de.eval_derivative(v, c0);
    g[1] = de.eval_derivative(v, c1);
  };
  p.hessian = [de](double t, double s, double* H) {
    const double v[2] = {t, s};
    const int c00[2] = {2, 0}, c01[2] = {1, 1}, c11[2] = {0, 2};
    H[0] = de.eval_derivative(v, c00);
    H[1] = H[2] = de.eval_derivative(v, c01);
    H[3] = de.eval_derivative(v, c11);
  };
  return p;
}

namespace {

// Panel edges on [lo, hi] with width <= min(wmax, c * eps / local max |dphi|).
std::vector<double> oscillation_panels(double lo, double hi, const std::vector<double>& gmax,
                                       double c_eps, double wmax) {
  const int ns = static_cast<int>(gmax.size());
  auto g_on = [&](double a, double b) {
    const double h = (hi - lo) / (ns - 1);
    int ia = std::max(0, static_cast<int>(std::floor((a - lo) / h)));
    int ib = std::min(ns - 1, static_cast<int>(std::ceil((b - lo) / h)));
    double g = 0.0;
    for (int i = ia; i <= ib; ++i) g = std::max(g, gmax[i]);
    return g;
  };
  std::vector<double> edges{lo};
  double t = lo;
  while (t < hi - 1e-14 * (hi - lo)) {
    double w = std::min(wmax, hi - t);
    for (int it = 0; it < 60; ++it) {
      const double g = g_on(t, t + w);
      const double wn = g > 0 ? std::min(w, c_eps / g) : w;
      if (wn >= w) break;
      w = wn;
    }
    t = std::min(hi, t + w);
    edges.push_back(t);
  }
  return edges;
}

}  // namespace

cplx oscillatory_integral_2d(const StationaryPhaseInput& in, double eps) {
  const double t0 = in.box[0], t1 = in.box[1], s0 = in.box[2], s1 = in.box[3];
  constexpr int ns = 257;
  std::vector<double> gt(ns, 0.0), gs(ns, 0.0);
  for (int i = 0; i < ns; ++i)
    for (int j = 0; j < ns; ++j) {
      const double t = t0 + (t1 - t0) * i / (ns - 1), s = s0 + (s1 - s0) * j / (ns - 1);
      double g[2];
      in.phi.gradient(t, s, g);
      gt[i] = std::max(gt[i], std::abs(g[0]));
      gs[j] = std::max(gs[j], std::abs(g[1]));
    }
  // 64-point Gauss-Legendre is accurate to ~1e-10 for up to ~12 oscillations per panel.
  constexpr double kOmegaH = 70.0;
  const auto et = oscillation_panels(t0, t1, gt, kOmegaH * eps, (t1 - t0) / 16);
  const auto es = oscillation_panels(s0, s1, gs, kOmegaH * eps, (s1 - s0) / 16);
  const auto& xg = gauss<double, 64>::abscissa();
  const auto& wg = gauss<double, 64>::weights();
  auto nodes = [&](const std::vector<double>& e, std::vector<double>& x, std::vector<double>& w) {
    for (std::size_t p = 0; p + 1 < e.size(); ++p) {
      const double m = 0.5 * (e[p] + e[p + 1]), h = 0.5 * (e[p + 1] - e[p]);
      for (std::size_t q = 0; q < xg.size(); ++q) {
        x.push_back(m + h * xg[q]);
        w.push_back(h * wg[q]);
        if (xg[q] != 0) {
          x.push_back(m - h * xg[q]);
          w.push_back(h * wg[q]);
        }
      }
    }
  };
  std::vector<double> tx, tw, sx, sw;
  nodes(et, tx, tw);
  nodes(es, sx, sw);
  std::vector<cplx> rows(tx.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(tx.size()); ++i) {
    cplx r = 0.0;
    for (std::size_t j = 0; j < sx.size(); ++j) {
      const double u = in.u(tx[i], sx[j]);
      if (u == 0.0) continue;
      r += sw[j] * u * std::exp(cplx(0.0, in.phi.value(tx[i], sx[j]) / eps));
    }
    rows[i] = tw[i] * r;
  }
  cplx total = 0.0;
  for (const auto& r : rows) total += r;
  return total;
}

StationaryPhaseReport stationary_phase_check(const StationaryPhaseInput& in,
                                             const std::vector<double>& eps_list) {
  StationaryPhaseReport rep{};
  double x[2] = {in.guess[0], in.guess[1]};
  bool converged = false;
  for (int it = 0; it < 100; ++it) {
    double g[2], H[4];
    in.phi.gradient(x[0], x[1], g);
    in.phi.hessian(x[0], x[1], H);
    const double det = H[0] * H[3] - H[1] * H[2];
    if (std::abs(det) < 1e-12) throw NumericalError("stationary phase: degenerate Hessian");
    const double dx = (H[3] * g[0] - H[1] * g[1]) / det;
    const double dy = (-H[2] * g[0] + H[0] * g[1]) / det;
    x[0] -= dx;
    x[1] -= dy;
    if (std::hypot(dx, dy) < 1e-14 * (1 + std::hypot(x[0], x[1]))) {
      converged = true;
      break;
    }
  }
  double g[2];
  in.phi.gradient(x[0], x[1], g);
  if (!converged && std::hypot(g[0], g[1]) > 1e-10)
    throw NumericalError("stationary phase: critical point not found");
  double H[4];
  in.phi.hessian(x[0], x[1], H);
  Eigen::Matrix2d Hm;
  Hm << H[0], H[1], H[2], H[3];
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(Hm);
  const auto ev = es.eigenvalues();
  if (std::abs(ev[0]) < 1e-12 || std::abs(ev[1]) < 1e-12)
    throw NumericalError("stationary phase: degenerate Hessian");
  rep.critical[0] = x[0];
  rep.critical[1] = x[1];
  rep.signature = (ev[0] > 0 ? 1 : -1) + (ev[1] > 0 ? 1 : -1);
  rep.det = ev[0] * ev[1];
  rep.A = kTwoPi * std::exp(cplx(0.0, kPi * rep.signature / 4.0)) / std::sqrt(std::abs(rep.det));
  const double u0 = in.u(x[0], x[1]);
  const double phi0 = in.phi.value(x[0], x[1]);
  std::vector<double> es_, rs;
  for (double eps : eps_list) {
    StationaryPhaseRow row;
    row.eps = eps;
    row.integral = oscillatory_integral_2d(in, eps);
    row.leading = eps * rep.A * std::exp(cplx(0.0, phi0 / eps)) * u0;
    row.remainder = std::abs(row.integral - row.leading);
    rep.rows.push_back(row);
    es_.push_back(eps);
    rs.push_back(row.remainder);
  }
  rep.slope = fit_loglog(es_, rs).slope;
  return rep;
}

}  // namespace latweyl
