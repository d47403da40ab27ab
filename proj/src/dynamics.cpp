#include "latweyl/dynamics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <string>

#include "latweyl/fit.hpp"
#include "latweyl/quantize.hpp"
#include "latweyl/spectral.hpp"

namespace latweyl {

namespace {

// First and second derivatives of Re a_0 at one phase-space point.
struct HDerivs {
  Eigen::VectorXd gx, gxi;
  Eigen::MatrixXd hxx, hxix, hxixi;  // hxix(i,j) = d_xi_i d_x_j H
};

class HamiltonianEval {
 public:
  HamiltonianEval(const Symbol& H) : H_(H), d_(H.dim()), ax_(d_), axi_(d_) {}

  double value(Pt x, Pt xi) const { return H_.term(0, x, xi).real(); }

  void derivs(Pt x, Pt xi, HDerivs& out, bool second) {
    out.gx.resize(d_);
    out.gxi.resize(d_);
    for (int k = 0; k < d_; ++k) {
      out.gx[k] = partial(x, xi, {k}, {});
      out.gxi[k] = partial(x, xi, {}, {k});
    }
    if (!second) return;
    out.hxx.resize(d_, d_);
    out.hxix.resize(d_, d_);
    out.hxixi.resize(d_, d_);
    for (int i = 0; i < d_; ++i)
      for (int j = 0; j < d_; ++j) {
        out.hxx(i, j) = j < i ? out.hxx(j, i) : partial(x, xi, {i, j}, {});
        out.hxixi(i, j) = j < i ? out.hxixi(j, i) : partial(x, xi, {}, {i, j});
        out.hxix(i, j) = partial(x, xi, {j}, {i});
      }
  }

 private:
  double partial(Pt x, Pt xi, std::initializer_list<int> dx, std::initializer_list<int> dxi) {
    std::fill(ax_.begin(), ax_.end(), 0);
    std::fill(axi_.begin(), axi_.end(), 0);
    for (int k : dx) ++ax_[k];
    for (int k : dxi) ++axi_[k];
    return H_.derivative(0, x, xi, ax_, axi_).real();
  }

  const Symbol& H_;
  int d_;
  std::vector<int> ax_, axi_;
};

// Packed state: x, xi, action, J = dx/dx0, K = dxi/dx0, Re/Im of int a_1.
struct Layout {
  int d;
  int x() const { return 0; }
  int xi() const { return d; }
  int S() const { return 2 * d; }
  int J() const { return 2 * d + 1; }
  int K() const { return 2 * d + 1 + d * d; }
  int A() const { return 2 * d + 1 + 2 * d * d; }
  int size() const { return A() + 2; }
};

void rhs(HamiltonianEval& he, const Symbol* a1, const Layout& lay, const Eigen::VectorXd& s,
         bool variational, HDerivs& hd, Eigen::VectorXd& out) {
  const int d = lay.d;
  Pt x(s.data() + lay.x(), d), xi(s.data() + lay.xi(), d);
  he.derivs(x, xi, hd, variational);
  out.setZero(lay.size());
  out.segment(lay.x(), d) = hd.gxi;
  out.segment(lay.xi(), d) = -hd.gx;
  out[lay.S()] = xi.size() ? Eigen::Map<const Eigen::VectorXd>(xi.data(), d).dot(hd.gxi) -
                                 he.value(x, xi)
                           : 0.0;
  if (variational) {
    Eigen::Map<const Eigen::MatrixXd> J(s.data() + lay.J(), d, d), K(s.data() + lay.K(), d, d);
    Eigen::Map<Eigen::MatrixXd>(out.data() + lay.J(), d, d) = hd.hxix * J + hd.hxixi * K;
    Eigen::Map<Eigen::MatrixXd>(out.data() + lay.K(), d, d) =
        -hd.hxx * J - hd.hxix.transpose() * K;
  }
  if (a1) {
    const cplx v = a1->term(0, x, xi);
    out[lay.A()] = v.real();
    out[lay.A() + 1] = v.imag();
  }
}

Eigen::VectorXd integrate(HamiltonianEval& he, const Symbol* a1, const Layout& lay,
                          Eigen::VectorXd s, double t, double max_dt, bool variational,
                          int min_steps = 4) {
  if (t == 0.0) return s;
  const int steps =
      std::max(min_steps, static_cast<int>(std::ceil(std::abs(t) / max_dt - 1e-9)));
  const double h = t / steps;
  HDerivs hd;
  Eigen::VectorXd k1, k2, k3, k4, tmp(s.size());
  for (int n = 0; n < steps; ++n) {
    rhs(he, a1, lay, s, variational, hd, k1);
    tmp = s + 0.5 * h * k1;
    rhs(he, a1, lay, tmp, variational, hd, k2);
    tmp = s + 0.5 * h * k2;
    rhs(he, a1, lay, tmp, variational, hd, k3);
    tmp = s + h * k3;
    rhs(he, a1, lay, tmp, variational, hd, k4);
    s += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return s;
}

Eigen::VectorXd initial_state(const Layout& lay, Pt x0, Pt xi0) {
  const int d = lay.d;
  Eigen::VectorXd s = Eigen::VectorXd::Zero(lay.size());
  for (int k = 0; k < d; ++k) {
    s[lay.x() + k] = x0[k];
    s[lay.xi() + k] = xi0[k];
    s[lay.J() + k * d + k] = 1.0;
  }
  return s;
}

std::size_t ipow(std::size_t b, int e) {
  std::size_t r = 1;
  for (int k = 0; k < e; ++k) r *= b;
  return r;
}

void unflatten(std::size_t flat, const std::vector<double>& axis, int d, double* out) {
  const std::size_t n = axis.size();
  for (int k = d - 1; k >= 0; --k) {
    out[k] = axis[flat % n];
    flat /= n;
  }
}

}  // namespace

Trajectory flow_step(const Symbol& H, Pt x0, Pt xi0, double dt, int steps, double tol) {
  const int d = H.dim();
  if (static_cast<int>(x0.size()) != d || static_cast<int>(xi0.size()) != d)
    throw std::invalid_argument("flow_step: state dimension mismatch");
  if (steps < 0 || !(dt != 0.0)) throw std::invalid_argument("flow_step: bad step data");
  HamiltonianEval he(H);
  const Layout lay{d};
  Eigen::VectorXd s = initial_state(lay, x0, xi0);
  Trajectory tr;
  const double E0 = he.value(x0, xi0);
  auto record = [&](double t) {
    tr.times.push_back(t);
    tr.x.emplace_back(s.data() + lay.x(), s.data() + lay.x() + d);
    tr.xi.emplace_back(s.data() + lay.xi(), s.data() + lay.xi() + d);
    tr.action.push_back(s[lay.S()]);
    const double E = he.value(Pt(s.data() + lay.x(), d), Pt(s.data() + lay.xi(), d));
    tr.energy_drift = std::max(tr.energy_drift, std::abs(E - E0));
  };
  record(0.0);
  for (int n = 0; n < steps; ++n) {
    s = integrate(he, nullptr, lay, s, dt, std::abs(dt), false, 1);
    record((n + 1) * dt);
  }
  const double horizon = std::abs(dt) * steps;
  if (tr.energy_drift > 10 * tol * std::max(1.0, horizon))
    throw NumericalError("flow_step: energy drift " + std::to_string(tr.energy_drift) +
                         " exceeds tolerance; reduce dt");
  return tr;
}

Characteristic shoot(const Symbol& H, Pt x0, Pt xi0, double t, double max_dt, const Symbol* a1) {
  const int d = H.dim();
  HamiltonianEval he(H);
  const Layout lay{d};
  const Eigen::VectorXd s = integrate(he, a1, lay, initial_state(lay, x0, xi0), t, max_dt, true);
  Characteristic c;
  c.x.assign(s.data() + lay.x(), s.data() + lay.x() + d);
  c.xi.assign(s.data() + lay.xi(), s.data() + lay.xi() + d);
  c.action = s[lay.S()];
  c.dx_dx0 = Eigen::Map<const Eigen::MatrixXd>(s.data() + lay.J(), d, d);
  c.dxi_dx0 = Eigen::Map<const Eigen::MatrixXd>(s.data() + lay.K(), d, d);
  c.a1_integral = {s[lay.A()], s[lay.A() + 1]};
  return c;
}

std::size_t PhaseSolution::x_count() const { return ipow(x_axis.size(), dim); }
std::size_t PhaseSolution::xi_count() const { return ipow(xi_axis.size(), dim); }
void PhaseSolution::x_point(std::size_t xf, double* x) const { unflatten(xf, x_axis, dim, x); }
void PhaseSolution::xi_point(std::size_t xif, double* xi) const {
  unflatten(xif, xi_axis, dim, xi);
}

namespace {

struct NodeResult {
  bool ok;
  double phi_T, det;
  std::vector<double> foot, gradx;
};

// Newton solve of x(t; x0, xi) = x from the guess, then phi = x0.xi + S.
NodeResult solve_node(const Symbol& H, double t, Pt x, Pt xi, std::vector<double> guess,
                      const HJOptions& opt) {
  const int d = H.dim();
  NodeResult r{false, 0.0, 1.0, guess, {}};
  double best = std::numeric_limits<double>::infinity();
  int stalled = 0;
  for (int it = 0; it <= opt.max_newton; ++it) {
    const auto c = shoot(H, r.foot, xi, t, opt.max_dt);
    Eigen::VectorXd res(d);
    for (int k = 0; k < d; ++k) res[k] = c.x[k] - x[k];
    if (!res.allFinite()) return r;
    // Near a caustic Newton stops contracting; give up after a few non-improving steps.
    const double rn = res.cwiseAbs().maxCoeff();
    stalled = rn < 0.5 * best ? 0 : stalled + 1;
    best = std::min(best, rn);
    if (stalled >= 4) return r;
    if (res.cwiseAbs().maxCoeff() < opt.newton_tol) {
      r.det = c.dx_dx0.determinant();
      if (!(r.det > opt.min_jacobian)) return r;
      double p = c.action;
      for (int k = 0; k < d; ++k) p += r.foot[k] * xi[k] - x[k] * xi[k];
      r.phi_T = p;
      r.gradx = c.xi;
      r.ok = true;
      return r;
    }
    const Eigen::VectorXd step = c.dx_dx0.partialPivLu().solve(res);
    for (int k = 0; k < d; ++k) r.foot[k] -= step[k];
  }
  return r;
}

}  // namespace

PhaseSolution solve_hamilton_jacobi(const Symbol& H, std::vector<double> times,
                                    const std::vector<double>& x_axis,
                                    const std::vector<double>& xi_axis, const HJOptions& opt) {
  if (x_axis.empty() || xi_axis.empty()) throw ConfigError("hj: empty grid");
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());
  if (times.empty() || times.front() < 0) throw ConfigError("hj: times must be nonnegative");
  if (times.front() != 0.0) times.insert(times.begin(), 0.0);

  PhaseSolution ps;
  ps.dim = H.dim();
  ps.times = times;
  ps.x_axis = x_axis;
  ps.xi_axis = xi_axis;
  const int d = ps.dim;
  const std::size_t nx = ps.x_count(), nxi = ps.xi_count(), nt = times.size();
  const std::size_t total = nt * nx * nxi;
  ps.phi.assign(total, 0.0);
  ps.periodic_part.assign(total, 0.0);
  ps.gradx.assign(total * d, 0.0);
  ps.foot.assign(total * d, 0.0);
  ps.jacobian.assign(total, 1.0);
  if (opt.ghosts) ps.ghost.assign(d, std::vector<double>(total, 0.0));

  // Per (x, xi) column the Newton guess is continued from the previous time slice.
  const std::size_t columns = nx * nxi;
  std::vector<int> failed_slice(columns, static_cast<int>(nt));
  std::atomic<int> earliest{static_cast<int>(nt)};  // later slices are not worth solving
  std::vector<double> max_grad(columns, 0.0);
#pragma omp parallel for schedule(dynamic, 16)
  for (std::ptrdiff_t col = 0; col < static_cast<std::ptrdiff_t>(columns); ++col) {
    const std::size_t xf = col / nxi, xif = col % nxi;
    std::vector<double> x(d), xi(d), xig(d);
    ps.x_point(xf, x.data());
    ps.xi_point(xif, xi.data());
    std::vector<double> guess = x, prev = x;
    std::vector<std::vector<double>> gguess(opt.ghosts ? d : 0, x);
    for (std::size_t ti = 0; ti < nt; ++ti) {
      if (static_cast<int>(ti) >= earliest.load(std::memory_order_relaxed)) break;
      const std::size_t nd = ps.node(ti, xf, xif);
      const auto r = solve_node(H, times[ti], x, xi, guess, opt);
      if (!r.ok) {
        failed_slice[col] = static_cast<int>(ti);
        break;
      }
      // Linear extrapolation of the foot in t for the next slice.
      for (int k = 0; k < d; ++k) {
        const double slope =
            ti > 0 ? (r.foot[k] - prev[k]) / (times[ti] - times[ti - 1]) : 0.0;
        guess[k] = ti + 1 < nt ? r.foot[k] + slope * (times[ti + 1] - times[ti]) : r.foot[k];
      }
      prev = r.foot;
      ps.periodic_part[nd] = r.phi_T;
      double dotx = 0.0;
      for (int k = 0; k < d; ++k) {
        dotx += x[k] * xi[k];
        ps.gradx[nd * d + k] = r.gradx[k];
        ps.foot[nd * d + k] = r.foot[k];
        max_grad[col] = std::max(max_grad[col], std::abs(r.gradx[k] - xi[k]));
      }
      ps.phi[nd] = dotx + r.phi_T;
      ps.jacobian[nd] = r.det;
      for (std::size_t g = 0; g < gguess.size(); ++g) {
        xig = xi;
        xig[g] += kTwoPi;
        const auto rg = solve_node(H, times[ti], x, xig, gguess[g], opt);
        if (!rg.ok) {
          failed_slice[col] = static_cast<int>(ti);
          break;
        }
        gguess[g] = rg.foot;
        ps.ghost[g][nd] = rg.phi_T;
      }
      if (failed_slice[col] != static_cast<int>(nt)) break;
      if (max_grad[col] >= kTwoPi) {
        failed_slice[col] = static_cast<int>(ti);
        break;
      }
    }
    for (int cur = earliest.load(); failed_slice[col] < cur;)
      if (earliest.compare_exchange_weak(cur, failed_slice[col])) break;
  }
  const int first_fail = *std::min_element(failed_slice.begin(), failed_slice.end());
  ps.requested_horizon = times.back();
  if (first_fail < static_cast<int>(nt)) {
    const double safe = first_fail > 0 ? times[first_fail - 1] : 0.0;
    if (!opt.auto_shrink || first_fail == 0)
      throw NumericalError("hj: caustic or Newton failure at t = " +
                           std::to_string(times[first_fail]) +
                           "; largest safe horizon T = " + std::to_string(safe));
    // Every column reached at least first_fail slices, so the kept block is complete.
    const std::size_t keep = static_cast<std::size_t>(first_fail) * columns;
    ps.times.resize(first_fail);
    for (auto* v : {&ps.phi, &ps.periodic_part, &ps.jacobian}) v->resize(keep);
    for (auto* v : {&ps.gradx, &ps.foot}) v->resize(keep * d);
    for (auto& g : ps.ghost) g.resize(keep);
    double m = 0.0;
    std::vector<double> xi(d);
    for (std::size_t n = 0; n < keep; ++n) {
      ps.xi_point(n % nxi, xi.data());
      for (int k = 0; k < d; ++k) m = std::max(m, std::abs(ps.gradx[n * d + k] - xi[k]));
    }
    ps.max_gradx_periodic = m;
    ps.horizon = safe;
    return ps;
  }
  ps.max_gradx_periodic = *std::max_element(max_grad.begin(), max_grad.end());
  ps.horizon = times.back();
  return ps;
}

PeriodicityCheck check_phase_periodicity(const PhaseSolution& ps) {
  double v = 0.0;
  for (const auto& g : ps.ghost)
    for (std::size_t n = 0; n < g.size(); ++n) v = std::max(v, std::abs(g[n] - ps.periodic_part[n]));
  return {v};
}

namespace {

// Centred derivative at index i of samples f on uniform nodes u: fourth order on grids of five or
// more points, second order on shorter ones. ok = false when the stencil does not fit.
double centred_derivative(const std::function<double(std::size_t)>& f,
                          const std::vector<double>& u, std::size_t i, bool* ok) {
  const std::size_t n = u.size();
  *ok = true;
  if (n >= 5 && i >= 2 && i + 2 < n) {
    const double h = u[i + 1] - u[i];
    return (f(i - 2) - 8 * f(i - 1) + 8 * f(i + 1) - f(i + 2)) / (12 * h);
  }
  if (n < 5 && n >= 3 && i >= 1 && i + 1 < n) return (f(i + 1) - f(i - 1)) / (u[i + 1] - u[i - 1]);
  *ok = false;
  return 0.0;
}

bool uniform(const std::vector<double>& u) {
  for (std::size_t i = 2; i < u.size(); ++i)
    if (std::abs((u[i] - u[i - 1]) - (u[1] - u[0])) > 1e-9 * std::max(1.0, std::abs(u[1] - u[0])))
      return false;
  return true;
}

}  // namespace

double hj_residual(const Symbol& H, const PhaseSolution& ps) {
  if (!uniform(ps.times) || !uniform(ps.x_axis))
    throw ConfigError("hj_residual: needs uniform time and x grids");
  const int d = ps.dim;
  const std::size_t nx1 = ps.x_axis.size();
  double worst = 0.0;
  std::vector<double> x(d), p(d);
  std::vector<std::size_t> xi_idx(d);
  for (std::size_t ti = 0; ti < ps.times.size(); ++ti)
    for (std::size_t xf = 0; xf < ps.x_count(); ++xf)
      for (std::size_t xif = 0; xif < ps.xi_count(); ++xif) {
        bool ok;
        const double dt = centred_derivative(
            [&](std::size_t k) { return ps.phi[ps.node(k, xf, xif)]; }, ps.times, ti, &ok);
        if (!ok) continue;
        ps.x_point(xf, x.data());
        std::size_t r = xf, stride = 1;
        bool interior = true;
        for (int k = d - 1; k >= 0 && interior; --k) {
          const std::size_t ik = r % nx1;
          r /= nx1;
          const std::size_t base = xf - ik * stride;
          const std::size_t s = stride;
          p[k] = centred_derivative(
              [&](std::size_t j) { return ps.phi[ps.node(ti, base + j * s, xif)]; }, ps.x_axis,
              ik, &interior);
          stride *= nx1;
        }
        if (!interior) continue;
        worst = std::max(worst, std::abs(dt + H.term(0, x, p).real()));
      }
  return worst;
}

double product_cutoff(const BumpFunction& chi, Pt x) {
  double v = 1.0;
  for (double c : x) v *= chi(c);
  return v;
}

cplx ParametrixAmplitude::mu0(std::size_t node, Pt y, Pt xi) const {
  const int d = phase->dim;
  const double cy = product_cutoff(init.chi, y);
  if (cy == 0.0 || factor[node] == 0.0) return 0.0;
  std::vector<double> mid(d);
  for (int k = 0; k < d; ++k) mid[k] = 0.5 * (phase->foot[node * d + k] + y[k]);
  return factor[node] * cy * init.c(mid, xi);
}

ParametrixAmplitude solve_transport_leading(const Symbol& H, const PhaseSolution& ps,
                                            const ParametrixInit& init, const Symbol* a1,
                                            double max_dt) {
  if (!init.c) throw ConfigError("transport: initial symbol data missing");
  ParametrixAmplitude mu{init, std::vector<cplx>(ps.phi.size(), 0.0), &ps};
  const int d = ps.dim;
  const std::size_t nx = ps.x_count(), nxi = ps.xi_count();
  const double x_lo = ps.x_axis.front(), x_hi = ps.x_axis.back();
#pragma omp parallel for schedule(dynamic, 16)
  for (std::ptrdiff_t col = 0; col < static_cast<std::ptrdiff_t>(nx * nxi); ++col) {
    const std::size_t xf = col / nxi, xif = col % nxi;
    std::vector<double> xi(d), foot(d);
    ps.xi_point(xif, xi.data());
    for (std::size_t ti = 0; ti < ps.times.size(); ++ti) {
      const std::size_t nd = ps.node(ti, xf, xif);
      for (int k = 0; k < d; ++k) foot[k] = ps.foot[nd * d + k];
      const double cx = product_cutoff(init.chi, foot);
      if (cx == 0.0) continue;
      for (int k = 0; k < d; ++k)
        if (foot[k] < x_lo || foot[k] > x_hi)
          throw NumericalError("transport: characteristic foot leaves the x grid");
      cplx phase_factor = 1.0;
      if (a1 && ps.times[ti] != 0.0)
        phase_factor = std::exp(cplx(0.0, 1.0) *
                                shoot(H, foot, xi, ps.times[ti], max_dt, a1).a1_integral);
      mu.factor[nd] = cx / std::sqrt(ps.jacobian[nd]) * phase_factor;
    }
  }
  return mu;
}

namespace {

// Multilinear weights of x on the per-axis grid: up to 2^d (flat index, weight) pairs.
std::vector<std::pair<std::size_t, double>> interp_weights(const std::vector<double>& axis, Pt x) {
  std::vector<std::pair<std::size_t, double>> w{{0, 1.0}};
  const std::size_t n = axis.size();
  for (double c : x) {
    if (c < axis.front() - 1e-12 || c > axis.back() + 1e-12)
      throw ConfigError("parametrix: point outside the phase grid");
    std::size_t j = std::upper_bound(axis.begin(), axis.end(), c) - axis.begin();
    j = std::clamp<std::size_t>(j, 1, n - 1);
    std::size_t lo = j - 1;
    double a = n > 1 ? (c - axis[lo]) / (axis[j] - axis[lo]) : 0.0;
    if (std::abs(c - axis[lo]) < 1e-12) a = 0.0;
    if (std::abs(c - axis[j]) < 1e-12) a = 1.0;
    std::vector<std::pair<std::size_t, double>> next;
    for (auto [f, v] : w) {
      if (a != 1.0) next.push_back({f * n + lo, v * (1 - a)});
      if (a != 0.0) next.push_back({f * n + (n > 1 ? j : lo), v * a});
    }
    w.swap(next);
  }
  return w;
}

}  // namespace

Eigen::MatrixXcd build_parametrix(const ParametrixAmplitude& mu, const PhaseSolution& ps, double t,
                                  const LatticeBox& lattice, double eps, const TorusGrid& grid) {
  const int d = ps.dim;
  if (lattice.dim() != d || grid.dim() != d) throw ConfigError("parametrix: dimension mismatch");
  const auto tit = std::find_if(ps.times.begin(), ps.times.end(),
                                [&](double s) { return std::abs(s - t) < 1e-12; });
  if (tit == ps.times.end()) throw ConfigError("parametrix: t is not a solved time slice");
  const std::size_t ti = tit - ps.times.begin();
  if (static_cast<int>(ps.xi_axis.size()) != grid.nodes_per_axis())
    throw ConfigError("parametrix: torus grid does not match the phase xi axis");
  for (int k = 0; k < grid.nodes_per_axis(); ++k)
    if (std::abs(ps.xi_axis[k] - grid.node(k)) > 1e-12)
      throw ConfigError("parametrix: torus grid does not match the phase xi axis");

  const auto n = static_cast<Eigen::Index>(lattice.size());
  const std::size_t nxi = grid.size();
  Eigen::MatrixXcd U = Eigen::MatrixXcd::Zero(n, n);
#pragma omp parallel for schedule(dynamic, 4)
  for (Eigen::Index r = 0; r < n; ++r) {
    std::vector<double> x(d), y(d), xi(d), mid(d);
    lattice.point(static_cast<std::size_t>(r), x.data());
    const auto w = interp_weights(ps.x_axis, x);
    // Interpolated phi_T, amplitude factor and foot per torus node.
    std::vector<double> phiT(nxi, 0.0), foot(nxi * d, 0.0);
    std::vector<cplx> A(nxi, 0.0);
    bool any = false;
    for (std::size_t q = 0; q < nxi; ++q) {
      for (auto [xf, wt] : w) {
        const std::size_t nd = ps.node(ti, xf, q);
        phiT[q] += wt * ps.periodic_part[nd];
        A[q] += wt * mu.factor[nd];
        for (int k = 0; k < d; ++k) foot[q * d + k] += wt * ps.foot[nd * d + k];
      }
      any = any || A[q] != 0.0;
    }
    if (!any) continue;
    for (Eigen::Index c = 0; c < n; ++c) {
      lattice.point(static_cast<std::size_t>(c), y.data());
      const double cy = product_cutoff(mu.init.chi, y);
      if (cy == 0.0) continue;
      // Same aliasing rule as the quantization kernel: |k| >= M/2 is left at zero.
      bool aliased = false;
      for (int k = 0; k < d; ++k)
        aliased = aliased || 2 * std::abs(std::lround((y[k] - x[k]) / eps)) >= grid.nodes_per_axis();
      if (aliased) continue;
      cplx s = 0.0;
      for (std::size_t q = 0; q < nxi; ++q) {
        if (A[q] == 0.0) continue;
        grid.point(q, xi.data());
        double ph = -phiT[q];
        for (int k = 0; k < d; ++k) {
          ph += (y[k] - x[k]) * xi[k];
          mid[k] = 0.5 * (foot[q * d + k] + y[k]);
        }
        s += std::polar(1.0, ph / eps) * A[q] * mu.init.c(mid, xi);
      }
      U(r, c) = cy * s / static_cast<double>(nxi);
    }
  }
  return U;
}

ParametrixReport parametrix_error_sweep(const Symbol& sym, const ScalarFunction& f,
                                        const std::vector<double>& t_list,
                                        const std::vector<double>& eps_list,
                                        const ParametrixConfig& cfg) {
  const int d = sym.dim();
  if (!(cfg.chi_support > cfg.chi_plateau && cfg.chi_plateau >= 0))
    throw ConfigError("parametrix: cutoff needs 0 <= plateau < support");
  const BumpFunction chi(0.0, cfg.chi_support, cfg.chi_plateau / cfg.chi_support);
  const bool has_a1 = sym.num_terms() > 1;
  const Symbol a0 = sym.leading();
  std::vector<SymbolTerm> a1_terms;
  if (has_a1) a1_terms.push_back(sym.term_def(1));
  const Symbol a1 = has_a1 ? Symbol(sym.name() + ":a1", d, a1_terms, sym.order_function(),
                                    sym.is_real())
                           : a0;
  ParametrixReport rep;
  for (double eps : eps_list) {
    const LatticeBox box(d, eps, cfg.L);
    const TorusGrid grid(d, cfg.M);
    std::vector<double> x_axis(box.per_axis()), xi_axis(cfg.M);
    for (int i = 0; i < box.per_axis(); ++i) x_axis[i] = box.coord(i);
    for (int k = 0; k < cfg.M; ++k) xi_axis[k] = grid.node(k);
    const auto ps = solve_hamilton_jacobi(a0, t_list, x_axis, xi_axis, cfg.hj);

    // Weyl symbol of f(P) to first order: f(a_0) + eps f'(a_0) a_1.
    ParametrixInit init{chi, [&, eps](Pt x, Pt xi) {
                          const double l = sym.term(0, x, xi).real();
                          cplx c = f(l);
                          if (has_a1) c += eps * f.derivative(1, l) * sym.term(1, x, xi);
                          return c;
                        }};
    const auto mu = solve_transport_leading(a0, ps, init, has_a1 ? &a1 : nullptr, cfg.hj.max_dt);

    const auto spec = weyl_spectrum(sym, eps, cfg.L, cfg.M);
    double sup = 0.0;
    for (double t : t_list) {
      const Eigen::MatrixXcd U = build_parametrix(mu, ps, t, box, eps, grid);
      const Eigen::MatrixXcd E = apply_function_exact(
          spec, [&](double l) { return std::exp(cplx(0.0, t * l / eps)) * f(l); });
      const double err = spectral_norm(U - E), nrm = spectral_norm(U);
      rep.rows.push_back({eps, t, err, nrm});
      sup = std::max(sup, err);
      rep.norm_constant = std::max(rep.norm_constant, std::max(0.0, nrm - 1.0) / eps);
    }
    rep.eps.push_back(eps);
    rep.sup_error.push_back(sup);
  }
  if (rep.eps.size() >= 2) rep.slope = fit_loglog(rep.eps, rep.sup_error).slope;
  return rep;
}

}  // namespace latweyl
