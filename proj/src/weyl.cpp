#include "latweyl/weyl.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "latweyl/fit.hpp"
#include "latweyl/rng.hpp"

namespace latweyl {

namespace {

// P(gx U + gxi V <= z) for U, V uniform on [-hx/2, hx/2], [-hxi/2, hxi/2]: the trapezoid law.
double cell_cdf(double z, double a, double b) {
  if (a < b) std::swap(a, b);  // a >= b >= 0 are the half ranges
  if (a <= 0.0) return z >= 0.0 ? 1.0 : 0.0;
  const double az = std::abs(z);
  double g;
  if (az >= a + b) {
    g = 0.5;
  } else if (b <= 1e-14 * a || az <= a - b) {
    g = az / (2 * a);
  } else {
    const double c = a - b;
    g = c / (2 * a) + ((a + b) * (az - c) - 0.5 * (az * az - c * c)) / (4 * a * b);
  }
  return z >= 0 ? 0.5 + g : 0.5 - g;
}

void require_d1(const Symbol& sym, const char* what) {
  if (sym.dim() != 1) throw ConfigError(std::string(what) + ": grid rule implemented for d = 1");
}

double a0_re(const Symbol& sym, double x, double xi) {
  return sym.term(0, Pt(&x, 1), Pt(&xi, 1)).real();
}

void a0_grad(const Symbol& sym, double x, double xi, double* g) {
  static const int one[1] = {1}, zero[1] = {0};
  g[0] = sym.derivative(0, Pt(&x, 1), Pt(&xi, 1), Idx(one, 1), Idx(zero, 1)).real();
  g[1] = sym.derivative(0, Pt(&x, 1), Pt(&xi, 1), Idx(zero, 1), Idx(one, 1)).real();
}

}  // namespace

std::vector<double> sublevel_volumes(const Symbol& sym, const std::vector<double>& levels,
                                     double R, int x_cells, int xi_cells) {
  require_d1(sym, "sublevel_volumes");
  if (x_cells < 1 || xi_cells < 1 || !(R > 0)) throw ConfigError("volume: bad quadrature grid");
  const double hx = 2 * R / x_cells, hxi = kTwoPi / xi_cells;
  std::vector<std::vector<double>> partial(x_cells, std::vector<double>(levels.size(), 0.0));
#pragma omp parallel for schedule(static)
  for (int i = 0; i < x_cells; ++i) {
    const double x = -R + (i + 0.5) * hx;
    auto& acc = partial[i];
    for (int j = 0; j < xi_cells; ++j) {
      const double xi = -kPi + (j + 0.5) * hxi;
      const double a = a0_re(sym, x, xi);
      double g[2];
      a0_grad(sym, x, xi, g);
      const double ha = 0.5 * std::abs(g[0]) * hx, hb = 0.5 * std::abs(g[1]) * hxi;
      for (std::size_t l = 0; l < levels.size(); ++l) {
        const double z = levels[l] - a;
        if (z >= ha + hb)
          acc[l] += 1.0;
        else if (z > -(ha + hb))
          acc[l] += cell_cdf(z, ha, hb);
      }
    }
  }
  std::vector<double> out(levels.size(), 0.0);
  for (const auto& p : partial)
    for (std::size_t l = 0; l < levels.size(); ++l) out[l] += p[l];
  for (double& v : out) v *= hx * hxi;
  return out;
}

MonteCarloVolume monte_carlo_volume(const Symbol& sym, const Interval& iv, double R,
                                    std::uint64_t samples, std::uint64_t seed) {
  const int d = sym.dim(), D = 2 * d;
  if (samples < 2) throw ConfigError("monte carlo: need at least two samples");
  // k strata per phase-space axis, two samples per stratum.
  const auto k = static_cast<std::uint64_t>(
      std::max(1.0, std::floor(std::pow(static_cast<double>(samples / 2), 1.0 / D))));
  std::uint64_t strata = 1;
  for (int a = 0; a < D; ++a) strata *= k;
  double box = 1.0;
  for (int a = 0; a < d; ++a) box *= 2 * R * kTwoPi;

  constexpr std::uint64_t kChunk = 1 << 16;
  const std::uint64_t chunks = (strata + kChunk - 1) / kChunk;
  std::vector<double> mean(chunks, 0.0), var(chunks, 0.0);
#pragma omp parallel for schedule(static)
  for (std::int64_t c = 0; c < static_cast<std::int64_t>(chunks); ++c) {
    std::vector<double> x(d), xi(d);
    double m = 0.0, v = 0.0;
    const std::uint64_t lo = c * kChunk, hi = std::min(strata, lo + kChunk);
    for (std::uint64_t s = lo; s < hi; ++s) {
      int hits[2];
      for (int rep = 0; rep < 2; ++rep) {
        std::uint64_t r = s;
        for (int a = 0; a < D; ++a) {
          const double cell = static_cast<double>(r % k);
          r /= k;
          const double u = (cell + counter_uniform(seed, a, 2 * s + rep)) / static_cast<double>(k);
          if (a < d)
            x[a] = -R + 2 * R * u;
          else
            xi[a - d] = -kPi + kTwoPi * u;
        }
        hits[rep] = iv.contains(sym.term(0, x, xi).real()) ? 1 : 0;
      }
      m += 0.5 * (hits[0] + hits[1]);
      v += 0.5 * (hits[0] - hits[1]) * (hits[0] - hits[1]);  // unbiased within-stratum variance
    }
    mean[c] = m;
    var[c] = v;
  }
  double m = 0.0, v = 0.0;
  for (std::uint64_t c = 0; c < chunks; ++c) {
    m += mean[c];
    v += var[c];
  }
  const double K = static_cast<double>(strata);
  return {box * m / K, box * std::sqrt(v / 2.0) / K};
}

VolumeResult phase_space_volume(const Symbol& sym, const Interval& iv, const VolumeQuad& quad) {
  SamplingSpec ring;
  const auto ess = check_ess_bound(sym, iv, quad.x_halfwidth, ring);
  if (!ess.pass)
    throw HypothesisError("volume: a_0 does not exceed beta outside the x box (inf " +
                          std::to_string(ess.inf_outside) + ")");
  VolumeResult r{iv, 0.0, 0.0, 0.0, 0.0, quad, ""};
  if (quad.mc_samples > 0) {
    const auto mc = monte_carlo_volume(sym, iv, quad.x_halfwidth, quad.mc_samples, quad.seed);
    r.mc_value = mc.value;
    r.mc_stderr = mc.stderr_;
  }
  if (sym.dim() == 1) {
    const std::vector<double> lv{iv.alpha(), iv.beta()};
    const auto fine = sublevel_volumes(sym, lv, quad.x_halfwidth, quad.x_cells, quad.xi_cells);
    const auto coarse = sublevel_volumes(sym, lv, quad.x_halfwidth, std::max(1, quad.x_cells / 2),
                                         std::max(1, quad.xi_cells / 2));
    r.value = std::max(0.0, fine[1] - fine[0]);
    r.refinement_delta = std::abs(r.value - std::max(0.0, coarse[1] - coarse[0]));
    r.method = "linearised-cell midpoint";
  } else {
    if (quad.mc_samples == 0) throw ConfigError("volume: d > 1 needs Monte Carlo samples");
    r.value = r.mc_value;
    const auto quarter = monte_carlo_volume(sym, iv, quad.x_halfwidth,
                                            std::max<std::uint64_t>(2, quad.mc_samples / 4),
                                            quad.seed + 1);
    r.refinement_delta = std::abs(r.value - quarter.value);
    r.method = "stratified Monte Carlo";
  }
  return r;
}

ShellReport shell_gradient(const Symbol& sym, double lambda, double R, int cells_per_axis) {
  const int d = sym.dim(), D = 2 * d;
  const int n = d == 1 ? cells_per_axis : std::min(cells_per_axis, 24);
  std::vector<double> h(D);
  double diag2 = 0.0;
  for (int a = 0; a < D; ++a) {
    h[a] = (a < d ? 2 * R : kTwoPi) / n;
    diag2 += h[a] * h[a];
  }
  const double diag = std::sqrt(diag2);
  std::size_t total = 1;
  for (int a = 0; a < D; ++a) total *= static_cast<std::size_t>(n);
  ShellReport rep{std::numeric_limits<double>::infinity(), 0};
  std::vector<double> x(d), xi(d);
  std::vector<int> zero(d, 0), unit(d, 0);
  for (std::size_t c = 0; c < total; ++c) {
    std::size_t r = c;
    for (int a = D - 1; a >= 0; --a) {
      const double u = (static_cast<double>(r % n) + 0.5) * h[a];
      r /= n;
      if (a < d)
        x[a] = -R + u;
      else
        xi[a - d] = -kPi + u;
    }
    const double v = sym.term(0, x, xi).real();
    double g2 = 0.0;
    for (int k = 0; k < d; ++k) {
      unit.assign(d, 0);
      unit[k] = 1;
      const double gx = sym.derivative(0, x, xi, unit, zero).real();
      const double gxi = sym.derivative(0, x, xi, zero, unit).real();
      g2 += gx * gx + gxi * gxi;
    }
    const double g = std::sqrt(g2);
    // The level set can cross this cell only if the value is within the cell's variation.
    if (std::abs(v - lambda) <= 0.5 * g * diag + 0.5 * diag2) {
      ++rep.cells;
      rep.min_gradient = std::min(rep.min_gradient, g);
    }
  }
  return rep;
}

namespace {

// int ds / |grad a_0| over the lambda contour of a_0 sampled on the node grid (marching squares).
double shell_integral(const Symbol& sym, double lambda, double R, int nx, int nxi) {
  const double hx = 2 * R / nx, hxi = kTwoPi / nxi;
  std::vector<double> prev(nxi + 1), cur(nxi + 1);
  auto row = [&](int i, std::vector<double>& out) {
    const double x = -R + i * hx;
    for (int j = 0; j <= nxi; ++j) out[j] = a0_re(sym, x, -kPi + j * hxi) - lambda;
  };
  row(0, prev);
  double total = 0.0;
  for (int i = 0; i < nx; ++i) {
    row(i + 1, cur);
    for (int j = 0; j < nxi; ++j) {
      // Corners counter-clockwise: (i,j) (i+1,j) (i+1,j+1) (i,j+1).
      const double v[4] = {prev[j], cur[j], cur[j + 1], prev[j + 1]};
      const double px[4] = {0, 1, 1, 0}, pq[4] = {0, 0, 1, 1};
      double cx[4], cq[4];
      int m = 0;
      for (int e = 0; e < 4; ++e) {
        const int f = (e + 1) % 4;
        if ((v[e] < 0) != (v[f] < 0)) {
          const double s = v[e] / (v[e] - v[f]);
          cx[m] = px[e] + s * (px[f] - px[e]);
          cq[m] = pq[e] + s * (pq[f] - pq[e]);
          ++m;
        }
      }
      for (int s = 0; s + 1 < m; s += 2) {
        const double x0 = -R + (i + cx[s]) * hx, q0 = -kPi + (j + cq[s]) * hxi;
        const double x1 = -R + (i + cx[s + 1]) * hx, q1 = -kPi + (j + cq[s + 1]) * hxi;
        double g[2];
        a0_grad(sym, 0.5 * (x0 + x1), 0.5 * (q0 + q1), g);
        const double gn = std::hypot(g[0], g[1]);
        if (gn > 0) total += std::hypot(x1 - x0, q1 - q0) / gn;
      }
    }
    prev.swap(cur);
  }
  return total;
}

}  // namespace

LiouvilleResult liouville_measure(const Symbol& sym, double lambda, const VolumeQuad& quad,
                                  double h, double critical_threshold) {
  if (!(h > 0)) throw ConfigError("liouville: h must be positive");
  const auto shell = shell_gradient(sym, lambda, quad.x_halfwidth);
  if (shell.cells > 0 && shell.min_gradient < critical_threshold)
    throw HypothesisError("liouville: lambda = " + std::to_string(lambda) +
                          " is near-critical (min |grad a_0| = " +
                          std::to_string(shell.min_gradient) + ")");
  LiouvilleResult r{0.0, std::numeric_limits<double>::quiet_NaN(),
                    shell.cells ? shell.min_gradient : std::numeric_limits<double>::infinity()};
  if (sym.dim() == 1) {
    const auto v = sublevel_volumes(sym, {lambda - h, lambda + h}, quad.x_halfwidth, quad.x_cells,
                                    quad.xi_cells);
    r.central_difference = (v[1] - v[0]) / (2 * h);
    r.shell = shell_integral(sym, lambda, quad.x_halfwidth, quad.x_cells, quad.xi_cells);
  } else {
    const auto mc = monte_carlo_volume(sym, Interval(lambda - h, lambda + h), quad.x_halfwidth,
                                       std::max<std::uint64_t>(quad.mc_samples, 2), quad.seed);
    r.central_difference = mc.value / (2 * h);
  }
  return r;
}

std::vector<double> liouville_curve(const Symbol& sym, const std::vector<double>& lambdas,
                                    const VolumeQuad& quad, double h) {
  require_d1(sym, "liouville_curve");
  std::vector<double> levels;
  for (double l : lambdas) {
    levels.push_back(l - h);
    levels.push_back(l + h);
  }
  const auto v = sublevel_volumes(sym, levels, quad.x_halfwidth, quad.x_cells, quad.xi_cells);
  std::vector<double> out(lambdas.size());
  for (std::size_t i = 0; i < lambdas.size(); ++i) out[i] = (v[2 * i + 1] - v[2 * i]) / (2 * h);
  return out;
}

WeylReport weyl_experiment(const Symbol& sym, const Interval& iv, std::vector<double> eps_list,
                           const WeylConfig& cfg) {
  if (eps_list.empty()) throw ConfigError("weyl: empty eps list");
  std::sort(eps_list.begin(), eps_list.end(), std::greater<>());
  for (double e : {iv.alpha(), iv.beta()}) {
    const auto s = shell_gradient(sym, e, cfg.quad.x_halfwidth);
    if (s.cells > 0 && s.min_gradient < cfg.critical_threshold)
      throw HypothesisError("weyl: endpoint " + std::to_string(e) +
                            " is near-critical (min |grad a_0| = " +
                            std::to_string(s.min_gradient) + ")");
  }
  const VolumeResult vol = phase_space_volume(sym, iv, cfg.quad);
  WeylReport rep{sym.name(), iv, {}, 0.0, 0.0, vol, vol, vol};
  VolumeQuad side = cfg.quad;
  side.mc_samples = 0;
  const double dl = cfg.sandwich_delta;
  if (iv.alpha() + dl <= iv.beta() - dl) {
    rep.lower = phase_space_volume(sym, Interval(iv.alpha() + dl, iv.beta() - dl), side);
  } else {
    rep.lower.value = rep.lower.refinement_delta = rep.lower.mc_value = rep.lower.mc_stderr = 0.0;
    rep.lower.method = "empty";
  }
  rep.upper = phase_space_volume(sym, Interval(iv.alpha() - dl, iv.beta() + dl), side);

  const int d = sym.dim();
  std::vector<double> es, rs;
  for (double eps : eps_list) {
    const auto count = [&](double L) {
      const auto ev = weyl_eigenvalues(sym, eps, L, cfg.M);
      return static_cast<std::size_t>(
          std::count_if(ev.begin(), ev.end(), [&](double l) { return iv.contains(l); }));
    };
    const std::size_t N = count(cfg.L);
    const bool stable = cfg.truncation_extra <= 0 || count(cfg.L + cfg.truncation_extra) == N;
    const double scaled = std::pow(kTwoPi * eps, d) * static_cast<double>(N);
    const double R = scaled - rep.volume.value;
    const bool sandwich = rep.lower.value <= scaled && scaled <= rep.upper.value;
    rep.rows.push_back({eps, N, scaled, rep.volume.value, R, sandwich, stable});
    es.push_back(eps);
    rs.push_back(R);
  }
  if (es.size() >= 2) {
    const auto fit = fit_loglog(es, rs);
    rep.slope = fit.slope;
    rep.constant = std::exp(fit.intercept);
  }
  return rep;
}

std::vector<double> smoothed_dos(const SpectralDecomposition& spec, const ScalarFunction& f,
                                 const SmoothingKernel& psi, const std::vector<double>& lambdas,
                                 double eps) {
  std::vector<double> fl, lj;
  for (Eigen::Index j = 0; j < spec.eigenvalues.size(); ++j) {
    const double v = f(spec.eigenvalues[j]);
    if (v != 0.0) {
      fl.push_back(v);
      lj.push_back(spec.eigenvalues[j]);
    }
  }
  std::vector<double> out(lambdas.size(), 0.0);
  const double norm = eps * std::sqrt(kTwoPi);
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < lj.size(); ++j)
      s += fl[j] * scaled_fourier(psi, lambdas[i] - lj[j], eps).real();
    out[i] = s / norm;
  }
  return out;
}

DosReport dos_vs_liouville_sweep(const Symbol& sym, const ScalarFunction& f,
                                 const SmoothingKernel& psi, const std::vector<double>& lambdas,
                                 const std::vector<double>& eps_list, const DosConfig& cfg) {
  DosReport rep;
  rep.lambdas = lambdas;
  rep.liouville = liouville_curve(sym, lambdas, cfg.quad, cfg.h);
  double tmax = 0.0;
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    rep.target.push_back(f(lambdas[i]) * rep.liouville[i]);
    tmax = std::max(tmax, std::abs(rep.target.back()));
  }
  std::vector<double> es, devs;
  for (double eps : eps_list) {
    SpectralDecomposition spec;
    spec.eigenvalues = weyl_eigenvalues(sym, eps, cfg.L, cfg.M);
    spec.eps = eps;
    const auto I1 = smoothed_dos(spec, f, psi, lambdas, eps);
    DosRow row{eps, {}, 0.0};
    const double vol = std::pow(kTwoPi * eps, sym.dim());
    double dev = 0.0;
    for (std::size_t i = 0; i < lambdas.size(); ++i) {
      row.scaled.push_back(vol * I1[i]);
      dev = std::max(dev, std::abs(row.scaled[i] - rep.target[i]));
    }
    row.deviation = tmax > 0 ? dev / tmax : dev;
    rep.rows.push_back(row);
    es.push_back(eps);
    devs.push_back(row.deviation);
  }
  if (es.size() >= 2) rep.slope = fit_loglog(es, devs).slope;
  return rep;
}

}  // namespace latweyl
