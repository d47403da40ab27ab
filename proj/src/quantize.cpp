#include "latweyl/quantize.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <climits>
#include <cmath>
#include <unsupported/Eigen/FFT>

#include "latweyl/fit.hpp"
#include "latweyl/rng.hpp"

namespace latweyl {

double OperatorMatrix::max_abs_entry() const {
  return entries.size() ? entries.cwiseAbs().maxCoeff() : 0.0;
}

double hermitian_defect(const Eigen::MatrixXcd& A) {
  if (A.size() == 0) return 0.0;
  return (A - A.adjoint()).cwiseAbs().maxCoeff();
}

double spectral_norm(const Eigen::MatrixXcd& A) {
  if (A.size() == 0) return 0.0;
  const Eigen::MatrixXcd G = A.rows() <= A.cols() ? Eigen::MatrixXcd(A * A.adjoint())
                                                   : Eigen::MatrixXcd(A.adjoint() * A);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(G, Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

namespace {

int signed_mode(int kk, int M) { return kk < (M + 1) / 2 ? kk : kk - M; }

// In place: data[m] (torus node samples, row-major M^d) -> c[k] = M^-d sum_m e^{i k.xi_m} data[m]
// with k stored wrapped modulo M.
class TorusTransform {
 public:
  TorusTransform(int dim, int M) : d_(dim), M_(M), line_(M), out_(M) {}

  void apply(std::vector<cplx>& data) {
    std::size_t stride = 1;
    const std::size_t total = data.size();
    for (int a = d_ - 1; a >= 0; --a) {
      const std::size_t block = stride * M_;
      for (std::size_t base = 0; base < total; base += block)
        for (std::size_t off = 0; off < stride; ++off) {
          for (int m = 0; m < M_; ++m) line_[m] = data[base + off + m * stride];
          fft_.inv(out_, line_);
          for (int k = 0; k < M_; ++k) {
            // e^{i k xi_m} with xi_m = -pi + 2 pi m / M contributes (-1)^k.
            const int ks = signed_mode(k, M_);
            data[base + off + k * stride] = (ks % 2 == 0) ? out_[k] : -out_[k];
          }
        }
      stride = block;
    }
  }

 private:
  int d_, M_;
  Eigen::FFT<double> fft_;
  std::vector<cplx> line_, out_;
};

struct AxisPair {
  int i, j;
};

}  // namespace

cplx kernel_entry(const Symbol& sym, double t, Pt x, Pt y, double eps, const TorusGrid& grid,
                  bool* aliased) {
  const int d = sym.dim();
  const int M = grid.nodes_per_axis();
  std::vector<long> k(d);
  std::vector<double> mid(d), xi(d);
  for (int a = 0; a < d; ++a) {
    k[a] = std::lround((y[a] - x[a]) / eps);
    mid[a] = t * x[a] + (1 - t) * y[a];
  }
  bool alias = false;
  for (int a = 0; a < d; ++a) alias |= 2 * std::abs(k[a]) >= M;
  if (aliased) *aliased = alias;
  if (alias) return 0.0;
  cplx sum = 0;
  for (std::size_t m = 0; m < grid.size(); ++m) {
    grid.point(m, xi.data());
    double ph = 0;
    for (int a = 0; a < d; ++a) ph += k[a] * xi[a];
    sum += std::polar(1.0, ph) * sym.eval(mid, xi, eps);
  }
  return sum / static_cast<double>(grid.size());
}

OperatorMatrix build_operator(const Symbol& sym, double t, const LatticeBox& lattice, double eps,
                              const TorusGrid& grid) {
  if (!(t >= 0 && t <= 1)) throw ConfigError("build_operator: t must lie in [0,1]");
  if (sym.dim() != lattice.dim() || grid.dim() != lattice.dim())
    throw ConfigError("build_operator: dimension mismatch");
  if (std::abs(eps - lattice.eps()) > 1e-15 * eps)
    throw ConfigError("build_operator: eps differs from lattice spacing");
  const int d = lattice.dim(), n = lattice.per_axis(), h = lattice.half();
  const int M = grid.nodes_per_axis();
  const std::size_t N = lattice.size();
  Eigen::MatrixXcd A = Eigen::MatrixXcd::Zero(N, N);
  std::size_t alias_count = 0;

  const bool fast = t == 0.0 || t == 0.5 || t == 1.0;
  if (fast) {
    // Group entries by their (shared) midpoint; one torus transform per group.
    const int groups_per_axis = t == 0.5 ? 2 * n - 1 : n;
    std::vector<std::vector<AxisPair>> pairs(groups_per_axis);
    std::vector<double> mid_coord(groups_per_axis);
    std::vector<std::size_t> pairs_total(groups_per_axis, 0);
    for (int s = 0; s < groups_per_axis; ++s) {
      std::vector<AxisPair> kept;
      std::size_t total = 0;
      auto consider = [&](int i, int j) {
        ++total;
        if (2 * std::abs(j - i) < M) kept.push_back({i, j});
      };
      if (t == 0.5) {
        mid_coord[s] = eps * (0.5 * s - h);
        for (int i = std::max(0, s - n + 1); i <= std::min(n - 1, s); ++i) consider(i, s - i);
      } else if (t == 1.0) {
        mid_coord[s] = lattice.coord(s);
        for (int j = 0; j < n; ++j) consider(s, j);
      } else {
        mid_coord[s] = lattice.coord(s);
        for (int i = 0; i < n; ++i) consider(i, s);
      }
      pairs[s] = std::move(kept);
      pairs_total[s] = total;
    }
    std::size_t num_groups = 1;
    for (int a = 0; a < d; ++a) num_groups *= groups_per_axis;

#pragma omp parallel reduction(+ : alias_count)
    {
      TorusTransform tr(d, M);
      std::vector<cplx> data(grid.size());
      std::vector<double> mid(d), xi(d);
      std::vector<int> g(d), pi(d), ii(d), jj(d);
#pragma omp for schedule(dynamic)
      for (std::size_t gi = 0; gi < num_groups; ++gi) {
        std::size_t rem = gi;
        for (int a = d - 1; a >= 0; --a) {
          g[a] = static_cast<int>(rem % groups_per_axis);
          rem /= groups_per_axis;
        }
        std::size_t total = 1, kept = 1;
        for (int a = 0; a < d; ++a) {
          mid[a] = mid_coord[g[a]];
          total *= pairs_total[g[a]];
          kept *= pairs[g[a]].size();
        }
        alias_count += total - kept;
        if (kept == 0) continue;
        for (std::size_t m = 0; m < grid.size(); ++m) {
          grid.point(m, xi.data());
          data[m] = sym.eval(mid, xi, eps);
        }
        tr.apply(data);
        // Walk the Cartesian product of per-axis pair lists.
        std::fill(pi.begin(), pi.end(), 0);
        for (;;) {
          std::size_t kflat = 0;
          for (int a = 0; a < d; ++a) {
            const AxisPair& p = pairs[g[a]][pi[a]];
            ii[a] = p.i;
            jj[a] = p.j;
            kflat = kflat * M + static_cast<std::size_t>(((p.j - p.i) % M + M) % M);
          }
          A(lattice.flat(ii.data()), lattice.flat(jj.data())) = data[kflat];
          int a = d - 1;
          while (a >= 0 && ++pi[a] == static_cast<int>(pairs[g[a]].size())) pi[a--] = 0;
          if (a < 0) break;
        }
      }
    }
  } else {
#pragma omp parallel reduction(+ : alias_count)
    {
      std::vector<double> x(d), y(d);
#pragma omp for schedule(dynamic)
      for (std::size_t r = 0; r < N; ++r) {
        lattice.point(r, x.data());
        for (std::size_t c = 0; c < N; ++c) {
          lattice.point(c, y.data());
          bool al = false;
          A(r, c) = kernel_entry(sym, t, x, y, eps, grid, &al);
          alias_count += al ? 1 : 0;
        }
      }
    }
  }
  OperatorMatrix op{lattice, eps, t, std::move(A), 0.0, sym.name(), alias_count};
  op.hermitian_defect = hermitian_defect(op.entries);
  return op;
}

std::vector<std::vector<int>> multi_indices(int dim, int order) {
  std::vector<std::vector<int>> out;
  std::vector<int> cur(dim, 0);
  std::function<void(int, int)> rec = [&](int axis, int left) {
    if (axis == dim - 1) {
      cur[axis] = left;
      out.push_back(cur);
      return;
    }
    for (int v = left; v >= 0; --v) {
      cur[axis] = v;
      rec(axis + 1, left - v);
    }
  };
  if (dim > 0) rec(0, order);
  return out;
}

namespace {

double factorial_multi(const std::vector<int>& a) {
  double f = 1;
  for (int v : a)
    for (int q = 2; q <= v; ++q) f *= q;
  return f;
}

cplx ipow(int l) {
  static const cplx p[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
  return p[l % 4];
}

std::vector<int> add(const std::vector<int>& a, Idx b) {
  std::vector<int> r(a);
  for (std::size_t k = 0; k < r.size(); ++k) r[k] += b[k];
  return r;
}

// Linear combination of derivatives of a single symbol: sum c * d^{ax,axi} sym_j.
struct LinearMono {
  cplx coef;
  int j;
  std::vector<int> ax, axi;
};

// Product of derivatives of two symbols: sum c * d^{..} a_i * d^{..} b_j.
struct BilinearMono {
  cplx coef;
  int i;
  std::vector<int> ax1, axi1;
  int j;
  std::vector<int> ax2, axi2;
};

}  // namespace

Symbol change_quantization(const Symbol& sym, double s, double t, int order) {
  if (order < 1) throw std::invalid_argument("change_quantization: order >= 1");
  const int d = sym.dim();
  std::vector<SymbolTerm> terms;
  for (int k = 0; k < order; ++k) {
    std::vector<LinearMono> monos;
    for (int i = 0; i <= k && i < sym.num_terms(); ++i) {
      const int l = k - i;
      const double st = std::pow(s - t, l);
      if (l > 0 && st == 0.0) continue;
      for (const auto& alpha : multi_indices(d, l))
        monos.push_back({ipow(3 * l) * st / factorial_multi(alpha), i, alpha, alpha});  // (-i)^l
    }
    SymbolTerm term;
    term.value = [sym, monos](Pt x, Pt xi) {
      cplx v = 0;
      for (const auto& m : monos) v += m.coef * sym.derivative(m.j, x, xi, m.ax, m.axi);
      return v;
    };
    term.deriv = [sym, monos](Pt x, Pt xi, Idx gx, Idx gxi) {
      cplx v = 0;
      for (const auto& m : monos)
        v += m.coef * sym.derivative(m.j, x, xi, add(m.ax, gx), add(m.axi, gxi));
      return v;
    };
    term.deriv_order = INT_MAX;
    terms.push_back(std::move(term));
  }
  const bool real = sym.is_real() && (order == 1 || s == t);
  return Symbol(sym.name() + "@t=" + std::to_string(t), d, std::move(terms),
                sym.order_function(), real);
}

SharpProductResult sharp_product(const Symbol& a, const Symbol& b, double t, int order) {
  if (order < 1) throw std::invalid_argument("sharp_product: order >= 1");
  if (a.dim() != b.dim()) throw std::invalid_argument("sharp_product: dimension mismatch");
  const int d = a.dim();
  std::vector<SymbolTerm> terms;
  for (int k = 0; k < order; ++k) {
    std::vector<BilinearMono> monos;
    for (int i = 0; i < a.num_terms() && i <= k; ++i)
      for (int j = 0; j < b.num_terms() && i + j <= k; ++j) {
        const int l = k - i - j;
        for (int la = 0; la <= l; ++la) {
          const int lb = l - la;
          const double w = std::pow(t, la) * std::pow(1 - t, lb) * (lb % 2 ? -1.0 : 1.0);
          if (w == 0.0) continue;
          for (const auto& al : multi_indices(d, la))
            for (const auto& be : multi_indices(d, lb)) {
              const cplx c = ipow(l) * w / (factorial_multi(al) * factorial_multi(be));
              // d_xi^al d_x^be a_i * d_x^al d_xi^be b_j
              monos.push_back({c, i, be, al, j, al, be});
            }
        }
      }
    SymbolTerm term;
    term.value = [a, b, monos](Pt x, Pt xi) {
      cplx v = 0;
      for (const auto& m : monos)
        v += m.coef * a.derivative(m.i, x, xi, m.ax1, m.axi1) *
             b.derivative(m.j, x, xi, m.ax2, m.axi2);
      return v;
    };
    term.deriv = [a, b, monos, d](Pt x, Pt xi, Idx gx, Idx gxi) {
      // Leibniz rule over the combined (x, xi) multi-index.
      std::vector<int> g(2 * d), delta(2 * d, 0);
      for (int q = 0; q < d; ++q) {
        g[q] = gx[q];
        g[d + q] = gxi[q];
      }
      cplx v = 0;
      for (;;) {
        double binom = 1;
        for (int q = 0; q < 2 * d; ++q)
          for (int r = 0; r < delta[q]; ++r) binom = binom * (g[q] - r) / (r + 1);
        std::vector<int> ax1(d), axi1(d), ax2(d), axi2(d);
        for (const auto& m : monos) {
          for (int q = 0; q < d; ++q) {
            ax1[q] = m.ax1[q] + delta[q];
            axi1[q] = m.axi1[q] + delta[d + q];
            ax2[q] = m.ax2[q] + g[q] - delta[q];
            axi2[q] = m.axi2[q] + g[d + q] - delta[d + q];
          }
          v += binom * m.coef * a.derivative(m.i, x, xi, ax1, axi1) *
               b.derivative(m.j, x, xi, ax2, axi2);
        }
        int q = 2 * d - 1;
        while (q >= 0 && ++delta[q] > g[q]) delta[q--] = 0;
        if (q < 0) break;
      }
      return v;
    };
    term.deriv_order = INT_MAX;
    terms.push_back(std::move(term));
  }
  Symbol s("(" + a.name() + ")#(" + b.name() + ")", d, std::move(terms), a.order_function(),
           false);
  return {std::move(s), order};
}

CompositionReport verify_composition(const Symbol& a, const Symbol& b, double t, int order,
                                     double L, const std::vector<double>& eps_list,
                                     const TorusGrid& grid) {
  CompositionReport rep;
  const Symbol c = sharp_product(a, b, t, order).terms;
  for (double e : eps_list) {
    LatticeBox box(a.dim(), e, L);
    const auto A = build_operator(a, t, box, e, grid);
    const auto B = build_operator(b, t, box, e, grid);
    const auto C = build_operator(c, t, box, e, grid);
    const Eigen::MatrixXcd E = A.entries * B.entries - C.entries;
    rep.eps.push_back(e);
    rep.errors.push_back(spectral_norm(E));
  }
  rep.fitted_order = fit_loglog(rep.eps, rep.errors).slope;
  return rep;
}

GradPhiPeriodicity check_gradphi_periodicity(const GradPhi& gradphi, int dim, double t_val,
                                             double x_halfwidth, int samples, double tol,
                                             std::uint64_t seed) {
  std::vector<double> x(dim), eta(dim), sh(dim), g0(dim), g1(dim);
  double worst = 0;
  std::uint64_t ctr = 0;
  for (int s = 0; s < samples; ++s) {
    for (int k = 0; k < dim; ++k) {
      x[k] = x_halfwidth * (2 * counter_uniform(seed, 3, ctr++) - 1);
      eta[k] = kPi * (2 * counter_uniform(seed, 3, ctr++) - 1);
    }
    gradphi(t_val, x, eta, g0.data());
    for (int k = 0; k < dim; ++k) {
      sh = eta;
      sh[k] += kTwoPi;
      gradphi(t_val, x, sh, g1.data());
      for (int q = 0; q < dim; ++q)
        worst = std::max(worst, std::abs((g1[q] - sh[q]) - (g0[q] - eta[q])));
    }
  }
  return {worst, worst <= tol};
}

Symbol conjugated_symbol_leading(const Symbol& q, const GradPhi& gradphi, double t_val, Pt eta,
                                 double x_halfwidth) {
  const int d = q.dim();
  if (static_cast<int>(eta.size()) != d)
    throw std::invalid_argument("conjugated_symbol_leading: eta dimension");
  const auto per = check_gradphi_periodicity(gradphi, d, t_val, x_halfwidth, 64, 1e-8);
  if (!per.pass)
    throw HypothesisError("conjugated_symbol_leading: grad phi - eta not periodic (violation " +
                          std::to_string(per.max_violation) + ")");
  std::vector<double> e(eta.begin(), eta.end());
  SymbolTerm term;
  term.value = [q, gradphi, t_val, e, d](Pt x, Pt xi) {
    std::vector<double> g(d), sh(d);
    gradphi(t_val, x, e, g.data());
    for (int k = 0; k < d; ++k) sh[k] = reduce_angle(xi[k] + g[k]);
    return q.term(0, x, sh);
  };
  return Symbol(q.name() + "~conj", d, {std::move(term)}, q.order_function(), q.is_real());
}

}  // namespace latweyl
