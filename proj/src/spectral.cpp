#include "latweyl/spectral.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>

#include "latweyl/fit.hpp"

namespace latweyl {

SpectralDecomposition eigendecompose(const Eigen::MatrixXcd& A, const std::string& source,
                                     double max_defect) {
  if (A.rows() != A.cols()) throw std::invalid_argument("eigendecompose: matrix not square");
  SpectralDecomposition s;
  s.source = source;
  const double scale = A.size() ? A.cwiseAbs().maxCoeff() : 0.0;
  s.symmetrization_defect = hermitian_defect(A);
  if (s.symmetrization_defect > max_defect * std::max(scale, 1.0))
    throw NumericalError("eigendecompose: Hermitian defect " +
                         std::to_string(s.symmetrization_defect) + " above tolerance");
  if (A.rows() == 0) return s;
  const Eigen::MatrixXcd H = 0.5 * (A + A.adjoint());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(H);
  if (es.info() != Eigen::Success) throw NumericalError("eigendecompose: solver did not converge");
  s.eigenvalues = es.eigenvalues();
  s.eigenvectors = es.eigenvectors();

  const Eigen::MatrixXcd R = H * s.eigenvectors - s.eigenvectors * s.eigenvalues.asDiagonal();
  s.residual = R.colwise().norm().maxCoeff();
  const Eigen::MatrixXcd G =
      s.eigenvectors.adjoint() * s.eigenvectors - Eigen::MatrixXcd::Identity(A.rows(), A.cols());
  s.unitarity_defect = G.cwiseAbs().maxCoeff();
  const double norm = std::max(s.eigenvalues.cwiseAbs().maxCoeff(), 1e-300);
  if (s.residual > 1e-8 * std::max(norm, 1.0) || s.unitarity_defect > 1e-8)
    throw NumericalError("eigendecompose: residual or unitarity check failed");
  return s;
}

SpectralDecomposition eigendecompose(const OperatorMatrix& A, double max_defect) {
  auto s = eigendecompose(A.entries, A.symbol_name, max_defect);
  s.eps = A.eps;
  return s;
}

SpectralDecomposition weyl_spectrum(const Symbol& sym, double eps, double L, int M) {
  LatticeBox box(sym.dim(), eps, L);
  TorusGrid grid(sym.dim(), M);
  return eigendecompose(build_operator(sym, 0.5, box, eps, grid));
}

Eigen::VectorXd weyl_eigenvalues(const Symbol& sym, double eps, double L, int M,
                                 double max_defect) {
  const LatticeBox box(sym.dim(), eps, L);
  const auto op = build_operator(sym, 0.5, box, eps, TorusGrid(sym.dim(), M));
  const double scale = op.entries.size() ? op.entries.cwiseAbs().maxCoeff() : 0.0;
  if (hermitian_defect(op.entries) > max_defect * std::max(scale, 1.0))
    throw NumericalError("weyl_eigenvalues: Hermitian defect above tolerance");
  const Eigen::MatrixXcd H = 0.5 * (op.entries + op.entries.adjoint());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(H, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericalError("weyl_eigenvalues: no convergence");
  return es.eigenvalues();
}

CountResult count_eigenvalues(const SpectralDecomposition& spec, const Interval& iv) {
  std::size_t n = 0;
  double gap = std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < spec.eigenvalues.size(); ++j) {
    const double l = spec.eigenvalues[j];
    if (iv.alpha() <= l && l <= iv.beta()) ++n;
    gap = std::min({gap, std::abs(l - iv.alpha()), std::abs(l - iv.beta())});
  }
  return {iv, spec.eps, n, gap};
}

Interval rejitter_interval(const SpectralDecomposition& spec, const Interval& iv) {
  auto near = [&](double v) {
    for (Eigen::Index j = 0; j < spec.eigenvalues.size(); ++j)
      if (std::abs(spec.eigenvalues[j] - v) < 1e-9) return true;
    return false;
  };
  double a = iv.alpha(), b = iv.beta();
  for (int k = 0; k < 100 && near(a); ++k) a += 1e-6;
  for (int k = 0; k < 100 && near(b); ++k) b += 1e-6;
  return Interval(a, b);
}

TraceIdentityReport trace_identity_check(const Symbol& sym, double t, const LatticeBox& lattice,
                                         double eps, const TorusGrid& grid) {
  const auto op = build_operator(sym, t, lattice, eps, grid);
  const cplx lhs = op.entries.trace();
  // (2 pi)^-d times the torus rule is the plain node average.
  const int d = sym.dim();
  std::vector<double> x(d), xi(d);
  cplx rhs = 0.0;
  for (std::size_t p = 0; p < lattice.size(); ++p) {
    lattice.point(p, x.data());
    cplx row = 0.0;
    for (std::size_t q = 0; q < grid.size(); ++q) {
      grid.point(q, xi.data());
      row += sym.eval(x, xi, eps);
    }
    rhs += row / static_cast<double>(grid.size());
  }
  return {lhs.real(), rhs.real(), std::abs(lhs - rhs)};
}

Eigen::MatrixXcd apply_function_exact(const SpectralDecomposition& spec,
                                      const std::function<cplx(double)>& f) {
  Eigen::VectorXcd fl(spec.eigenvalues.size());
  for (Eigen::Index j = 0; j < fl.size(); ++j) fl[j] = f(spec.eigenvalues[j]);
  return spec.eigenvectors * fl.asDiagonal() * spec.eigenvectors.adjoint();
}

double phase_space_integral(int dim, double R, int x_cells, int xi_nodes,
                            const std::function<double(Pt, Pt)>& fn) {
  const double hx = 2 * R / x_cells;
  std::size_t nx = 1;
  for (int k = 0; k < dim; ++k) nx *= static_cast<std::size_t>(x_cells);
  std::vector<double> partial(nx, 0.0);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t p = 0; p < static_cast<std::ptrdiff_t>(nx); ++p) {
    std::vector<double> x(dim), xi(dim);
    std::vector<int> ik(dim, 0);
    std::size_t r = static_cast<std::size_t>(p);
    for (int k = dim - 1; k >= 0; --k) {
      x[k] = -R + hx * (static_cast<double>(r % x_cells) + 0.5);
      r /= x_cells;
    }
    double s = 0.0;
    for (;;) {
      for (int k = 0; k < dim; ++k) xi[k] = -kPi + kTwoPi * ik[k] / xi_nodes;
      s += fn(x, xi);
      int k = dim - 1;
      while (k >= 0 && ++ik[k] == xi_nodes) ik[k--] = 0;
      if (k < 0) break;
    }
    partial[p] = s;
  }
  double total = 0.0;
  for (double v : partial) total += v;
  return total * std::pow(hx * kTwoPi / xi_nodes, dim);
}

TraceFReport trace_f_comparison(const Symbol& sym, const ScalarFunction& f,
                                const std::vector<double>& eps_list, const TraceFOptions& opt) {
  const int d = sym.dim();
  const bool has_a1 = sym.num_terms() > 1;
  TraceFReport rep{};
  rep.int_f = phase_space_integral(d, opt.L, opt.x_cells, opt.xi_nodes, [&](Pt x, Pt xi) {
    return f(sym.term(0, x, xi).real());
  });
  rep.int_f1 = has_a1 ? phase_space_integral(d, opt.L, opt.x_cells, opt.xi_nodes,
                                             [&](Pt x, Pt xi) {
                                               return f.derivative(1, sym.term(0, x, xi).real()) *
                                                      sym.term(1, x, xi).real();
                                             })
                      : 0.0;
  std::vector<double> es, rs;
  for (double eps : eps_list) {
    const auto spec = weyl_spectrum(sym, eps, opt.L, opt.M);
    double tr = 0.0;
    for (Eigen::Index j = 0; j < spec.eigenvalues.size(); ++j) tr += f(spec.eigenvalues[j]);
    const double vol = std::pow(kTwoPi * eps, d);
    TraceFRow row{eps, tr, rep.int_f / vol, eps * rep.int_f1 / vol,
                  vol * tr - rep.int_f - eps * rep.int_f1};
    rep.rows.push_back(row);
    es.push_back(eps);
    rs.push_back(row.remainder);
  }
  rep.slope = fit_loglog(es, rs).slope;
  return rep;
}

Eigen::MatrixXcd propagator(const SpectralDecomposition& spec, double t, double eps) {
  return apply_function_exact(spec, [&](double l) { return std::exp(cplx(0, t * l / eps)); });
}

ClusterReport cluster_count_sweep(const Symbol& sym, double lambda0,
                                  const std::vector<double>& eps_list, double width_factor,
                                  double L, int M) {
  ClusterReport rep{eps_list, {}, 0};
  for (double eps : eps_list) {
    const auto spec = weyl_spectrum(sym, eps, L, M);
    const double h = 0.5 * width_factor * eps;
    std::size_t n = 0;
    for (Eigen::Index j = 0; j < spec.eigenvalues.size(); ++j)
      if (lambda0 - h <= spec.eigenvalues[j] && spec.eigenvalues[j] <= lambda0 + h) ++n;
    rep.counts.push_back(n);
    rep.max_count = std::max(rep.max_count, n);
  }
  return rep;
}

TruncationReport truncation_convergence(const Symbol& sym, const Interval& iv, double eps,
                                        const std::vector<double>& L_list, int M) {
  TruncationReport rep{L_list, {}, {}, false};
  for (double L : L_list)
    rep.counts.push_back(count_eigenvalues(weyl_spectrum(sym, eps, L, M), iv).count);
  if (rep.counts.empty()) return rep;
  // Order by L so "largest box" is well defined whatever the input order.
  std::vector<std::size_t> ord(L_list.size());
  for (std::size_t i = 0; i < ord.size(); ++i) ord[i] = i;
  std::sort(ord.begin(), ord.end(), [&](auto a, auto b) { return L_list[a] < L_list[b]; });
  const std::size_t ref = rep.counts[ord.back()];
  for (std::size_t c : rep.counts) rep.deficit.push_back(c < ref);
  rep.stable = ord.size() >= 2 && rep.counts[ord[ord.size() - 2]] == ref;
  return rep;
}

}  // namespace latweyl
