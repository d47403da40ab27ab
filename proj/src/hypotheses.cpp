#include "latweyl/hypotheses.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

#include "latweyl/weyl.hpp"

namespace latweyl {

const CheckResult& HypothesisCertificate::check(const std::string& name) const {
  for (const auto& c : checks)
    if (c.name == name) return c;
  throw std::out_of_range("certificate has no check " + name);
}

HypothesisCertificate certify(const Symbol& sym, const Interval& iv, double box_halfwidth,
                              const CertifyConfig& cfg) {
  HypothesisCertificate cert;
  cert.symbol = sym.name();
  cert.interval = iv;
  cert.box_halfwidth = box_halfwidth;
  const double L = box_halfwidth;

  const auto per = check_periodicity(sym, cfg.periodicity_samples, cfg.periodicity_tol,
                                     cfg.grid.x_halfwidth, cfg.grid.seed);
  cert.checks.push_back({"periodicity", per.max_violation, cfg.periodicity_tol, per.pass,
                         "max |a_j(x, xi + 2 pi e_k) - a_j(x, xi)| <= threshold on random samples"});

  const auto ell = check_elliptic_shifted(sym, cfg.grid, cfg.eps_list);
  cert.checks.push_back({"ellipticity_shifted", ell.inf_ratio, cfg.ellipticity_threshold,
                         ell.inf_ratio >= cfg.ellipticity_threshold,
                         "inf |a + i| / m >= threshold on the sampling grid, all eps"});

  const auto ess = check_ess_bound(sym, iv, L, cfg.grid);
  cert.checks.push_back({"ess_bound", ess.inf_outside, iv.beta(), ess.pass,
                         "inf a_0 over sampled |x| > box > beta"});

  const auto real = check_realness(sym, cfg.grid, cfg.realness_tol);
  cert.checks.push_back({"realness", real.max_imag, cfg.realness_tol, real.pass,
                         "max |Im a_j| <= threshold on the sampling grid"});

  // Empty shells (endpoint outside the range of a_0) are non-critical.
  double grad = std::numeric_limits<double>::infinity();
  for (double e : {iv.alpha(), iv.beta()}) {
    const auto s = shell_gradient(sym, e, L, cfg.shell_cells);
    if (s.cells > 0) grad = std::min(grad, s.min_gradient);
  }
  cert.checks.push_back({"noncritical_endpoints", grad, cfg.critical_threshold,
                         grad > cfg.critical_threshold,
                         "min |grad a_0| on cells crossed by the endpoint shells > threshold"});

  const double m = cfg.truncation_margin;
  double margin_value = -std::numeric_limits<double>::infinity();
  if (L - m > 0) {
    const auto inner = check_ess_bound(sym, iv, L - m, cfg.grid);
    margin_value = inner.inf_outside - iv.beta();
  }
  cert.checks.push_back({"truncation_margin", margin_value, m, margin_value > m,
                         "inf a_0 over sampled |x| > box - margin exceeds beta by more than margin"});

  cert.overall = std::all_of(cert.checks.begin(), cert.checks.end(),
                             [](const CheckResult& c) { return c.pass; });
  return cert;
}

}  // namespace latweyl
