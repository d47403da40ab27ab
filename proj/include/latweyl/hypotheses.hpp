// One certificate bundling the sampled hypothesis proxies for a (symbol, interval, box) triple.
#pragma once

#include <string>
#include <vector>

#include "latweyl/core.hpp"

namespace latweyl {

struct CertifyConfig {
  SamplingSpec grid;  // ellipticity and realness samples
  int periodicity_samples = 2000;
  double periodicity_tol = 1e-10;
  std::vector<double> eps_list{0.1, 0.05, 0.025, 0.0125};
  double ellipticity_threshold = 0.05;
  double realness_tol = 1e-12;
  double critical_threshold = 0.1;
  int shell_cells = 400;
  double truncation_margin = 1.0;
};

struct CheckResult {
  std::string name;
  double value;
  double threshold;
  bool pass;
  std::string rule;  // how value is compared with threshold, and what was sampled
};

struct HypothesisCertificate {
  std::string symbol;
  Interval interval{0.0, 1.0};
  double box_halfwidth = 0.0;
  std::vector<CheckResult> checks;  // periodicity, ellipticity_shifted, ess_bound, realness,
                                    // noncritical_endpoints, truncation_margin
  bool overall = false;

  const CheckResult& check(const std::string& name) const;
};

// Failures are recorded, never thrown. Deterministic for fixed seeds.
HypothesisCertificate certify(const Symbol& sym, const Interval& iv, double box_halfwidth,
                              const CertifyConfig& cfg = {});

}  // namespace latweyl
