// Log-log slope fitting shared by the sweep experiments.
#pragma once

#include <vector>

namespace latweyl {

struct SlopeFit {
  double slope;
  double intercept;  // log-space; constant = exp(intercept)
  int points;
};

// Ordinary least squares of log|y| against log x. Points with y == 0 are skipped.
SlopeFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace latweyl
