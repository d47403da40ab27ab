#include "latweyl/fit.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace latweyl {

SlopeFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw std::invalid_argument("fit_loglog: size mismatch");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (y[i] == 0 || !(x[i] > 0) || !std::isfinite(y[i])) continue;
    const double lx = std::log(x[i]), ly = std::log(std::abs(y[i]));
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++n;
  }
  if (n < 2) return {std::numeric_limits<double>::quiet_NaN(), 0.0, n};
  const double den = n * sxx - sx * sx;
  const double slope = (n * sxy - sx * sy) / den;
  return {slope, (sy - slope * sx) / n, n};
}

}  // namespace latweyl
