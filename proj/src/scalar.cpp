#include "latweyl/scalar.hpp"

#include <utility>

namespace latweyl {

ScalarFunction ScalarFunction::zero() {
  ScalarFunction f;
  f.value = [](double) { return 0.0; };
  f.derivative = [](int, double) { return 0.0; };
  f.support_lo = 0.0;
  f.support_hi = 0.0;
  f.description = "0";
  return f;
}

ScalarFunction ScalarFunction::constant(double c) {
  if (c == 0.0) return zero();
  ScalarFunction f;
  f.value = [c](double) { return c; };
  f.derivative = [c](int k, double) { return k == 0 ? c : 0.0; };
  f.description = "const";
  return f;
}

ScalarFunction ScalarFunction::polynomial(std::vector<double> coeffs) {
  ScalarFunction f;
  f.derivative = [coeffs = std::move(coeffs)](int k, double x) {
    double v = 0.0;
    for (int n = static_cast<int>(coeffs.size()) - 1; n >= k; --n) {
      double fall = 1.0;
      for (int q = 0; q < k; ++q) fall *= n - q;
      v = v * x + coeffs[n] * fall;
    }
    return v;
  };
  f.value = [d = f.derivative](double x) { return d(0, x); };
  f.description = "polynomial";
  return f;
}

}  // namespace latweyl
