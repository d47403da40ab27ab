// Real functions of one variable with derivative access, as consumed by the functional calculus.
#pragma once

#include <functional>
#include <limits>
#include <string>
#include <vector>

namespace latweyl {

struct ScalarFunction {
  std::function<double(double)> value;
  // k-th derivative; k = 0 must agree with value.
  std::function<double(int, double)> derivative;
  // Closed hull of the support; infinite when not compactly supported.
  double support_lo = -std::numeric_limits<double>::infinity();
  double support_hi = std::numeric_limits<double>::infinity();
  std::string description;

  double operator()(double x) const { return value(x); }
  bool compact() const { return support_lo > -std::numeric_limits<double>::infinity() &&
                                support_hi < std::numeric_limits<double>::infinity(); }

  static ScalarFunction zero();
  static ScalarFunction constant(double c);
  // Polynomial sum c_k x^k.
  static ScalarFunction polynomial(std::vector<double> coeffs);
};

}  // namespace latweyl
