// Truncated Taylor series arithmetic in one variable.
// A Jet of order n stores c_k = f^(k)(x0)/k! for k = 0..n.
#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

namespace latweyl {

template <class T>
class Jet {
 public:
  Jet() : c_(1, T{}) {}
  explicit Jet(int order, T value = T{}) : c_(static_cast<std::size_t>(order) + 1, T{}) {
    if (order < 0) throw std::invalid_argument("Jet: negative order");
    c_[0] = value;
  }
  static Jet variable(int order, T x0) {
    Jet j(order, x0);
    if (order >= 1) j.c_[1] = T{1};
    return j;
  }

  int order() const { return static_cast<int>(c_.size()) - 1; }
  const T& operator[](int k) const { return c_[k]; }
  T& operator[](int k) { return c_[k]; }
  T value() const { return c_[0]; }

  // k-th derivative at the expansion point.
  T derivative(int k) const {
    if (k > order()) throw std::out_of_range("Jet::derivative beyond order");
    double fact = 1.0;
    for (int i = 2; i <= k; ++i) fact *= i;
    return c_[k] * fact;
  }

  // d/dx of the represented function, one order shorter.
  Jet differentiated() const {
    if (order() == 0) return Jet(0, T{});
    Jet r(order() - 1);
    for (int k = 0; k < order(); ++k) r.c_[k] = c_[k + 1] * static_cast<double>(k + 1);
    return r;
  }

  Jet truncated(int n) const {
    Jet r(n);
    for (int k = 0; k <= n && k <= order(); ++k) r.c_[k] = c_[k];
    return r;
  }

  Jet operator-() const {
    Jet r(*this);
    for (auto& v : r.c_) v = -v;
    return r;
  }
  Jet& operator+=(const Jet& o) {
    resize_min(o);
    for (int k = 0; k <= order(); ++k) c_[k] += o.c_[k];
    return *this;
  }
  Jet& operator-=(const Jet& o) {
    resize_min(o);
    for (int k = 0; k <= order(); ++k) c_[k] -= o.c_[k];
    return *this;
  }
  Jet& operator*=(const Jet& o) { return *this = *this * o; }
  Jet& operator/=(const Jet& o) { return *this = *this / o; }
  Jet& operator+=(T s) { c_[0] += s; return *this; }
  Jet& operator-=(T s) { c_[0] -= s; return *this; }
  Jet& operator*=(T s) {
    for (auto& v : c_) v *= s;
    return *this;
  }

  friend Jet operator+(Jet a, const Jet& b) { return a += b; }
  friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
  friend Jet operator+(Jet a, T s) { return a += s; }
  friend Jet operator+(T s, Jet a) { return a += s; }
  friend Jet operator-(Jet a, T s) { return a -= s; }
  friend Jet operator-(T s, const Jet& a) { return (-a) += s; }
  friend Jet operator*(Jet a, T s) { return a *= s; }
  friend Jet operator*(T s, Jet a) { return a *= s; }
  friend Jet operator/(Jet a, T s) { return a *= (T{1} / s); }

  friend Jet operator*(const Jet& a, const Jet& b) {
    const int n = std::min(a.order(), b.order());
    Jet r(n);
    for (int k = 0; k <= n; ++k) {
      T s{};
      for (int j = 0; j <= k; ++j) s += a.c_[j] * b.c_[k - j];
      r.c_[k] = s;
    }
    return r;
  }
  friend Jet operator/(const Jet& a, const Jet& b) {
    const int n = std::min(a.order(), b.order());
    Jet q(n);
    const T b0 = b.c_[0];
    for (int k = 0; k <= n; ++k) {
      T s = a.c_[k];
      for (int j = 1; j <= k; ++j) s -= b.c_[j] * q.c_[k - j];
      q.c_[k] = s / b0;
    }
    return q;
  }
  friend Jet operator/(T s, const Jet& b) { return Jet(b.order(), s) / b; }

 private:
  void resize_min(const Jet& o) {
    if (o.order() < order()) c_.resize(o.c_.size());
  }
  std::vector<T> c_;
};

template <class T>
Jet<T> exp(const Jet<T>& a) {
  const int n = a.order();
  Jet<T> e(n, std::exp(a[0]));
  for (int k = 1; k <= n; ++k) {
    T s{};
    for (int j = 1; j <= k; ++j) s += static_cast<double>(j) * a[j] * e[k - j];
    e[k] = s / static_cast<double>(k);
  }
  return e;
}

// Simultaneous sin/cos recurrences.
template <class T>
void sincos(const Jet<T>& a, Jet<T>& s, Jet<T>& c) {
  const int n = a.order();
  s = Jet<T>(n, std::sin(a[0]));
  c = Jet<T>(n, std::cos(a[0]));
  for (int k = 1; k <= n; ++k) {
    T ss{}, cc{};
    for (int j = 1; j <= k; ++j) {
      ss += static_cast<double>(j) * a[j] * c[k - j];
      cc -= static_cast<double>(j) * a[j] * s[k - j];
    }
    s[k] = ss / static_cast<double>(k);
    c[k] = cc / static_cast<double>(k);
  }
}

template <class T>
Jet<T> sin(const Jet<T>& a) {
  Jet<T> s, c;
  sincos(a, s, c);
  return s;
}

template <class T>
Jet<T> cos(const Jet<T>& a) {
  Jet<T> s, c;
  sincos(a, s, c);
  return c;
}

template <class T>
Jet<T> sqrt(const Jet<T>& a) {
  const int n = a.order();
  Jet<T> r(n, std::sqrt(a[0]));
  for (int k = 1; k <= n; ++k) {
    T s = a[k];
    for (int j = 1; j < k; ++j) s -= r[j] * r[k - j];
    r[k] = s / (2.0 * r[0]);
  }
  return r;
}

template <class T>
Jet<T> log(const Jet<T>& a) {
  const int n = a.order();
  Jet<T> l(n, std::log(a[0]));
  for (int k = 1; k <= n; ++k) {
    T s = a[k];
    for (int j = 1; j < k; ++j) s -= static_cast<double>(j) / k * l[j] * a[k - j];
    l[k] = s / a[0];
  }
  return l;
}

template <class T>
Jet<T> pow(const Jet<T>& a, int p) {
  if (p < 0) return T{1} / pow(a, -p);
  Jet<T> r(a.order(), T{1});
  Jet<T> base = a;
  while (p) {
    if (p & 1) r = r * base;
    p >>= 1;
    if (p) base = base * base;
  }
  return r;
}

using JetD = Jet<double>;
using JetC = Jet<std::complex<double>>;

inline JetC to_complex(const JetD& a) {
  JetC r(a.order());
  for (int k = 0; k <= a.order(); ++k) r[k] = a[k];
  return r;
}

}  // namespace latweyl
