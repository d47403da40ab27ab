#include "latweyl/core.hpp"

#include <algorithm>
#include <array>
#include <cfloat>
#include <climits>
#include <cmath>

#include "latweyl/expr.hpp"
#include "latweyl/rng.hpp"

namespace latweyl {

LatticeBox::LatticeBox(int dim, double eps, double halfwidth) : dim_(dim), eps_(eps), L_(halfwidth) {
  if (dim < 1) throw ConfigError("LatticeBox: dim must be positive");
  if (!(eps > 0)) throw ConfigError("LatticeBox: eps must be positive");
  if (!(halfwidth >= 0)) throw ConfigError("LatticeBox: halfwidth must be nonnegative");
  // Tolerate L/eps landing a hair below an integer in floating point.
  half_ = static_cast<int>(std::floor(halfwidth / eps + 1e-9));
  n_ = 2 * half_ + 1;
  double total = std::pow(static_cast<double>(n_), dim);
  if (total > 1e9) throw ConfigError("LatticeBox: too many points");
  size_ = 1;
  for (int k = 0; k < dim; ++k) size_ *= static_cast<std::size_t>(n_);
}

void LatticeBox::index(std::size_t flat, int* idx) const {
  for (int k = dim_ - 1; k >= 0; --k) {
    idx[k] = static_cast<int>(flat % n_);
    flat /= n_;
  }
}

std::size_t LatticeBox::flat(const int* idx) const {
  std::size_t f = 0;
  for (int k = 0; k < dim_; ++k) f = f * n_ + static_cast<std::size_t>(idx[k]);
  return f;
}

void LatticeBox::point(std::size_t flat, double* x) const {
  for (int k = dim_ - 1; k >= 0; --k) {
    x[k] = coord(static_cast<int>(flat % n_));
    flat /= n_;
  }
}

std::vector<double> LatticeBox::point(std::size_t flat) const {
  std::vector<double> x(dim_);
  point(flat, x.data());
  return x;
}

std::size_t LatticeBox::index_of(Pt x) const {
  if (static_cast<int>(x.size()) != dim_) throw std::invalid_argument("index_of: dimension");
  std::vector<int> idx(dim_);
  for (int k = 0; k < dim_; ++k) {
    const double r = x[k] / eps_;
    const long i = std::lround(r);
    if (std::abs(r - i) > 1e-9 || i < -half_ || i > half_)
      throw std::out_of_range("index_of: not a box point");
    idx[k] = static_cast<int>(i + half_);
  }
  return flat(idx.data());
}

TorusGrid::TorusGrid(int dim, int M) : dim_(dim), M_(M) {
  if (dim < 1) throw ConfigError("TorusGrid: dim must be positive");
  if (M < 1) throw ConfigError("TorusGrid: M must be positive");
  size_ = 1;
  for (int k = 0; k < dim; ++k) size_ *= static_cast<std::size_t>(M);
}

double TorusGrid::weight() const { return std::pow(kTwoPi / M_, dim_); }

void TorusGrid::point(std::size_t flat, double* xi) const {
  for (int k = dim_ - 1; k >= 0; --k) {
    xi[k] = node(static_cast<int>(flat % M_));
    flat /= M_;
  }
}

OrderFunction OrderFunction::constant_one() {
  OrderFunction m;
  m.eval = [](Pt, Pt) { return 1.0; };
  m.C = 1.0;
  m.M = 0;
  m.description = "1";
  return m;
}

OrderFunction OrderFunction::japanese_power(int k) {
  if (k == 0) return constant_one();
  OrderFunction m;
  m.eval = [k](Pt x, Pt) {
    double r2 = 0;
    for (double v : x) r2 += v * v;
    return std::pow(1.0 + r2, k);
  };
  m.C = std::pow(2.0, std::abs(k));
  m.M = 2 * std::abs(k);
  m.description = "(1+|x|^2)^" + std::to_string(k);
  return m;
}

TemperingReport check_tempering(const OrderFunction& m, int dim, int samples, double x_halfwidth,
                                std::uint64_t seed) {
  double worst = 0;
  std::vector<double> x(dim), y(dim), xi(dim), mu(dim);
  std::uint64_t ctr = 0;
  for (int s = 0; s < samples; ++s) {
    double d2 = 0;
    for (int k = 0; k < dim; ++k) {
      x[k] = x_halfwidth * (2 * counter_uniform(seed, 1, ctr++) - 1);
      y[k] = x_halfwidth * (2 * counter_uniform(seed, 1, ctr++) - 1);
      xi[k] = kPi * (2 * counter_uniform(seed, 1, ctr++) - 1);
      mu[k] = kPi * (2 * counter_uniform(seed, 1, ctr++) - 1);
      d2 += (x[k] - y[k]) * (x[k] - y[k]);
    }
    const double bound = m.C * std::pow(1.0 + d2, 0.5 * m.M) * m(y, mu);
    worst = std::max(worst, m(x, xi) / bound);
  }
  return {worst, worst <= 1.0 + 1e-12};
}

Symbol::Symbol(std::string name, int dim, std::vector<SymbolTerm> terms, OrderFunction m,
               bool is_real)
    : name_(std::move(name)),
      dim_(dim),
      terms_(std::make_shared<const std::vector<SymbolTerm>>(std::move(terms))),
      order_(std::move(m)),
      is_real_(is_real) {
  if (dim < 1) throw ConfigError("Symbol: dim must be positive");
  if (terms_->empty()) throw ConfigError("Symbol: needs at least one term");
  for (const auto& t : *terms_)
    if (!t.value) throw ConfigError("Symbol: term without value callback");
}

double reduce_angle(double xi) {
  double r = xi - kTwoPi * std::floor((xi + kPi) / kTwoPi);
  if (r >= kPi) r -= kTwoPi;
  if (r < -kPi) r += kTwoPi;
  return r;
}

cplx Symbol::eval(Pt x, Pt xi, double eps) const {
  std::array<double, 8> buf{};
  std::vector<double> heap;
  double* red = buf.data();
  if (dim_ > 8) {
    heap.resize(dim_);
    red = heap.data();
  }
  for (int k = 0; k < dim_; ++k) red[k] = reduce_angle(xi[k]);
  Pt r(red, dim_);
  cplx sum = 0;
  double p = 1.0;
  for (const auto& t : *terms_) {
    sum += p * t.value(x, r);
    p *= eps;
  }
  return sum;
}

cplx Symbol::term(int j, Pt x, Pt xi) const { return (*terms_)[j].value(x, xi); }

int Symbol::analytic_order() const {
  int r = INT_MAX;
  for (const auto& t : *terms_) r = std::min(r, t.deriv ? t.deriv_order : 0);
  return r;
}

namespace {

// Finite-difference step for a derivative with r orders still to be taken numerically.
double fd_step(int r, double coord) {
  const double base = r <= 1 ? 1e-4 : std::pow(DBL_EPSILON, 1.0 / (4 + r));
  return base * std::max(1.0, std::abs(coord));
}

}  // namespace

cplx Symbol::derivative(int j, Pt x, Pt xi, Idx ax, Idx axi) const {
  const SymbolTerm& t = (*terms_)[j];
  int n = 0;
  for (int v : ax) n += v;
  for (int v : axi) n += v;
  if (n == 0) return t.value(x, xi);
  const int avail = t.deriv ? t.deriv_order : 0;
  if (t.deriv && n <= avail) return t.deriv(x, xi, ax, axi);

  // Peel one derivative off the last variable carrying one and apply a
  // 4th-order central stencil to the lower-order derivative.
  std::vector<int> bx(ax.begin(), ax.end()), bxi(axi.begin(), axi.end());
  std::vector<double> px(x.begin(), x.end()), pxi(xi.begin(), xi.end());
  double* var = nullptr;
  for (int k = dim_ - 1; k >= 0 && !var; --k)
    if (bxi[k] > 0) {
      --bxi[k];
      var = &pxi[k];
    }
  for (int k = dim_ - 1; k >= 0 && !var; --k)
    if (bx[k] > 0) {
      --bx[k];
      var = &px[k];
    }
  const double c = *var;
  const double h = fd_step(n - avail, c);
  auto g = [&](double off) {
    *var = c + off;
    return derivative(j, px, pxi, bx, bxi);
  };
  const cplx r = (-g(2 * h) + 8.0 * g(h) - 8.0 * g(-h) + g(-2 * h)) / (12.0 * h);
  *var = c;
  return r;
}

Symbol Symbol::with_name(std::string name) const {
  Symbol s(*this);
  s.name_ = std::move(name);
  return s;
}

Symbol Symbol::with_period_tested(bool tested) const {
  Symbol s(*this);
  s.period_tested_ = tested;
  return s;
}

Symbol Symbol::leading() const { return truncated(1); }

Symbol Symbol::truncated(int num_terms) const {
  if (num_terms < 1) throw std::invalid_argument("truncated: need at least one term");
  std::vector<SymbolTerm> t(terms_->begin(),
                            terms_->begin() + std::min<std::size_t>(num_terms, terms_->size()));
  Symbol s(name_, dim_, std::move(t), order_, is_real_);
  s.period_tested_ = period_tested_;
  return s;
}

Symbol linear_combination(const Symbol& a, cplx alpha, const Symbol& b, cplx beta) {
  if (a.dim() != b.dim()) throw std::invalid_argument("linear_combination: dimension mismatch");
  const int J = std::max(a.num_terms(), b.num_terms());
  std::vector<SymbolTerm> terms;
  for (int j = 0; j < J; ++j) {
    const bool ha = j < a.num_terms(), hb = j < b.num_terms();
    SymbolTerm t;
    t.value = [a, b, alpha, beta, j, ha, hb](Pt x, Pt xi) {
      cplx v = 0;
      if (ha) v += alpha * a.term(j, x, xi);
      if (hb) v += beta * b.term(j, x, xi);
      return v;
    };
    t.deriv = [a, b, alpha, beta, j, ha, hb](Pt x, Pt xi, Idx ax, Idx axi) {
      cplx v = 0;
      if (ha) v += alpha * a.derivative(j, x, xi, ax, axi);
      if (hb) v += beta * b.derivative(j, x, xi, ax, axi);
      return v;
    };
    t.deriv_order = INT_MAX;
    terms.push_back(std::move(t));
  }
  const bool real = a.is_real() && b.is_real() && alpha.imag() == 0 && beta.imag() == 0;
  return Symbol("(" + a.name() + ")+(" + b.name() + ")", a.dim(), std::move(terms),
                a.order_function(), real);
}

Interval::Interval(double alpha, double beta) : alpha_(alpha), beta_(beta) {
  if (!(alpha < beta)) throw ConfigError("Interval: need alpha < beta");
}

void for_each_phase_point(int dim, double R, int x_nodes, int xi_nodes,
                          const std::function<void(Pt, Pt)>& fn) {
  std::vector<double> x(dim), xi(dim);
  std::vector<int> ix(dim, 0), ik(dim, 0);
  const double hx = x_nodes > 1 ? 2 * R / (x_nodes - 1) : 0.0;
  for (;;) {
    for (int k = 0; k < dim; ++k) x[k] = x_nodes > 1 ? -R + hx * ix[k] : 0.0;
    std::fill(ik.begin(), ik.end(), 0);
    for (;;) {
      for (int k = 0; k < dim; ++k) xi[k] = -kPi + kTwoPi * ik[k] / xi_nodes;
      fn(x, xi);
      int k = dim - 1;
      while (k >= 0 && ++ik[k] == xi_nodes) ik[k--] = 0;
      if (k < 0) break;
    }
    int k = dim - 1;
    while (k >= 0 && ++ix[k] == x_nodes) ix[k--] = 0;
    if (k < 0) break;
  }
}

PeriodicityReport check_periodicity(const Symbol& sym, int sample_count, double tol,
                                    double x_halfwidth, std::uint64_t seed) {
  if (sample_count < 1) throw std::invalid_argument("check_periodicity: sample_count >= 1");
  const int d = sym.dim();
  std::vector<double> x(d), xi(d), sh(d);
  double worst = 0;
  std::uint64_t ctr = 0;
  for (int s = 0; s < sample_count; ++s) {
    for (int k = 0; k < d; ++k) {
      x[k] = x_halfwidth * (2 * counter_uniform(seed, 2, ctr++) - 1);
      xi[k] = kPi * (2 * counter_uniform(seed, 2, ctr++) - 1);
    }
    for (int j = 0; j < sym.num_terms(); ++j) {
      const cplx base = sym.term(j, x, xi);
      for (int k = 0; k < d; ++k) {
        sh = xi;
        sh[k] += kTwoPi;
        worst = std::max(worst, std::abs(sym.term(j, x, sh) - base));
      }
    }
  }
  return {worst, worst <= tol};
}

EllipticReport check_elliptic_shifted(const Symbol& sym, const SamplingSpec& grid,
                                      const std::vector<double>& eps_list) {
  const int d = sym.dim();
  double inf = INFINITY;
  const cplx I(0, 1);
  for_each_phase_point(d, grid.x_halfwidth, grid.x_nodes_for(d), grid.xi_nodes_for(d),
                       [&](Pt x, Pt xi) {
                         const double m = sym.order_function()(x, xi);
                         for (double e : eps_list)
                           inf = std::min(inf, std::abs(sym.eval(x, xi, e) + I) / m);
                       });
  return {inf};
}

EssBoundReport check_ess_bound(const Symbol& sym, const Interval& J, double R,
                               const SamplingSpec& grid) {
  if (!(R > 0)) throw std::invalid_argument("check_ess_bound: R > 0 required");
  const int d = sym.dim();
  const double Rout = std::max(2 * R, R + 4.0);
  const int nx = grid.x_nodes_for(d), nxi = grid.xi_nodes_for(d);
  double inf = INFINITY;
  std::vector<double> x(d), xi(d);
  if (d == 1) {
    for (int i = 0; i < nx; ++i) {
      const double r = R + (Rout - R) * i / std::max(1, nx - 1);
      for (double sgn : {-1.0, 1.0}) {
        x[0] = sgn * r;
        for (int k = 0; k < nxi; ++k) {
          xi[0] = -kPi + kTwoPi * k / nxi;
          inf = std::min(inf, sym.term(0, x, xi).real());
        }
      }
    }
  } else {
    for_each_phase_point(d, Rout, nx, nxi, [&](Pt xp, Pt xip) {
      double r2 = 0;
      for (double v : xp) r2 += v * v;
      if (r2 >= R * R) inf = std::min(inf, sym.term(0, xp, xip).real());
    });
  }
  return {inf, inf > J.beta()};
}

RealnessReport check_realness(const Symbol& sym, const SamplingSpec& grid, double tol) {
  const int d = sym.dim();
  double worst = 0;
  for_each_phase_point(d, grid.x_halfwidth, grid.x_nodes_for(d), grid.xi_nodes_for(d),
                       [&](Pt x, Pt xi) {
                         for (int j = 0; j < sym.num_terms(); ++j)
                           worst = std::max(worst, std::abs(sym.term(j, x, xi).imag()));
                       });
  return {worst, worst <= tol};
}

// ---------------------------------------------------------------------------
// Registry

namespace {

std::vector<std::string> variable_names(int dim) {
  std::vector<std::string> v;
  if (dim == 1) {
    v = {"x", "xi"};
  } else {
    for (int k = 1; k <= dim; ++k) v.push_back("x" + std::to_string(k));
    for (int k = 1; k <= dim; ++k) v.push_back("xi" + std::to_string(k));
  }
  return v;
}

SymbolTerm expression_term(const std::string& text, int dim) {
  const int nv = 2 * dim;
  DiffExpr e(Expr::parse(text, variable_names(dim)), nv);
  SymbolTerm t;
  t.value = [e, dim](Pt x, Pt xi) {
    std::array<double, 16> v{};
    for (int k = 0; k < dim; ++k) {
      v[k] = x[k];
      v[dim + k] = xi[k];
    }
    return cplx(e.eval(std::span<const double>(v.data(), 2 * dim)), 0.0);
  };
  t.deriv = [e, dim](Pt x, Pt xi, Idx ax, Idx axi) {
    std::array<double, 16> v{};
    std::array<int, 16> c{};
    for (int k = 0; k < dim; ++k) {
      v[k] = x[k];
      v[dim + k] = xi[k];
      c[k] = ax[k];
      c[dim + k] = axi[k];
    }
    return cplx(e.eval_derivative(std::span<const double>(v.data(), 2 * dim),
                                  std::span<const int>(c.data(), 2 * dim)),
                0.0);
  };
  t.deriv_order = INT_MAX;
  return t;
}

// Multivariate polynomial in x with exact derivatives of every order.
struct Poly {
  std::vector<std::pair<std::vector<int>, double>> monos;

  double eval(Pt x, Idx c) const {
    double s = 0;
    for (const auto& [e, coef] : monos) {
      double v = coef;
      for (std::size_t k = 0; k < e.size() && v != 0; ++k) {
        if (c[k] > e[k]) {
          v = 0;
          break;
        }
        for (int q = 0; q < c[k]; ++q) v *= (e[k] - q);
        for (int q = 0; q < e[k] - c[k]; ++q) v *= x[k];
      }
      s += v;
    }
    return s;
  }
};

// |x|^2 and (|x|^2 - w^2)^2 expanded into monomials.
Poly quadratic_poly(int dim, double c) {
  Poly p;
  for (int k = 0; k < dim; ++k) {
    std::vector<int> e(dim, 0);
    e[k] = 2;
    p.monos.push_back({e, c});
  }
  return p;
}

Poly double_well_poly(int dim, double c, double w) {
  Poly p;
  for (int i = 0; i < dim; ++i) {
    std::vector<int> e(dim, 0);
    e[i] = 4;
    p.monos.push_back({e, c});
    for (int j = i + 1; j < dim; ++j) {
      std::vector<int> f(dim, 0);
      f[i] = 2;
      f[j] = 2;
      p.monos.push_back({f, 2 * c});
    }
    std::vector<int> g(dim, 0);
    g[i] = 2;
    p.monos.push_back({g, -2 * c * w * w});
  }
  p.monos.push_back({std::vector<int>(dim, 0), c * w * w * w * w});
  return p;
}

// a_0 = sum_j 2(1 - cos xi_j) + V(x) with V polynomial.
SymbolTerm lattice_kinetic_plus(int dim, Poly V) {
  SymbolTerm t;
  t.value = [dim, V](Pt x, Pt xi) {
    double s = 0;
    for (int k = 0; k < dim; ++k) s += 2.0 * (1.0 - std::cos(xi[k]));
    std::array<int, 16> zero{};
    return cplx(s + V.eval(x, std::span<const int>(zero.data(), dim)), 0.0);
  };
  t.deriv = [dim, V](Pt x, Pt xi, Idx ax, Idx axi) {
    int nx = 0, nxi = 0, axis = -1, axes = 0;
    for (int k = 0; k < dim; ++k) {
      nx += ax[k];
      nxi += axi[k];
      if (axi[k] > 0) {
        axis = k;
        ++axes;
      }
    }
    if (nx > 0 && nxi > 0) return cplx(0.0);
    if (nxi > 0) {
      if (axes > 1) return cplx(0.0);
      const int n = axi[axis];
      return cplx(-2.0 * std::cos(xi[axis] + n * kPi / 2), 0.0);
    }
    return cplx(V.eval(x, ax), 0.0);
  };
  t.deriv_order = INT_MAX;
  return t;
}

double num_param(const ParamMap& p, const std::string& key, double def, bool required = false) {
  auto it = p.find(key);
  if (it == p.end()) {
    if (required) throw ConfigError("symbol parameter '" + key + "' is required");
    return def;
  }
  if (!std::holds_alternative<double>(it->second))
    throw ConfigError("symbol parameter '" + key + "' must be a number");
  return std::get<double>(it->second);
}

std::string str_param(const ParamMap& p, const std::string& key, bool required) {
  auto it = p.find(key);
  if (it == p.end()) {
    if (required) throw ConfigError("symbol parameter '" + key + "' is required");
    return {};
  }
  if (!std::holds_alternative<std::string>(it->second))
    throw ConfigError("symbol parameter '" + key + "' must be an expression string");
  return std::get<std::string>(it->second);
}

void allow_only(const ParamMap& p, std::initializer_list<const char*> keys,
                const std::string& name) {
  for (const auto& [k, v] : p) {
    bool ok = false;
    for (const char* a : keys) ok |= k == a;
    if (!ok) throw ConfigError("symbol '" + name + "': unknown parameter '" + k + "'");
  }
}

int dim_param(const ParamMap& p) {
  const double d = num_param(p, "d", 1.0);
  if (d < 1 || d > 3 || d != std::floor(d)) throw ConfigError("symbol parameter 'd' must be 1, 2 or 3");
  return static_cast<int>(d);
}

SymbolTerm parsed_term(const std::string& text, int dim) {
  try {
    return expression_term(text, dim);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

}  // namespace

Symbol expression_symbol(const std::string& name, int dim, const std::vector<std::string>& terms,
                         OrderFunction m, bool is_real) {
  std::vector<SymbolTerm> t;
  for (const auto& s : terms) t.push_back(parsed_term(s, dim));
  return Symbol(name, dim, std::move(t), std::move(m), is_real);
}

std::vector<std::string> builtin_symbol_names() {
  return {"lattice_laplacian_plus_quadratic", "cosine_double_well", "x_only", "xi_only",
          "expression"};
}

Symbol builtin_symbol(const std::string& name, const ParamMap& params) {
  std::vector<SymbolTerm> terms;
  OrderFunction m = OrderFunction::constant_one();
  int dim = 1;
  if (name == "lattice_laplacian_plus_quadratic") {
    allow_only(params, {"c", "d", "a1"}, name);
    dim = dim_param(params);
    const double c = num_param(params, "c", 1.0);
    if (!(c > 0)) throw ConfigError("lattice_laplacian_plus_quadratic: c must be positive");
    terms.push_back(lattice_kinetic_plus(dim, quadratic_poly(dim, c)));
    m = OrderFunction::japanese_power(1);
  } else if (name == "cosine_double_well") {
    allow_only(params, {"c", "w", "d", "a1"}, name);
    dim = dim_param(params);
    const double c = num_param(params, "c", 1.0), w = num_param(params, "w", 1.0);
    if (!(c > 0)) throw ConfigError("cosine_double_well: c must be positive");
    terms.push_back(lattice_kinetic_plus(dim, double_well_poly(dim, c, w)));
    m = OrderFunction::japanese_power(2);
  } else if (name == "x_only" || name == "xi_only") {
    allow_only(params, {"f", "d", "a1", "m_power"}, name);
    dim = dim_param(params);
    const std::string f = str_param(params, "f", true);
    // Parse with only the admissible variable family so stray dependence is rejected.
    std::vector<std::string> vars = variable_names(dim);
    const bool xonly = name == "x_only";
    for (int k = 0; k < dim; ++k) (xonly ? vars[dim + k] : vars[k]) = "\x01";
    try {
      Expr::parse(f, vars);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string(name) + ": " + e.what());
    }
    terms.push_back(parsed_term(f, dim));
    m = OrderFunction::japanese_power(static_cast<int>(num_param(params, "m_power", 0.0)));
  } else if (name == "expression") {
    allow_only(params, {"a0", "d", "a1", "m_power"}, name);
    dim = dim_param(params);
    terms.push_back(parsed_term(str_param(params, "a0", true), dim));
    m = OrderFunction::japanese_power(static_cast<int>(num_param(params, "m_power", 0.0)));
  } else {
    throw ConfigError("unknown symbol '" + name + "'");
  }
  if (const std::string a1 = str_param(params, "a1", false); !a1.empty())
    terms.push_back(parsed_term(a1, dim));
  return Symbol(name, dim, std::move(terms), std::move(m), true);
}

}  // namespace latweyl
