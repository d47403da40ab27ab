#include "latweyl/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "latweyl/dynamics.hpp"
#include "latweyl/fit.hpp"
#include "latweyl/fixtures.hpp"
#include "latweyl/hypotheses.hpp"
#include "latweyl/quantize.hpp"
#include "latweyl/spectral.hpp"
#include "latweyl/weyl.hpp"

namespace latweyl::cli {

const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names{
      "certify", "quantize-dump", "spectrum", "trace-check", "trace-f", "weyl", "dos",
      "hj",      "parametrix",    "poisson",  "statphase",   "hs-check", "calculus-check"};
  return names;
}

json default_config() {
  return json{
      {"schema_version", kSchemaVersion},
      {"symbol", {{"name", "lattice_laplacian_plus_quadratic"}, {"params", json::object()}}},
      {"interval", {0.5, 2.5}},
      {"eps", {0.1, 0.05, 0.025, 0.0125}},
      // policy "fixed" uses L; "auto" picks the smallest L on a 0.5 grid with
      // a_0 > beta + margin for |x| > L - margin.
      {"lattice", {{"policy", "fixed"}, {"L", 3.0}, {"margin", 1.0}}},
      {"torus_M", 64},
      {"seed", 2024},
      {"output", {{"dir", "."}, {"stem", ""}}},
      {"hypotheses",
       {{"override", false},
        {"sampling_x_halfwidth", 4.0},
        {"periodicity_samples", 2000},
        {"periodicity_tol", 1e-10},
        {"ellipticity_threshold", 0.05},
        {"realness_tol", 1e-12},
        {"critical_threshold", 0.1},
        {"truncation_margin", 1.0}}},
      {"quadrature",
       {{"x_halfwidth", 3.0}, {"x_cells", 2000}, {"xi_cells", 1500}, {"mc_samples", 10000000}}},
      {"f", {{"center", 1.5}, {"halfwidth", 1.0}, {"plateau", 0.3}}},
      {"quantize_dump", {{"t", 0.5}, {"entry_threshold", 1e-14}, {"defect_tol", 1e-10}}},
      {"spectrum",
       {{"truncation_extra", 1.0},
        {"cluster_lambda0", 1.5},
        {"cluster_width", 1.0},
        {"cluster_max", 4}}},
      {"trace_check", {{"rel_tol", 1e-10}}},
      {"trace_f", {{"x_cells", 3000}, {"xi_nodes", 1024}, {"slope_min", 1.6}}},
      {"weyl",
       {{"sandwich_delta", 0.1},
        {"truncation_extra", 1.0},
        {"slope_min", 0.8},
        {"mc_rel_tol", 1e-4}}},
      {"dos",
       {{"psi_halfwidth", 0.5},
        {"lambda_min", 1.0},
        {"lambda_max", 2.0},
        {"lambda_points", 21},
        {"h", 1e-3},
        {"slope_min", 0.8},
        {"deviation_eps", 0.025},
        {"max_deviation", 0.15}}},
      {"hj",
       {{"t_max", 0.1},
        {"t_steps", 8},
        {"x_min", -2.0},
        {"x_max", 2.0},
        {"x_points", 81},
        {"xi_nodes", 32},
        {"max_dt", 2.5e-3},
        {"auto_shrink", true},
        {"tol", 1e-5}}},
      {"parametrix",
       {{"eps", {0.1, 0.05, 0.025}},
        {"t", {0.0, 0.0125, 0.025, 0.0375, 0.05}},
        {"f", {{"center", 0.0}, {"halfwidth", 16.0}, {"plateau", 0.0}}},
        {"L", 6.0},
        {"M", 128},
        {"chi_plateau", 4.4},
        {"chi_support", 5.6},
        {"max_dt", 0.0125},
        {"slope_min", 0.8},
        {"t0_eps", 0.05},
        {"t0_max_error", 1e-3}}},
      {"poisson", {{"eps", {0.1, 0.05, 0.025}}, {"zero_phase_slope_min", 4.0}}},
      {"statphase",
       {{"eps", {0.1, 0.05, 0.025, 0.0125}},
        {"slope_min", 1.8},
        {"fresnel_eps", 0.01},
        {"fresnel_tol", 1e-6}}},
      {"hs_check", {{"order", 5}, {"sigma", 0.2}, {"step", 0.0025}, {"tol", 1e-6}}},
  };
}

namespace {

bool same_kind(const json& a, const json& b) {
  if (a.is_number() && b.is_number()) return !(a.is_number_integer() && b.is_number_float());
  return a.type() == b.type();
}

void merge_into(json& target, const json& user, const std::string& path) {
  if (!user.is_object()) throw ConfigError("config: " + (path.empty() ? "root" : path) +
                                           " must be an object");
  for (auto it = user.begin(); it != user.end(); ++it) {
    const std::string key = path.empty() ? it.key() : path + "." + it.key();
    if (!target.contains(it.key())) throw ConfigError("config: unknown key " + key);
    json& slot = target[it.key()];
    if (key == "symbol.params") {
      if (!it.value().is_object()) throw ConfigError("config: symbol.params must be an object");
      slot = it.value();
    } else if (slot.is_object()) {
      merge_into(slot, it.value(), key);
    } else if (slot.is_array()) {
      if (!it.value().is_array()) throw ConfigError("config: " + key + " must be an array");
      for (const auto& v : it.value())
        if (!v.is_number()) throw ConfigError("config: " + key + " must hold numbers");
      slot = it.value();
    } else {
      if (!same_kind(slot, it.value()))
        throw ConfigError("config: " + key + " has the wrong type (expected " +
                          std::string(slot.type_name()) + ")");
      slot = it.value();
    }
  }
}

}  // namespace

json merge_config(const json& defaults, const json& user) {
  json out = defaults;
  merge_into(out, user, "");
  if (out["schema_version"].get<int>() != kSchemaVersion)
    throw ConfigError("config: unsupported schema_version");
  return out;
}

json load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  try {
    return json::parse(in, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string csv_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

// JSON has no inf/nan; they become strings so the sidecar stays lossless.
json num(double v) {
  if (std::isfinite(v)) return v;
  return csv_number(v);
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void add(std::vector<std::string> r) { rows.push_back(std::move(r)); }
  std::string str() const {
    std::ostringstream o;
    auto line = [&](const std::vector<std::string>& r) {
      for (std::size_t k = 0; k < r.size(); ++k) o << (k ? "," : "") << csv_field(r[k]);
      o << "\n";
    };
    line(header);
    for (const auto& r : rows) line(r);
    return o.str();
  }
};

std::string b2s(bool b) { return b ? "true" : "false"; }

struct Assertion {
  std::string name;
  double value, threshold;
  std::string rule;
  bool pass;
};

struct Outcome {
  Table table;
  json summary = json::object();
  std::vector<Assertion> assertions;
};

void assert_le(Outcome& o, const std::string& name, double v, double thr) {
  o.assertions.push_back({name, v, thr, "<=", v <= thr});
}
void assert_ge(Outcome& o, const std::string& name, double v, double thr) {
  o.assertions.push_back({name, v, thr, ">=", v >= thr});
}
void assert_true(Outcome& o, const std::string& name, bool v) {
  o.assertions.push_back({name, v ? 1.0 : 0.0, 1.0, "true", v});
}

std::vector<double> num_list(const json& j) { return j.get<std::vector<double>>(); }

// The resolved inputs shared by the symbol-based subcommands.
struct Context {
  json cfg;
  Symbol sym;
  Interval iv;
  std::vector<double> eps;
  double L;
  int M;
  std::uint64_t seed;
};

ParamMap to_params(const json& j) {
  ParamMap p;
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (it.value().is_number())
      p[it.key()] = it.value().get<double>();
    else if (it.value().is_string())
      p[it.key()] = it.value().get<std::string>();
    else
      throw ConfigError("config: symbol.params." + it.key() + " must be a number or a string");
  }
  return p;
}

BumpFunction bump_from(const json& j) {
  return BumpFunction(j["center"].get<double>(), j["halfwidth"].get<double>(),
                      j["plateau"].get<double>());
}

double resolve_L(const json& cfg, const Symbol& sym, const Interval& iv) {
  const auto& lat = cfg["lattice"];
  const std::string policy = lat["policy"].get<std::string>();
  const double margin = lat["margin"].get<double>();
  if (policy == "fixed") {
    const double L = lat["L"].get<double>();
    if (!(L > 0)) throw ConfigError("config: lattice.L must be positive");
    return L;
  }
  if (policy != "auto") throw ConfigError("config: lattice.policy must be fixed or auto");
  SamplingSpec grid;
  for (double L = std::max(0.5, margin + 0.5); L <= 20.0; L += 0.5) {
    const auto r = check_ess_bound(sym, Interval(iv.alpha(), iv.beta() + margin), L - margin, grid);
    if (r.inf_outside > iv.beta() + margin) return L;
  }
  throw HypothesisError("lattice: no L <= 20 gives a_0 > beta + margin outside the box");
}

Context make_context(const json& cfg) {
  const auto& s = cfg["symbol"];
  Symbol sym = builtin_symbol(s["name"].get<std::string>(), to_params(s["params"]));
  const auto ivs = num_list(cfg["interval"]);
  if (ivs.size() != 2) throw ConfigError("config: interval needs two numbers");
  Interval iv(ivs[0], ivs[1]);
  auto eps = num_list(cfg["eps"]);
  if (eps.empty()) throw ConfigError("config: eps schedule is empty");
  for (double e : eps)
    if (!(e > 0 && e < 1)) throw ConfigError("config: eps values must lie in (0, 1)");
  const int M = cfg["torus_M"].get<int>();
  if (M < 2) throw ConfigError("config: torus_M must be at least 2");
  const double L = resolve_L(cfg, sym, iv);
  return {cfg, sym, iv, eps, L, M, cfg["seed"].get<std::uint64_t>()};
}

CertifyConfig certify_config(const json& cfg) {
  const auto& h = cfg["hypotheses"];
  CertifyConfig c;
  c.grid.x_halfwidth = h["sampling_x_halfwidth"].get<double>();
  c.grid.seed = cfg["seed"].get<std::uint64_t>();
  c.periodicity_samples = h["periodicity_samples"].get<int>();
  c.periodicity_tol = h["periodicity_tol"].get<double>();
  c.eps_list = num_list(cfg["eps"]);
  c.ellipticity_threshold = h["ellipticity_threshold"].get<double>();
  c.realness_tol = h["realness_tol"].get<double>();
  c.critical_threshold = h["critical_threshold"].get<double>();
  c.truncation_margin = h["truncation_margin"].get<double>();
  return c;
}

json certificate_json(const HypothesisCertificate& c) {
  json checks = json::array();
  for (const auto& k : c.checks)
    checks.push_back({{"name", k.name},
                      {"value", num(k.value)},
                      {"threshold", num(k.threshold)},
                      {"pass", k.pass},
                      {"rule", k.rule}});
  return {{"symbol", c.symbol},
          {"interval", {c.interval.alpha(), c.interval.beta()}},
          {"box_halfwidth", c.box_halfwidth},
          {"checks", checks},
          {"overall", c.overall},
          {"note", "sampled proxies of the analytic hypotheses"}};
}

VolumeQuad volume_quad(const Context& c) {
  const auto& q = c.cfg["quadrature"];
  VolumeQuad v;
  v.x_halfwidth = q["x_halfwidth"].get<double>();
  v.x_cells = q["x_cells"].get<int>();
  v.xi_cells = q["xi_cells"].get<int>();
  v.mc_samples = q["mc_samples"].get<std::uint64_t>();
  v.seed = c.seed;
  return v;
}

std::string join_point(const std::vector<double>& p) {
  std::string s;
  for (std::size_t k = 0; k < p.size(); ++k) s += (k ? ";" : "") + csv_number(p[k]);
  return s;
}

json volume_json(const VolumeResult& v) {
  return {{"interval", {v.interval.alpha(), v.interval.beta()}},
          {"value", v.value},
          {"refinement_delta", v.refinement_delta},
          {"mc_value", v.mc_value},
          {"mc_stderr", v.mc_stderr},
          {"method", v.method},
          {"x_halfwidth", v.quad.x_halfwidth},
          {"x_cells", v.quad.x_cells},
          {"xi_cells", v.quad.xi_cells},
          {"mc_samples", v.quad.mc_samples}};
}

// ---- subcommands ----

Outcome run_quantize_dump(const Context& c) {
  const auto& q = c.cfg["quantize_dump"];
  const double t = q["t"].get<double>(), thr = q["entry_threshold"].get<double>();
  if (!(t >= 0 && t <= 1)) throw ConfigError("config: quantize_dump.t must lie in [0, 1]");
  Outcome o;
  o.table.header = {"eps", "row", "col", "x", "y", "re", "im"};
  const TorusGrid grid(c.sym.dim(), c.M);
  json per = json::array();
  for (double e : c.eps) {
    const LatticeBox box(c.sym.dim(), e, c.L);
    const auto A = build_operator(c.sym, t, box, e, grid);
    for (Eigen::Index i = 0; i < A.entries.rows(); ++i)
      for (Eigen::Index j = 0; j < A.entries.cols(); ++j) {
        const cplx v = A.entries(i, j);
        if (std::abs(v) <= thr) continue;
        o.table.add({csv_number(e), std::to_string(i), std::to_string(j),
                     join_point(box.point(i)), join_point(box.point(j)), csv_number(v.real()),
                     csv_number(v.imag())});
      }
    per.push_back({{"eps", e},
                   {"dim", box.size()},
                   {"hermitian_defect", A.hermitian_defect},
                   {"max_abs_entry", A.max_abs_entry()},
                   {"alias_warnings", A.alias_warnings}});
    if (c.sym.is_real() && t == 0.5)
      assert_le(o, "hermitian_defect_relative eps=" + csv_number(e),
                A.hermitian_defect / std::max(A.max_abs_entry(), 1e-300),
                q["defect_tol"].get<double>());
  }
  o.summary["matrices"] = per;
  o.summary["t"] = t;
  return o;
}

Outcome run_spectrum(const Context& c) {
  const auto& s = c.cfg["spectrum"];
  Outcome o;
  o.table.header = {"eps", "index", "eigenvalue"};
  json per = json::array();
  for (double e : c.eps) {
    const auto spec = weyl_spectrum(c.sym, e, c.L, c.M);
    for (Eigen::Index j = 0; j < spec.eigenvalues.size(); ++j)
      o.table.add({csv_number(e), std::to_string(j), csv_number(spec.eigenvalues[j])});
    const auto cnt = count_eigenvalues(spec, c.iv);
    const double extra = s["truncation_extra"].get<double>();
    const auto tr = truncation_convergence(c.sym, c.iv, e, {c.L, c.L + extra}, c.M);
    const double scale = std::max(1.0, spec.eigenvalues.cwiseAbs().maxCoeff());
    per.push_back({{"eps", e},
                   {"dim", spec.dim()},
                   {"count", cnt.count},
                   {"boundary_gap", num(cnt.boundary_gap)},
                   {"residual", spec.residual},
                   {"unitarity_defect", spec.unitarity_defect},
                   {"symmetrization_defect", spec.symmetrization_defect},
                   {"count_at_L_plus_extra", tr.counts[1]},
                   {"truncation_stable", tr.stable}});
    assert_le(o, "residual_relative eps=" + csv_number(e), spec.residual / scale, 1e-8);
    assert_le(o, "unitarity eps=" + csv_number(e), spec.unitarity_defect, 1e-8);
    assert_true(o, "truncation_stable eps=" + csv_number(e), tr.stable);
  }
  o.summary["spectra"] = per;
  const auto cl = cluster_count_sweep(c.sym, s["cluster_lambda0"].get<double>(), c.eps,
                                      s["cluster_width"].get<double>(), c.L, c.M);
  o.summary["cluster_counts"] = cl.counts;
  assert_le(o, "cluster_max_count", static_cast<double>(cl.max_count),
            s["cluster_max"].get<double>());
  return o;
}

Outcome run_trace_check(const json& cfg) {
  const double tol = cfg["trace_check"]["rel_tol"].get<double>();
  Outcome o;
  o.table.header = {"name", "d", "t", "eps", "L", "M", "lhs", "rhs", "abs_err", "rel_err"};
  for (const auto& tc : fixtures::trace_identity_cases()) {
    const int d = tc.symbol.dim();
    const auto r = trace_identity_check(tc.symbol, tc.t, LatticeBox(d, tc.eps, tc.L), tc.eps,
                                        TorusGrid(d, tc.M));
    const double rel = r.abs_err / std::abs(r.lhs);
    o.table.add({tc.name, std::to_string(d), csv_number(tc.t), csv_number(tc.eps),
                 csv_number(tc.L), std::to_string(tc.M), csv_number(r.lhs), csv_number(r.rhs),
                 csv_number(r.abs_err), csv_number(rel)});
    assert_le(o, "trace_identity " + tc.name, rel, tol);
  }
  return o;
}

Outcome run_trace_f(const Context& c) {
  const auto& s = c.cfg["trace_f"];
  TraceFOptions opt;
  opt.L = c.L;
  opt.M = c.M;
  opt.x_cells = s["x_cells"].get<int>();
  opt.xi_nodes = s["xi_nodes"].get<int>();
  const auto r = trace_f_comparison(c.sym, bump_from(c.cfg["f"]).as_function(), c.eps, opt);
  Outcome o;
  o.table.header = {"eps", "trace", "leading", "correction", "remainder"};
  for (const auto& row : r.rows)
    o.table.add({csv_number(row.eps), csv_number(row.trace), csv_number(row.leading),
                 csv_number(row.correction), csv_number(row.remainder)});
  o.summary["int_f_a0"] = r.int_f;
  o.summary["int_fprime_a0_a1"] = r.int_f1;
  o.summary["slope"] = num(r.slope);
  assert_ge(o, "remainder_slope", r.slope, s["slope_min"].get<double>());
  return o;
}

Outcome run_weyl(const Context& c) {
  const auto& s = c.cfg["weyl"];
  WeylConfig w;
  w.L = c.L;
  w.M = c.M;
  w.quad = volume_quad(c);
  w.sandwich_delta = s["sandwich_delta"].get<double>();
  w.truncation_extra = s["truncation_extra"].get<double>();
  w.critical_threshold = c.cfg["hypotheses"]["critical_threshold"].get<double>();
  const auto r = weyl_experiment(c.sym, c.iv, c.eps, w);
  Outcome o;
  o.table.header = {"eps", "N", "scaled_count", "volume", "remainder"};
  json rows = json::array();
  for (const auto& row : r.rows) {
    o.table.add({csv_number(row.eps), std::to_string(row.N), csv_number(row.scaled),
                 csv_number(row.volume), csv_number(row.remainder)});
    rows.push_back({{"eps", row.eps},
                    {"sandwich", row.sandwich},
                    {"truncation_stable", row.truncation_stable}});
    assert_true(o, "sandwich eps=" + csv_number(row.eps), row.sandwich);
    assert_true(o, "truncation_stable eps=" + csv_number(row.eps), row.truncation_stable);
  }
  o.summary["rows"] = rows;
  o.summary["slope"] = num(r.slope);
  o.summary["constant"] = num(r.constant);
  o.summary["volume"] = volume_json(r.volume);
  o.summary["lower_volume"] = volume_json(r.lower);
  o.summary["upper_volume"] = volume_json(r.upper);
  o.summary["sandwich_delta"] = w.sandwich_delta;
  assert_ge(o, "remainder_slope", r.slope, s["slope_min"].get<double>());
  if (w.quad.mc_samples > 0 && r.volume.value > 0)
    assert_le(o, "volume_mc_agreement_relative",
              std::abs(r.volume.mc_value - r.volume.value) / r.volume.value,
              s["mc_rel_tol"].get<double>());
  return o;
}

Outcome run_dos(const Context& c) {
  const auto& s = c.cfg["dos"];
  const int n = s["lambda_points"].get<int>();
  if (n < 2) throw ConfigError("config: dos.lambda_points must be at least 2");
  const double lo = s["lambda_min"].get<double>(), hi = s["lambda_max"].get<double>();
  std::vector<double> lam(n);
  for (int i = 0; i < n; ++i) lam[i] = lo + (hi - lo) * i / (n - 1);
  const SmoothingKernel psi(s["psi_halfwidth"].get<double>());
  const auto f = bump_from(c.cfg["f"]);
  for (double l : {lo, hi}) {
    const auto sh = shell_gradient(c.sym, l, c.cfg["quadrature"]["x_halfwidth"].get<double>());
    if (sh.cells > 0 && sh.min_gradient < c.cfg["hypotheses"]["critical_threshold"].get<double>())
      throw HypothesisError("dos: lambda grid endpoint " + csv_number(l) + " is near-critical");
  }
  DosConfig d;
  d.L = c.L;
  d.M = c.M;
  d.quad = volume_quad(c);
  d.quad.mc_samples = 0;
  d.h = s["h"].get<double>();
  const auto r = dos_vs_liouville_sweep(c.sym, f.as_function(), psi, lam, c.eps, d);
  Outcome o;
  o.table.header = {"eps", "lambda", "scaled_I1", "target", "liouville"};
  json devs = json::array();
  double min_scaled = INFINITY;
  for (const auto& row : r.rows) {
    for (std::size_t i = 0; i < lam.size(); ++i) {
      o.table.add({csv_number(row.eps), csv_number(lam[i]), csv_number(row.scaled[i]),
                   csv_number(r.target[i]), csv_number(r.liouville[i])});
      min_scaled = std::min(min_scaled, row.scaled[i]);
    }
    devs.push_back({{"eps", row.eps}, {"deviation", row.deviation}});
  }
  o.summary["deviations"] = devs;
  o.summary["slope"] = num(r.slope);
  o.summary["psi_halfwidth"] = psi.support_halfwidth();
  assert_ge(o, "deviation_slope", r.slope, s["slope_min"].get<double>());
  const double de = s["deviation_eps"].get<double>();
  for (const auto& row : r.rows)
    if (std::abs(row.eps - de) <= 1e-12 * de)
      assert_le(o, "deviation eps=" + csv_number(de), row.deviation,
                s["max_deviation"].get<double>());
  if (f.plateau() >= 0) assert_ge(o, "positivity_min_scaled_I1", min_scaled, -1e-10);
  return o;
}

Outcome run_hj(const Context& c) {
  const auto& s = c.cfg["hj"];
  const int nt = s["t_steps"].get<int>(), nx = s["x_points"].get<int>();
  const int nxi = s["xi_nodes"].get<int>();
  if (nt < 1 || nx < 2 || nxi < 1) throw ConfigError("config: hj grid sizes too small");
  const double tmax = s["t_max"].get<double>();
  if (!(tmax > 0)) throw ConfigError("config: hj.t_max must be positive");
  std::vector<double> ts(nt + 1), xs(nx), xis(nxi);
  for (int k = 0; k <= nt; ++k) ts[k] = tmax * k / nt;
  const double x0 = s["x_min"].get<double>(), x1 = s["x_max"].get<double>();
  for (int i = 0; i < nx; ++i) xs[i] = x0 + (x1 - x0) * i / (nx - 1);
  const TorusGrid tg(1, nxi);
  for (int k = 0; k < nxi; ++k) xis[k] = tg.node(k);
  HJOptions opt;
  opt.max_dt = s["max_dt"].get<double>();
  opt.auto_shrink = s["auto_shrink"].get<bool>();
  const auto ps = solve_hamilton_jacobi(c.sym, ts, xs, xis, opt);
  const int d = ps.dim;
  Outcome o;
  o.table.header = {"t", "x", "xi", "phi", "periodic_part", "gradx", "jacobian"};
  std::vector<double> xp(d), xip(d), g(d);
  for (std::size_t ti = 0; ti < ps.times.size(); ++ti)
    for (std::size_t xf = 0; xf < ps.x_count(); ++xf)
      for (std::size_t q = 0; q < ps.xi_count(); ++q) {
        const std::size_t nd = ps.node(ti, xf, q);
        ps.x_point(xf, xp.data());
        ps.xi_point(q, xip.data());
        for (int k = 0; k < d; ++k) g[k] = ps.gradx[nd * d + k];
        o.table.add({csv_number(ps.times[ti]), join_point(xp), join_point(xip),
                     csv_number(ps.phi[nd]), csv_number(ps.periodic_part[nd]), join_point(g),
                     csv_number(ps.jacobian[nd])});
      }
  const double tol = s["tol"].get<double>();
  const double res = ps.times.size() >= 2 ? hj_residual(c.sym, ps) : 0.0;
  const double per = check_phase_periodicity(ps).max_violation;
  o.summary["horizon"] = ps.horizon;
  o.summary["requested_horizon"] = ps.requested_horizon;
  o.summary["horizon_shrunk"] = ps.horizon < ps.requested_horizon;
  o.summary["max_gradx_periodic"] = ps.max_gradx_periodic;
  o.summary["residual"] = res;
  o.summary["periodicity_violation"] = per;
  assert_le(o, "hj_residual", res, tol);
  assert_le(o, "phase_periodicity", per, tol);
  return o;
}

Outcome run_parametrix(const Context& c) {
  const auto& s = c.cfg["parametrix"];
  ParametrixConfig p;
  p.L = s["L"].get<double>();
  p.M = s["M"].get<int>();
  p.chi_plateau = s["chi_plateau"].get<double>();
  p.chi_support = s["chi_support"].get<double>();
  p.hj.max_dt = s["max_dt"].get<double>();
  const auto eps = num_list(s["eps"]);
  const auto r = parametrix_error_sweep(c.sym, bump_from(s["f"]).as_function(), num_list(s["t"]),
                                        eps, p);
  Outcome o;
  o.table.header = {"eps", "t", "error", "norm"};
  for (const auto& row : r.rows)
    o.table.add({csv_number(row.eps), csv_number(row.t), csv_number(row.error),
                 csv_number(row.norm)});
  json sup = json::array();
  for (std::size_t k = 0; k < r.eps.size(); ++k)
    sup.push_back({{"eps", r.eps[k]}, {"sup_error", r.sup_error[k]}});
  o.summary["sup_error"] = sup;
  o.summary["slope"] = num(r.slope);
  o.summary["norm_constant"] = r.norm_constant;
  o.summary["amplitude_depth"] = "mu_0";
  assert_ge(o, "sup_error_slope", r.slope, s["slope_min"].get<double>());
  const double e0 = s["t0_eps"].get<double>();
  for (const auto& row : r.rows)
    if (row.t == 0.0 && std::abs(row.eps - e0) <= 1e-12 * e0)
      assert_le(o, "t0_error eps=" + csv_number(e0), row.error, s["t0_max_error"].get<double>());
  return o;
}

Outcome run_poisson(const json& cfg) {
  const auto& s = cfg["poisson"];
  const auto eps = num_list(s["eps"]);
  Outcome o;
  o.table.header = {"name", "eps", "k", "sum_re", "sum_im", "integral_re", "integral_im",
                    "remainder", "bound", "tail_estimate", "max_phase_slope", "pass"};
  for (const auto& pc : fixtures::poisson_cases()) {
    std::vector<double> rem;
    for (double e : eps) {
      const auto r = poisson_compare(pc.input, e, pc.k);
      o.table.add({pc.name, csv_number(e), std::to_string(pc.k), csv_number(r.sum.real()),
                   csv_number(r.sum.imag()), csv_number(r.integral.real()),
                   csv_number(r.integral.imag()), csv_number(r.remainder), csv_number(r.bound),
                   csv_number(r.tail_estimate), csv_number(r.max_phase_slope), b2s(r.pass)});
      rem.push_back(r.remainder);
      assert_true(o, "remainder_within_bound " + pc.name + " eps=" + csv_number(e), r.pass);
    }
    if (pc.zero_phase && eps.size() >= 2) {
      const double sl = fit_loglog(eps, rem).slope;
      o.summary["zero_phase_slope"] = num(sl);
      assert_ge(o, "zero_phase_slope " + pc.name, sl, s["zero_phase_slope_min"].get<double>());
    }
  }
  json g = json::array();
  for (double a : {0.5, 1.0, 2.0}) {
    const auto r = gaussian_poisson_check(a);
    g.push_back({{"a", a}, {"lattice_sum", r.lattice_sum}, {"dual_sum", r.dual_sum},
                 {"abs_err", r.abs_err}});
    assert_le(o, "gaussian_theta_identity a=" + csv_number(a), r.abs_err, 1e-12);
  }
  o.summary["gaussian_theta"] = g;
  return o;
}

Outcome run_statphase(const json& cfg) {
  const auto& s = cfg["statphase"];
  Outcome o;
  o.table.header = {"name", "eps", "integral_re", "integral_im", "leading_re", "leading_im",
                    "remainder"};
  json cases = json::array();
  for (const auto& sc : fixtures::stationary_phase_cases()) {
    const auto eps = sc.gaussian ? std::vector<double>{s["fresnel_eps"].get<double>()}
                                 : num_list(s["eps"]);
    const auto r = stationary_phase_check(sc.input, eps);
    for (const auto& row : r.rows)
      o.table.add({sc.name, csv_number(row.eps), csv_number(row.integral.real()),
                   csv_number(row.integral.imag()), csv_number(row.leading.real()),
                   csv_number(row.leading.imag()), csv_number(row.remainder)});
    cases.push_back({{"name", sc.name},
                     {"critical_point", {r.critical[0], r.critical[1]}},
                     {"signature", r.signature},
                     {"hessian_det", r.det},
                     {"A", {r.A.real(), r.A.imag()}},
                     {"slope", num(r.slope)}});
    if (sc.gaussian) {
      const double err = std::abs(r.rows[0].integral - fixtures::gaussian_fresnel(eps[0]));
      assert_le(o, "fresnel_closed_form " + sc.name, err, s["fresnel_tol"].get<double>());
    } else {
      assert_le(o, "constant_2pi " + sc.name, std::abs(r.A - kTwoPi), 1e-12);
      assert_ge(o, "remainder_slope " + sc.name, r.slope, s["slope_min"].get<double>());
    }
  }
  o.summary["cases"] = cases;
  return o;
}

Outcome run_hs_check(const json& cfg) {
  const auto& s = cfg["hs_check"];
  const auto f = fixtures::hs_function();
  const auto aae = build_aae(f.as_function(), s["order"].get<int>(), s["sigma"].get<double>(),
                             s["step"].get<double>());
  Outcome o;
  o.table.header = {"name", "dim", "frobenius_error", "hermitian_defect"};
  for (const auto& hc : fixtures::hs_cases()) {
    const auto spec = eigendecompose(hc.A, hc.name);
    const auto exact = apply_function_exact(spec, [&](double l) { return cplx(f(l)); });
    const Eigen::MatrixXcd hs = hs_apply(hc.A, aae);
    const double err = (hs - exact).norm();
    o.table.add({hc.name, std::to_string(hc.A.rows()), csv_number(err),
                 csv_number(hermitian_defect(hs))});
    assert_le(o, "frobenius " + hc.name, err, s["tol"].get<double>());
  }
  o.summary["aae_constant"] = aae.constant();
  o.summary["sigma"] = aae.sigma();
  return o;
}

Outcome run_calculus_check() {
  Outcome o;
  o.table.header = {"check", "order", "value", "threshold", "pass"};
  for (const auto& r : fixtures::calculus_suite()) {
    o.table.add({r.check, std::to_string(r.order), csv_number(r.value), csv_number(r.threshold),
                 b2s(r.pass)});
    o.assertions.push_back({r.check + (r.order ? " N=" + std::to_string(r.order) : ""), r.value,
                            r.threshold, r.check.find("slope") != std::string::npos ? ">=" : "<=",
                            r.pass});
  }
  return o;
}

bool symbol_based(const std::string& sub) {
  return sub == "certify" || sub == "quantize-dump" || sub == "spectrum" || sub == "trace-f" ||
         sub == "weyl" || sub == "dos" || sub == "hj" || sub == "parametrix";
}

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << text;
}

}  // namespace

RunResult run(const std::string& sub, const json& user_config, const RunOptions& opt) {
  RunResult res;
  json cfg;
  try {
    if (std::find(subcommands().begin(), subcommands().end(), sub) == subcommands().end())
      throw ConfigError("unknown subcommand " + sub);
    cfg = merge_config(default_config(), user_config);
    if (opt.seed) cfg["seed"] = *opt.seed;
    if (opt.override_hypotheses) cfg["hypotheses"]["override"] = true;
    if (opt.out_dir) cfg["output"]["dir"] = *opt.out_dir;
  } catch (const std::exception& e) {
    return {kConfigError, e.what(), {}};
  }
  const bool override_h = cfg["hypotheses"]["override"].get<bool>();
  std::string stem = cfg["output"]["stem"].get<std::string>();
  if (stem.empty()) stem = sub;
  const std::filesystem::path dir = cfg["output"]["dir"].get<std::string>();

  json certificate = nullptr;
  Outcome out;
  bool cert_ok = true;
  try {
    if (symbol_based(sub)) {
      const Context ctx = make_context(cfg);
      const auto cert = certify(ctx.sym, ctx.iv, ctx.L, certify_config(cfg));
      certificate = certificate_json(cert);
      cert_ok = cert.overall;
      std::string failing;
      for (const auto& k : cert.checks)
        if (!k.pass) failing += (failing.empty() ? "" : ", ") + k.name;
      if (sub == "certify") {
        out.table.header = {"check", "value", "threshold", "pass", "rule"};
        for (const auto& k : cert.checks)
          out.table.add({k.name, csv_number(k.value), csv_number(k.threshold), b2s(k.pass),
                         k.rule});
        out.summary["resolved_L"] = ctx.L;
        if (!cert.overall) res.message = "hypothesis checks failed: " + failing;
      } else {
        if (!cert.overall && !override_h)
          return {kHypothesisFailed,
                  "hypothesis checks failed: " + failing + " (use --override-hypotheses)",
                  {}};
        if (sub == "quantize-dump") out = run_quantize_dump(ctx);
        if (sub == "spectrum") out = run_spectrum(ctx);
        if (sub == "trace-f") out = run_trace_f(ctx);
        if (sub == "weyl") out = run_weyl(ctx);
        if (sub == "dos") out = run_dos(ctx);
        if (sub == "hj") out = run_hj(ctx);
        if (sub == "parametrix") out = run_parametrix(ctx);
        out.summary["resolved_L"] = ctx.L;
      }
    } else {
      if (sub == "trace-check") out = run_trace_check(cfg);
      if (sub == "poisson") out = run_poisson(cfg);
      if (sub == "statphase") out = run_statphase(cfg);
      if (sub == "hs-check") out = run_hs_check(cfg);
      if (sub == "calculus-check") out = run_calculus_check();
    }
  } catch (const ConfigError& e) {
    return {kConfigError, e.what(), {}};
  } catch (const HypothesisError& e) {
    return {kHypothesisFailed, e.what(), {}};
  } catch (const std::exception& e) {
    return {kNumericalAbort, e.what(), {}};
  }

  json assertions = json::array();
  bool all = true;
  std::string failed;
  for (const auto& a : out.assertions) {
    assertions.push_back({{"name", a.name},
                          {"value", num(a.value)},
                          {"threshold", num(a.threshold)},
                          {"rule", a.rule},
                          {"pass", a.pass}});
    if (!a.pass) {
      all = false;
      failed += (failed.empty() ? "" : ", ") + a.name;
    }
  }
  json side = {{"schema_version", kSchemaVersion},
               {"subcommand", sub},
               {"config", cfg},
               {"certificate", certificate},
               {"hypotheses_override", override_h && !cert_ok},
               {"summary", out.summary},
               {"assertions", assertions},
               {"pass", all && cert_ok}};
  try {
    std::filesystem::create_directories(dir);
    const auto csv = dir / (stem + ".csv"), js = dir / (stem + ".json");
    write_file(csv, out.table.str());
    write_file(js, side.dump(2) + "\n");
    res.files = {csv.string(), js.string()};
  } catch (const std::exception& e) {
    return {kNumericalAbort, std::string("output: ") + e.what(), {}};
  }
  if (sub == "certify" && !cert_ok) {
    res.exit_code = kHypothesisFailed;
    return res;
  }
  res.exit_code = all ? kOk : kAssertionFailed;
  res.message = all ? "all asserted properties pass" : "asserted properties failed: " + failed;
  if (!cert_ok) res.message += " (hypothesis override in effect)";
  return res;
}

}  // namespace latweyl::cli
