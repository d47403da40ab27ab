#include <CLI11.hpp>
#include <cstdlib>
#include <iostream>
#include <map>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "latweyl/cli.hpp"

namespace lc = latweyl::cli;

namespace {

const std::map<std::string, std::string> kHelp{
    {"certify", "Sampled hypothesis checks for the configured symbol and interval"},
    {"quantize-dump", "Nonzero kernel matrix entries of the t-quantization"},
    {"spectrum", "Eigenvalues per eps, truncation and cluster checks"},
    {"trace-check", "Matrix trace against the phase-space sum on the shipped symbols"},
    {"trace-f", "tr f(P) against the two-term phase-space expansion"},
    {"weyl", "Eigenvalue counts against the phase-space volume"},
    {"dos", "Smoothed density of states against the Liouville curve"},
    {"hj", "Hamilton-Jacobi phase by characteristics"},
    {"parametrix", "Oscillatory-integral parametrix against the exact propagator"},
    {"poisson", "Lattice sums against integrals on the shipped fixtures"},
    {"statphase", "Two-dimensional stationary phase on the shipped fixtures"},
    {"hs-check", "Resolvent-integral functional calculus against eigendecomposition"},
    {"calculus-check", "Composition, change of quantization and Hermiticity suite"},
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lattice Weyl-law experiments"};
  std::string config_path, out_dir;
  std::uint64_t seed = 0;
  bool override_h = false, print_defaults = false;
  app.add_flag("--print-default-config", print_defaults, "Print the default config and exit");

  for (const auto& name : lc::subcommands()) {
    auto* sc = app.add_subcommand(name, kHelp.at(name));
    sc->add_option("-c,--config", config_path, "JSON config file")->check(CLI::ExistingFile);
    sc->add_option("--seed", seed, "Override the config seed");
    sc->add_flag("--override-hypotheses", override_h,
                 "Run even when the hypothesis certificate fails");
    sc->add_option("-o,--out-dir", out_dir, "Output directory");
  }
  app.require_subcommand(0, 1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : lc::kConfigError;
  }
  if (print_defaults) {
    std::cout << lc::default_config().dump(2) << "\n";
    return 0;
  }
  if (app.get_subcommands().empty()) {
    std::cerr << app.help();
    return lc::kConfigError;
  }

#ifdef _OPENMP
  if (const char* t = std::getenv("LATWEYL_THREADS")) {
    const int n = std::atoi(t);
    if (n > 0) omp_set_num_threads(n);
  }
#endif

  const auto* sc = app.get_subcommands().front();
  lc::RunOptions opt;
  if (sc->count("--seed")) opt.seed = seed;
  opt.override_hypotheses = override_h;
  if (sc->count("--out-dir")) opt.out_dir = out_dir;

  lc::json user = lc::json::object();
  if (!config_path.empty()) {
    try {
      user = lc::load_config_file(config_path);
    } catch (const std::exception& e) {
      std::cerr << e.what() << "\n";
      return lc::kConfigError;
    }
  }
  const auto r = lc::run(sc->get_name(), user, opt);
  for (const auto& f : r.files) std::cout << "wrote " << f << "\n";
  if (!r.message.empty()) (r.exit_code == 0 ? std::cout : std::cerr) << r.message << "\n";
  return r.exit_code;
}
