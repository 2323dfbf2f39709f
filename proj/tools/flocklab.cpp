// flocklab: kinetic and particle flocking solvers, r -> 0 sweeps and checks.

#include <cstdio>
#include <cstdlib>
#include <exception>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <Eigen/Core>
#ifdef _OPENMP
#include <omp.h>
#endif

#include "flocklab/app.hpp"
#include "flocklab/config.hpp"
#include "flocklab/errors.hpp"

namespace {

void report(const std::string& kind, const std::string& message) {
  std::string line = message;
  for (char& c : line)
    if (c == '\n' || c == '\r') c = ' ';
  std::fprintf(stderr, "error,%s,%s\n", kind.c_str(), line.c_str());
}

void apply_thread_env() {
  const char* env = std::getenv("FLOCKLAB_THREADS");
  if (!env) return;
  const int n = std::atoi(env);
  if (n <= 0) return;
  Eigen::setNbThreads(n);
#ifdef _OPENMP
  omp_set_num_threads(n);
#endif
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kinetic and particle flocking solvers with Motsch-Tadmor alignment"};
  app.require_subcommand(1);
  app.set_version_flag("--version", FLOCKLAB_VERSION_STRING);

  std::string config;
  std::string out = ".";
  std::string r_text;

  auto* kinetic = app.add_subcommand("kinetic", "Run the phase-space solver");
  auto* particles = app.add_subcommand("particles", "Run the particle system");
  auto* sweep = app.add_subcommand("sweep", "Compare r > 0 runs with the local alignment run");
  auto* check = app.add_subcommand("check", "Run the inequality and identity checks on one configuration");
  for (auto* sub : {kinetic, particles, sweep, check}) {
    sub->add_option("--config", config, "Configuration file")->required();
    sub->add_option("--out", out, "Output directory");
  }
  sweep->add_option("--r", r_text, "Comma separated radii, e.g. \"0.4,0.2,0.1,0.05,0\"");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  apply_thread_env();
  try {
    const flocklab::RunConfig cfg = flocklab::load_config(config);
    if (kinetic->parsed()) return flocklab::cmd_kinetic(cfg, out);
    if (particles->parsed()) return flocklab::cmd_particles(cfg, out);
    if (sweep->parsed()) {
      std::optional<std::vector<double>> radii;
      if (!r_text.empty()) radii = flocklab::parse_config("[sweep]\nr_list = " + r_text + "\n").sweep.r_list;
      return flocklab::cmd_sweep(cfg, radii, out);
    }
    std::optional<std::filesystem::path> dir;
    if (check->count("--out")) dir = out;
    return flocklab::cmd_check(cfg, dir);
  } catch (const flocklab::Error& e) {
    report(e.kind(), e.what());
    const int code = flocklab::exit_code_for(e.kind());
    if (code == 2) std::fprintf(stderr, "Run with --help for more information.\n");
    return code;
  } catch (const std::exception& e) {
    report("Internal", e.what());
    return 3;
  }
}
