// pmsm-sim: torque waveform, spectrum and UQ runs for the eccentric PMSM.
// Thin shell over the C API in pmsm.h.

#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pmsm.h"

int main(int argc, char** argv) {
  CLI::App app{
      "2D PMSM torque simulator with rotor-eccentricity uncertainty "
      "quantification"};
  app.set_version_flag("--version", pmsm_version());

  std::string config, mode = "nominal", out = "out";
  std::uint64_t seed = 1;
  int jobs = 1, refinement = 0, n_mc = 200, nodes = 5, n_base = 64;
  int harmonics = -1;
  std::vector<double> eps;
  bool resume = false;

  app.add_option("--config", config, "machine config JSON (comments allowed)")
      ->required()
      ->check(CLI::ExistingFile);
  app.add_option("--mode", mode, "run mode")
      ->check(CLI::IsMember(
          {"nominal", "sweep", "uq-mc", "uq-gpc", "sensitivity", "compare"}));
  app.add_option("--out", out, "output directory (all files go here)");
  app.add_option("--seed", seed, "random seed");
  app.add_option("--jobs", jobs, "worker threads (outputs independent of this)")
      ->check(CLI::PositiveNumber);
  app.add_option("--refinement", refinement, "mesh refinement level")
      ->check(CLI::Range(0, 4));
  app.add_option("--samples", n_mc, "Monte Carlo sample count")
      ->check(CLI::PositiveNumber);
  app.add_option("--nodes", nodes, "collocation nodes per input dimension")
      ->check(CLI::PositiveNumber);
  app.add_option("--n-base", n_base, "Saltelli base sample count")
      ->check(CLI::PositiveNumber);
  app.add_option("--harmonics", harmonics,
                 "highest harmonic in the THD (-1: all below Nyquist)");
  app.add_option("--eps", eps,
                 "relative eccentricities for sweep mode (default 0 0.1 0.25 0.5)");
  app.add_flag("--resume", resume, "reuse cached sample results in --out");

  CLI11_PARSE(app, argc, argv);

  pmsm_run_options opt;
  pmsm_run_options_init(&opt);
  opt.config_path = config.c_str();
  opt.mode = mode.c_str();
  opt.out_dir = out.c_str();
  opt.seed = seed;
  opt.refinement = refinement;
  opt.jobs = jobs;
  opt.n_mc = n_mc;
  opt.nodes_per_dim = nodes;
  opt.n_base = n_base;
  opt.harmonic_cutoff = harmonics;
  if (!eps.empty()) {
    opt.eps_sweep = eps.data();
    opt.eps_sweep_len = eps.size();
  }
  opt.resume = resume ? 1 : 0;

  const pmsm_status st = pmsm_run(&opt);
  if (st != PMSM_OK) {
    std::fprintf(stderr, "pmsm-sim: error (%d): %s\n", static_cast<int>(st),
                 pmsm_last_error());
    return 1;
  }
  return 0;
}
