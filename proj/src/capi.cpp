#include "pmsm.h"

#include <exception>
#include <string>
#include <string_view>
#include <vector>

#include "pmsm/error.hpp"
#include "pmsm/runner.hpp"

static_assert(std::string_view(PMSM_VERSION) == pmsm::kVersion,
              "C header version out of step with the core library");

namespace {

thread_local std::string g_last_error;

pmsm_status map_code(pmsm::ErrorCode c) {
  using EC = pmsm::ErrorCode;
  switch (c) {
    case EC::InvalidArgument: return PMSM_ERR_INVALID_ARGUMENT;
    case EC::Config: return PMSM_ERR_CONFIG;
    case EC::Geometry: return PMSM_ERR_GEOMETRY;
    case EC::Mesh: return PMSM_ERR_MESH;
    case EC::Solver: return PMSM_ERR_SOLVER;
    case EC::Uq: return PMSM_ERR_UQ;
    case EC::Io: return PMSM_ERR_IO;
  }
  return PMSM_ERR_UNKNOWN;
}

template <typename Fn>
pmsm_status guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return PMSM_OK;
  } catch (const pmsm::Error& e) {
    g_last_error = e.what();
    return map_code(e.code());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return PMSM_ERR_UNKNOWN;
  } catch (...) {
    g_last_error = "unknown failure";
    return PMSM_ERR_UNKNOWN;
  }
}

}  // namespace

struct pmsm_model {
  pmsm::Simulator sim;
};

extern "C" {

const char* pmsm_version(void) { return PMSM_VERSION; }

const char* pmsm_last_error(void) { return g_last_error.c_str(); }

pmsm_status pmsm_model_create(const char* config_path, int refinement,
                              int harmonic_cutoff, pmsm_model** out) {
  if (!config_path || !out) {
    g_last_error = "null argument";
    return PMSM_ERR_INVALID_ARGUMENT;
  }
  *out = nullptr;
  return guarded([&] {
    const pmsm::MachineSpec spec = pmsm::load_machine_config(config_path);
    *out = new pmsm_model{pmsm::Simulator(spec, refinement, harmonic_cutoff)};
  });
}

pmsm_status pmsm_model_create_from_json(const char* json_text, int refinement,
                                        int harmonic_cutoff,
                                        pmsm_model** out) {
  if (!json_text || !out) {
    g_last_error = "null argument";
    return PMSM_ERR_INVALID_ARGUMENT;
  }
  *out = nullptr;
  return guarded([&] {
    const pmsm::MachineSpec spec = pmsm::parse_machine_config(json_text);
    *out = new pmsm_model{pmsm::Simulator(spec, refinement, harmonic_cutoff)};
  });
}

void pmsm_model_free(pmsm_model* m) { delete m; }

pmsm_status pmsm_eval_sample(const pmsm_model* m, double r0, double theta0,
                             double* out_tau_mean, double* out_thd) {
  if (!m) {
    g_last_error = "null model";
    return PMSM_ERR_INVALID_ARGUMENT;
  }
  return guarded([&] {
    const std::vector<double> q = m->sim.eval(pmsm::SampleInputs{r0, theta0});
    if (out_tau_mean) *out_tau_mean = q[0];
    if (out_thd) *out_thd = q[1];
  });
}

void pmsm_run_options_init(pmsm_run_options* opt) {
  if (!opt) return;
  const pmsm::RunConfig d;
  *opt = pmsm_run_options{};
  opt->seed = d.seed;
  opt->refinement = d.refinement;
  opt->jobs = d.jobs;
  opt->n_mc = d.n_mc;
  opt->nodes_per_dim = d.nodes_per_dim;
  opt->n_base = d.n_base;
  opt->harmonic_cutoff = d.harmonic_cutoff;
}

pmsm_status pmsm_run(const pmsm_run_options* opt) {
  if (!opt || !opt->config_path || !opt->mode || !opt->out_dir) {
    g_last_error = "config_path, mode and out_dir are required";
    return PMSM_ERR_INVALID_ARGUMENT;
  }
  return guarded([&] {
    pmsm::RunConfig cfg;
    cfg.config_path = opt->config_path;
    cfg.mode = opt->mode;
    cfg.out_dir = opt->out_dir;
    cfg.seed = opt->seed;
    cfg.refinement = opt->refinement;
    cfg.jobs = opt->jobs;
    cfg.n_mc = opt->n_mc;
    cfg.nodes_per_dim = opt->nodes_per_dim;
    cfg.n_base = opt->n_base;
    cfg.harmonic_cutoff = opt->harmonic_cutoff;
    if (opt->eps_sweep && opt->eps_sweep_len)
      cfg.eps_sweep.assign(opt->eps_sweep, opt->eps_sweep + opt->eps_sweep_len);
    cfg.resume = opt->resume != 0;
    pmsm::run(cfg);
  });
}

}  // extern "C"
