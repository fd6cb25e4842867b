#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pmsm/machine.hpp"
#include "pmsm/mesh.hpp"
#include "pmsm/torque.hpp"
#include "pmsm/uq.hpp"

namespace pmsm {

inline constexpr char kVersion[] = "0.1.0";

// Batch-run description; field presence is mode-specific.
struct RunConfig {
  std::string config_path;  // machine config (JSON, comments allowed)
  std::string mode;  // nominal | sweep | uq-mc | uq-gpc | sensitivity | compare
  std::string out_dir;
  std::uint64_t seed = 1;
  int refinement = 0;
  int jobs = 1;             // worker threads for sample evaluation
  int n_mc = 200;           // uq-mc / compare
  int nodes_per_dim = 5;    // uq-gpc / compare
  int n_base = 64;          // sensitivity
  int harmonic_cutoff = -1; // THD harmonics; -1 = all below Nyquist
  std::vector<double> eps_sweep = {0.0, 0.10, 0.25, 0.50};
  bool resume = false;      // reuse cached sample results in out_dir
};

// Slot-related cogging order per mechanical revolution.
int cogging_order(const MachineSpec& spec);

// One full-period simulation per input draw; quantities: mean torque (Nm)
// and THD (fraction). Stateless and safe to call from several threads.
class Simulator {
 public:
  static constexpr int kQoi = 2;

  Simulator(const MachineSpec& spec, int refinement, int harmonic_cutoff);

  std::vector<double> eval(const SampleInputs& s) const;    // {tau, thd}
  TorqueTrace trace(const SampleInputs& s, Spectrum* sp) const;

  const MachineSpec& spec() const { return spec_; }
  const CoupledMesh& base_mesh() const { return mesh_; }
  int refinement() const { return refinement_; }

 private:
  MachineSpec spec_;
  int refinement_;
  int harmonic_cutoff_;
  CoupledMesh mesh_;
};

// Execute one batch run, writing every artifact under cfg.out_dir.
// Throws Error on any failure.
void run(const RunConfig& cfg);

}  // namespace pmsm
