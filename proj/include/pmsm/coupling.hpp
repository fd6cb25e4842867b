#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <array>
#include <vector>

#include "pmsm/assembly.hpp"
#include "pmsm/machine.hpp"
#include "pmsm/mesh.hpp"

namespace pmsm {

// One magnetostatic solve of the two-domain system at rotor step k.
struct StepResult {
  Eigen::VectorXd a;       // node-indexed potentials, Wb (Dirichlet = 0)
  Eigen::VectorXd lambda;  // interface multipliers, A (one per contour node)
  double lambda_residual;  // relative mismatch of the two lambda recoveries
  double energy;           // stored magnetic energy, J
  Eigen::Vector3d flux;    // per-phase flux linkage X^T a, Wb-turns
  double torque_band;      // Maxwell-stress torque over the airgap band, Nm
};

// Quasi-static rotating solver. The rotor sub-mesh turns by exactly three
// interface nodes per step; the node-pairing constraint between the two
// contour rings is eliminated exactly, leaving one SPD system per step.
// A full saddle-point solve (explicit Lagrange multiplier block) is kept
// as a slow cross-check.
class RotatingSolver {
 public:
  RotatingSolver(const CoupledMesh& mesh, const Materials& mat);

  void set_winding(const Eigen::MatrixXd& X);     // n_nodes x 3
  void set_constant_source(const Eigen::VectorXd& f_nodes);

  int steps_per_period() const { return mesh_->steps_per_mech_period(); }
  double rotor_angle(int k) const;

  StepResult solve_step(int k, const Eigen::Vector3d& currents) const;

  // Saddle-point solve with the multiplier kept explicit (SparseLU on the
  // symmetric indefinite block system). Same k convention.
  StepResult solve_step_block(int k, const Eigen::Vector3d& currents) const;

  const CoupledMesh& mesh() const { return *mesh_; }
  const Materials& materials() const { return mat_; }

 private:
  Eigen::VectorXd source_nodes(const Eigen::Vector3d& currents) const;
  void finish(const std::vector<double>& coords, StepResult* res) const;

  const CoupledMesh* mesh_;
  Materials mat_;
  Eigen::MatrixXd X_;        // winding coupling (may be 0 x 0)
  Eigen::VectorXd f_const_;  // node-indexed constant source

  // dof-indexed stiffness pieces (free dofs per domain)
  std::vector<Eigen::Triplet<double>> Ks_fixed_, Kr_;
  std::vector<int> stator_contour_dof_;   // j -> stator dof
  std::vector<int> rotor_contour_dof_;    // i -> rotor dof
  std::vector<int> rotor_contour_index_;  // rotor dof -> i (or -1)
  std::vector<int> rotor_interior_;       // rotor dof -> compact id (or -1)
  int n_interior_ = 0;
};

// Per-step quantities of one simulated mechanical period (S = M/3 steps).
struct PeriodRaw {
  double dt = 0.0;                        // s
  double omega_m = 0.0;                   // rad/s
  std::vector<double> energy;             // J, size S
  std::vector<double> torque_band;        // Nm, size S
  std::vector<std::array<double, 3>> currents;  // A
  std::vector<std::array<double, 3>> flux;      // Wb-turns
  double max_lambda_residual = 0.0;
  int steps() const { return static_cast<int>(energy.size()); }
};

// Balanced three-phase currents at step k of S per mechanical period.
Eigen::Vector3d phase_currents(const MachineSpec& spec, int k, int steps);

// Simulate exactly one mechanical period on an (already morphed) mesh.
// `store_solutions`, when non-null, receives the node potentials per step.
PeriodRaw run_period(const CoupledMesh& mesh, const MachineSpec& spec,
                     std::vector<Eigen::VectorXd>* store_solutions = nullptr);

}  // namespace pmsm
