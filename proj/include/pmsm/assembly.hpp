#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <vector>

#include "pmsm/machine.hpp"
#include "pmsm/mesh.hpp"

namespace pmsm {

constexpr double kMu0 = 1.25663706212e-6;  // H/m (CODATA 2018)

// Piecewise-constant reluctivity per region plus the axial length used to
// scale the 2D operator. DoFs are a_i = A_z(node_i) * axial_length, in Wb.
struct Materials {
  double axial_length = 1.0;
  double nu_air = 1.0 / kMu0;
  double nu_iron = 1.0 / kMu0;
  double nu_magnet = 1.0 / kMu0;
  double remanence = 0.0;  // magnet B_r, T

  static Materials from_spec(const MachineSpec& spec);
  static Materials uniform(double nu, double axial_length);

  double nu_of(Region r) const;
};

// P1 shape-function gradients on a triangle; returns the signed area.
// b[i] = dN_i/dx, c[i] = dN_i/dy.
double p1_gradients(const double* coords, const Triangle& tri, double b[3],
                    double c[3]);

// 3x3 element stiffness for reluctivity nu and axial length lz:
// K_ij = (nu/lz) * (b_i b_j + c_i c_j) * area.
void element_stiffness(const double* coords, const Triangle& tri, double nu,
                       double lz, double K[3][3]);

// Which elements a stiffness assembly covers.
enum class StiffnessPart {
  RotorAll,     // every rotor-domain element
  StatorFixed,  // stator elements outside the morphing airgap band
  StatorBand,   // only the stator-side airgap band
};

// Node-indexed stiffness triplets over the selected elements.
std::vector<Eigen::Triplet<double>> assemble_stiffness(
    const CoupledMesh& mesh, const std::vector<double>& coords,
    const Materials& mat, StiffnessPart part);

// Node-indexed source for a uniform current density J [A/m^2] over every
// Coil element (annulus oracle; the machine winding uses winding_matrix).
Eigen::VectorXd assemble_uniform_current(const CoupledMesh& mesh,
                                         const std::vector<double>& coords,
                                         double current_density);

// Stranded-conductor coupling matrix X (n_nodes x 3): the source vector is
// X * i_phase and the flux linkage per phase is X^T * a. Encodes the
// double-layer lap winding (belt order A A -C -C B B per pole, alternating
// sign across poles; bottom layer shifted by coil_span_slots).
Eigen::MatrixXd winding_matrix(const CoupledMesh& mesh,
                               const MachineSpec& spec);

// Node-indexed equivalent-current source of the magnets, radially
// magnetized per pole with alternating polarity. Uses the rotor-frame
// coordinates stored in the mesh.
Eigen::VectorXd assemble_magnet_source(const CoupledMesh& mesh,
                                       const Materials& mat);

// Total stored magnetic energy (J) of a solution on the given coordinates.
double magnetic_energy(const CoupledMesh& mesh,
                       const std::vector<double>& coords, const Materials& mat,
                       const Eigen::VectorXd& a_nodes);

// Flux density of element t: B = (1/lz) * (da/dy, -da/dx).
void element_flux_density(const CoupledMesh& mesh,
                          const std::vector<double>& coords, double lz,
                          const Eigen::VectorXd& a_nodes, int t, double* bx,
                          double* by);

// Plain-text COO dump of stiffness triplets (row col value per line).
void write_coo_text(const std::vector<Eigen::Triplet<double>>& triplets,
                    int rows, int cols, const std::string& path);

}  // namespace pmsm
