#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "pmsm/machine.hpp"

namespace pmsm {

enum class Region : std::uint8_t {
  StatorIron,
  RotorIron,
  Magnet,        // payload = magnet (pole) index
  AirgapStator,  // stator-side half of the airgap band
  AirgapRotor,   // rotor-side half of the airgap band
  Coil,          // payload = slot index
  Air,           // gaps between surface magnets
};

enum class Domain : std::uint8_t { Stator, Rotor };

struct Triangle {
  std::array<int, 3> v;  // CCW
  Region region;
  int payload = -1;  // slot or magnet index, -1 otherwise
};

// Two-domain structured polar mesh. The interface contour is duplicated:
// the stator and rotor domains each own a ring of M nodes at the contour
// radius, equally spaced in angle, paired by the interface coupling.
//
// Rotor-domain node coordinates are stored in the rotor material frame
// (rotor angle 0). Eccentric meshes keep `nodes` as the displaced
// configuration for direction theta0 at time 0; `nominal` retains the
// concentric coordinates and `blend` the per-node displacement fraction so
// the time stepper can re-evaluate the stator-side morph at any rotor
// angle.
struct CoupledMesh {
  std::vector<double> nodes;    // 2*i, 2*i+1; current (possibly morphed)
  std::vector<double> nominal;  // concentric reference coordinates
  std::vector<double> blend;    // displacement fraction in [0,1] per node
  std::vector<Domain> node_domain;
  std::vector<Triangle> tris;

  // interface contour, ordered by angle index j = 0..M-1 at angle j*2*pi/M
  std::vector<int> contour_stator;
  std::vector<int> contour_rotor;

  std::vector<int> dirichlet;  // outer stator ring + shaft ring

  // winding geometry: per slot, element ids of the two coil layers
  // (top = nearer the airgap)
  std::vector<std::vector<int>> slot_top;
  std::vector<std::vector<int>> slot_bottom;
  // per magnet, element ids and radial polarity (+1 outward / -1 inward)
  std::vector<std::vector<int>> magnet_elements;
  std::vector<int> magnet_polarity;

  // rotor surface / stator bore rings (node ids ordered by angle) for
  // airgap measurement
  std::vector<int> rotor_surface;
  std::vector<int> stator_bore;

  // free-DoF numbering per domain; -1 marks Dirichlet nodes
  std::vector<int> dof;  // node -> dof within its domain
  int n_stator_dofs = 0;
  int n_rotor_dofs = 0;

  double mean_airgap = 0.0;
  double contour_radius = 0.0;
  int interface_count = 0;  // M

  // eccentricity the mesh was morphed with (displacement 0 = concentric)
  EccentricityState ecc;

  int node_count() const { return static_cast<int>(nodes.size() / 2); }
  int steps_per_mech_period() const { return interface_count / 3; }

  // Signed area of triangle t in the stored (material-frame) coordinates.
  double signed_area(int t) const;

  // Re-evaluate the morph of stator-side band nodes for a rotor angle,
  // writing lab-frame coordinates of the displaced configuration into
  // `out` (size 2*node_count). Rotor-domain coordinates stay in the
  // material frame.
  void morph_stator_band(double rotor_angle, std::vector<double>& out) const;
};

// Build the concentric machine mesh. `refinement` doubles the angular and
// radial resolution per level.
CoupledMesh build_machine_mesh(const MachineSpec& spec, int refinement);

// Plain two-domain annulus (no slots, no magnets): shaft .. outer radius
// with the contour at mid-gap of [r_in, r_out]. Used by the analytic field
// oracle. Reluctivity is uniform; the inner ring is free (it carries the
// source), the outer ring is Dirichlet.
struct AnnulusSpec {
  double inner_radius = 0.015;
  double outer_radius = 0.065;
  int angular_count = 504;  // per refinement 0
  int radial_count = 8;
};
CoupledMesh build_annulus_mesh(const AnnulusSpec& spec, int refinement);

// Displace the rotor rigidly and blend the airgap band. Pure function:
// returns the morphed mesh, input untouched. Rejects |R0| >= mean airgap
// and any morph inverting a triangle.
CoupledMesh apply_eccentricity(const CoupledMesh& mesh,
                               const EccentricityState& ecc);

// Airgap width sampled at `samples` stator angles for rotor angle 0:
// distance from each stator-bore node to the rotor surface polyline.
std::vector<double> airgap_profile(const CoupledMesh& mesh);

// Plain-text mesh export: node table then triangle table with region tags.
// `header`, when nonempty, is written first as a comment line.
void write_mesh_text(const CoupledMesh& mesh, const std::string& path,
                     const std::string& header = "");

// Byte-stable serialization of the full mesh state (determinism checks).
std::string mesh_fingerprint(const CoupledMesh& mesh);

}  // namespace pmsm
