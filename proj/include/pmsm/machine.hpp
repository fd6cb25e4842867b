#pragma once

#include <cstdint>
#include <string>

namespace pmsm {

// Full parametric description of the simulated machine. All lengths in
// meters, angles in radians, currents in amperes. The geometry is an
// annular cross-section: shaft | rotor core | surface magnets | airgap |
// open stator slots | yoke.
struct MachineSpec {
  // geometry
  double shaft_radius = 0.015;
  double rotor_radius = 0.044;         // outer radius of the magnets
  double stator_inner_radius = 0.045;  // stator bore
  double stator_outer_radius = 0.065;
  double slot_depth = 0.012;
  double slot_opening_fraction = 0.5;  // of one slot pitch
  double magnet_thickness = 0.003;
  // 5/7 of a pole pitch: magnet edges fall near the cogging-suppressing arc,
  // so the slot-order torque harmonic is small when centered and grows once
  // eccentricity detunes the cancellation.
  double magnet_arc_fraction = 0.7142857142857143;
  double axial_length = 0.010;

  // winding
  int pole_pairs = 6;
  int slots_per_pole_per_phase = 2;
  double turns_per_coil = 20.0;
  int coil_span_slots = 5;
  double dc_phase_resistance = 0.1;  // ohm

  // materials
  double relative_permeability_iron = 500.0;
  double remanent_flux_density = 1.2;        // T
  double magnet_recoil_permeability = 1.05;  // relative

  // drive (amplitude and angle tuned for ~4.06 Nm mean torque)
  double phase_current_amplitude = 7.975937;  // A
  double electrical_frequency_hz = 50.0;
  double current_angle = 4.489565;  // electrical phase offset, rad

  // mesh resolution at refinement 0
  int cells_per_slot_pitch = 7;

  // stochastic eccentricity model defaults
  double sigma_r0 = 0.4e-3 / 3.0;       // std. dev. of the displacement, m
  double truncation_fraction = 0.99;    // reject |R0| >= fraction * airgap

  int slot_count() const { return slots_per_pole_per_phase * 3 * 2 * pole_pairs; }
  double mean_airgap() const { return stator_inner_radius - rotor_radius; }
  double omega_e() const;  // electrical angular frequency, rad/s
  double omega_m() const { return omega_e() / pole_pairs; }

  // Throws Error{Geometry|Config} with a field path when a value is out of
  // range or the radii ordering is inconsistent.
  void validate() const;
};

// Rotor displacement state. eps() is the relative eccentricity R0/airgap.
struct EccentricityState {
  double displacement = 0.0;  // R0, m (may be negative: opposite direction)
  double direction = 0.0;     // theta0, rad

  double eps(double mean_airgap) const;  // checks |R0| < airgap
};

// Parse a machine config from JSON text (comments allowed). Unknown keys
// and missing sections are reported with their path. `source_name` is used
// in error messages only.
MachineSpec parse_machine_config(const std::string& json_text,
                                 const std::string& source_name = "<config>");

// Load from file; also returns the raw bytes via `raw` when non-null (used
// for config hashing).
MachineSpec load_machine_config(const std::string& path,
                                std::string* raw = nullptr);

// FNV-1a over the raw config bytes; stamped into every output file.
std::uint64_t config_hash(const std::string& raw_bytes);

}  // namespace pmsm
