#include "pmsm/machine.hpp"

#include <cmath>
#include <fstream>
#include <json.hpp>
#include <numbers>
#include <set>
#include <sstream>

#include "pmsm/error.hpp"

namespace pmsm {

using nlohmann::json;

double MachineSpec::omega_e() const {
  return 2.0 * std::numbers::pi * electrical_frequency_hz;
}

void MachineSpec::validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) fail(ErrorCode::Geometry, "machine config: " + what);
  };
  require(shaft_radius > 0.0, "geometry.shaft_radius_m must be > 0");
  require(shaft_radius < rotor_radius,
          "geometry.shaft_radius_m must be < geometry.rotor_radius_m");
  require(rotor_radius < stator_inner_radius,
          "geometry.rotor_radius_m must be < geometry.stator_inner_radius_m");
  require(stator_inner_radius < stator_outer_radius,
          "geometry.stator_inner_radius_m must be < "
          "geometry.stator_outer_radius_m");
  require(mean_airgap() > 0.0, "mean airgap must be > 0");
  require(slot_depth > 0.0 &&
              stator_inner_radius + slot_depth < stator_outer_radius,
          "geometry.slot_depth_m must fit inside the stator annulus");
  require(magnet_thickness > 0.0 &&
              shaft_radius < rotor_radius - magnet_thickness,
          "geometry.magnet_thickness_m must fit between shaft and rotor "
          "surface");
  require(slot_opening_fraction > 0.0 && slot_opening_fraction < 1.0,
          "geometry.slot_opening_fraction must be in (0,1)");
  require(magnet_arc_fraction > 0.0 && magnet_arc_fraction < 1.0,
          "geometry.magnet_arc_fraction must be in (0,1)");
  require(axial_length > 0.0, "geometry.axial_length_m must be > 0");
  require(pole_pairs >= 1, "winding.pole_pairs must be >= 1");
  require(slots_per_pole_per_phase >= 1,
          "winding.slots_per_pole_per_phase must be >= 1");
  require(turns_per_coil > 0.0, "winding.turns_per_coil must be > 0");
  require(coil_span_slots >= 1 && coil_span_slots < slot_count(),
          "winding.coil_span_slots out of range");
  require(dc_phase_resistance >= 0.0,
          "winding.dc_phase_resistance_ohm must be >= 0");
  require(relative_permeability_iron >= 1.0,
          "materials.relative_permeability_iron must be >= 1");
  require(magnet_recoil_permeability >= 1.0,
          "materials.magnet_recoil_permeability must be >= 1");
  require(remanent_flux_density >= 0.0,
          "materials.remanent_flux_density_T must be >= 0");
  require(electrical_frequency_hz > 0.0,
          "drive.electrical_frequency_hz must be > 0");
  require(phase_current_amplitude >= 0.0,
          "drive.phase_current_amplitude_A must be >= 0");
  require(cells_per_slot_pitch >= 3, "mesh.cells_per_slot_pitch must be >= 3");
  require(sigma_r0 > 0.0, "uq.sigma_r0_m must be > 0");
  require(truncation_fraction > 0.0 && truncation_fraction < 1.0,
          "uq.truncation_fraction must be in (0,1)");
}

double EccentricityState::eps(double mean_airgap) const {
  if (!(mean_airgap > 0.0))
    fail(ErrorCode::Geometry, "eccentricity: mean airgap must be > 0");
  const double e = displacement / mean_airgap;
  if (!(std::abs(e) < 1.0)) {
    std::ostringstream os;
    os << "eccentricity: |R0| = " << std::abs(displacement)
       << " m reaches the mean airgap " << mean_airgap
       << " m (rotor would touch the stator)";
    fail(ErrorCode::Geometry, os.str());
  }
  return e;
}

namespace {

class ConfigReader {
 public:
  ConfigReader(const json& root, const std::string& source)
      : root_(root), source_(source) {}

  const json& section(const std::string& name) {
    if (!root_.contains(name))
      fail(ErrorCode::Config, source_ + ": missing section '" + name + "'");
    if (!root_[name].is_object())
      fail(ErrorCode::Config, source_ + ": '" + name + "' must be an object");
    return root_[name];
  }

  double num(const json& sec, const std::string& path, const std::string& key,
             double fallback, bool required = false) {
    mark(path, key);
    if (!sec.contains(key)) {
      if (required)
        fail(ErrorCode::Config, source_ + ": missing '" + path + "." + key + "'");
      return fallback;
    }
    if (!sec[key].is_number())
      fail(ErrorCode::Config,
           source_ + ": '" + path + "." + key + "' must be a number");
    return sec[key].get<double>();
  }

  int integer(const json& sec, const std::string& path, const std::string& key,
              int fallback) {
    mark(path, key);
    if (!sec.contains(key)) return fallback;
    if (!sec[key].is_number_integer())
      fail(ErrorCode::Config,
           source_ + ": '" + path + "." + key + "' must be an integer");
    return sec[key].get<int>();
  }

  void reject_unknown() const {
    for (auto it = root_.begin(); it != root_.end(); ++it) {
      const std::string& sec_name = it.key();
      if (!it.value().is_object())
        fail(ErrorCode::Config,
             source_ + ": unknown top-level key '" + sec_name + "'");
      for (auto f = it.value().begin(); f != it.value().end(); ++f) {
        const std::string full = sec_name + "." + f.key();
        if (!seen_.contains(full))
          fail(ErrorCode::Config, source_ + ": unknown key '" + full + "'");
      }
    }
  }

 private:
  void mark(const std::string& path, const std::string& key) {
    seen_.insert(path + "." + key);
  }

  const json& root_;
  std::string source_;
  std::set<std::string> seen_;
};

}  // namespace

MachineSpec parse_machine_config(const std::string& json_text,
                                 const std::string& source_name) {
  json root;
  try {
    root = json::parse(json_text, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::Config, source_name + ": " + e.what());
  }
  if (!root.is_object())
    fail(ErrorCode::Config, source_name + ": top level must be an object");

  ConfigReader rd(root, source_name);
  MachineSpec s;

  const json& g = rd.section("geometry");
  s.shaft_radius = rd.num(g, "geometry", "shaft_radius_m", s.shaft_radius);
  s.rotor_radius =
      rd.num(g, "geometry", "rotor_radius_m", s.rotor_radius, true);
  s.stator_inner_radius = rd.num(g, "geometry", "stator_inner_radius_m",
                                 s.stator_inner_radius, true);
  s.stator_outer_radius = rd.num(g, "geometry", "stator_outer_radius_m",
                                 s.stator_outer_radius, true);
  s.slot_depth = rd.num(g, "geometry", "slot_depth_m", s.slot_depth);
  s.slot_opening_fraction =
      rd.num(g, "geometry", "slot_opening_fraction", s.slot_opening_fraction);
  s.magnet_thickness =
      rd.num(g, "geometry", "magnet_thickness_m", s.magnet_thickness);
  s.magnet_arc_fraction =
      rd.num(g, "geometry", "magnet_arc_fraction", s.magnet_arc_fraction);
  s.axial_length = rd.num(g, "geometry", "axial_length_m", s.axial_length);

  const json& w = rd.section("winding");
  s.pole_pairs = rd.integer(w, "winding", "pole_pairs", s.pole_pairs);
  s.slots_per_pole_per_phase = rd.integer(w, "winding", "slots_per_pole_per_phase",
                                          s.slots_per_pole_per_phase);
  s.turns_per_coil = rd.num(w, "winding", "turns_per_coil", s.turns_per_coil);
  s.coil_span_slots =
      rd.integer(w, "winding", "coil_span_slots", s.coil_span_slots);
  s.dc_phase_resistance =
      rd.num(w, "winding", "dc_phase_resistance_ohm", s.dc_phase_resistance);

  const json& m = rd.section("materials");
  s.relative_permeability_iron = rd.num(
      m, "materials", "relative_permeability_iron", s.relative_permeability_iron);
  s.remanent_flux_density =
      rd.num(m, "materials", "remanent_flux_density_T", s.remanent_flux_density);
  s.magnet_recoil_permeability = rd.num(
      m, "materials", "magnet_recoil_permeability", s.magnet_recoil_permeability);

  const json& d = rd.section("drive");
  s.phase_current_amplitude = rd.num(d, "drive", "phase_current_amplitude_A",
                                     s.phase_current_amplitude);
  s.electrical_frequency_hz =
      rd.num(d, "drive", "electrical_frequency_hz", s.electrical_frequency_hz);
  s.current_angle = rd.num(d, "drive", "current_angle_rad", s.current_angle);

  if (root.contains("mesh")) {
    const json& mm = rd.section("mesh");
    s.cells_per_slot_pitch =
        rd.integer(mm, "mesh", "cells_per_slot_pitch", s.cells_per_slot_pitch);
  }
  if (root.contains("uq")) {
    const json& u = rd.section("uq");
    s.sigma_r0 = rd.num(u, "uq", "sigma_r0_m", s.sigma_r0);
    s.truncation_fraction =
        rd.num(u, "uq", "truncation_fraction", s.truncation_fraction);
  }

  rd.reject_unknown();
  s.validate();
  return s;
}

MachineSpec load_machine_config(const std::string& path, std::string* raw) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open machine config: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  if (raw) *raw = text;
  return parse_machine_config(text, path);
}

std::uint64_t config_hash(const std::string& raw_bytes) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : raw_bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace pmsm
