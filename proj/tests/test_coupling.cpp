#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "pmsm/assembly.hpp"
#include "pmsm/coupling.hpp"
#include "pmsm/machine.hpp"
#include "pmsm/mesh.hpp"

using pmsm::AnnulusSpec;
using pmsm::build_annulus_mesh;
using pmsm::build_machine_mesh;
using pmsm::kMu0;
using pmsm::MachineSpec;
using pmsm::Materials;
using pmsm::RotatingSolver;

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
}

TEST_CASE("annulus line current matches the logarithmic field") {
  AnnulusSpec aspec;
  aspec.inner_radius = 0.015;
  aspec.outer_radius = 0.065;
  aspec.angular_count = 48;
  aspec.radial_count = 8;
  auto mesh = build_annulus_mesh(aspec, 0);

  const double lz = 1.0;
  auto mat = Materials::uniform(1.0 / kMu0, lz);
  RotatingSolver solver(mesh, mat);

  // total line current I distributed over the free inner ring
  const double I = 120.0;
  const int M = mesh.interface_count;
  Eigen::VectorXd f = Eigen::VectorXd::Zero(mesh.node_count());
  for (int j = 0; j < M; ++j) f[j] = I / M;
  solver.set_constant_source(f);

  auto res = solver.solve_step(0, Eigen::Vector3d::Zero());
  CHECK(res.lambda_residual < 1e-10);

  // a(r) = mu0 I lz ln(r_out/r) / (2 pi) for r >= r_in, grounded outside
  const double a_peak = kMu0 * I * lz * std::log(aspec.outer_radius /
                                                 aspec.inner_radius) /
                        kTwoPi;
  double worst = 0.0;
  for (int id = 0; id < mesh.node_count(); ++id) {
    const double r = std::hypot(mesh.nodes[2 * id], mesh.nodes[2 * id + 1]);
    const double exact =
        kMu0 * I * lz * std::log(aspec.outer_radius / r) / kTwoPi;
    worst = std::max(worst, std::abs(res.a[id] - exact));
  }
  CHECK(worst < 0.01 * a_peak);

  // stored energy of the coaxial current: mu0 I^2 lz ln(ro/ri) / (4 pi)
  const double w_exact = kMu0 * I * I * lz *
                         std::log(aspec.outer_radius / aspec.inner_radius) /
                         (2.0 * kTwoPi);
  CHECK(res.energy == doctest::Approx(w_exact).epsilon(0.01));
}

TEST_CASE("merged elimination equals the explicit saddle-point solve") {
  AnnulusSpec aspec;
  aspec.inner_radius = 0.02;
  aspec.outer_radius = 0.05;
  aspec.angular_count = 36;
  aspec.radial_count = 4;
  auto mesh = build_annulus_mesh(aspec, 0);
  auto mat = Materials::uniform(1.0 / kMu0, 1.0);
  RotatingSolver solver(mesh, mat);

  Eigen::VectorXd f = Eigen::VectorXd::Zero(mesh.node_count());
  for (int j = 0; j < mesh.interface_count; ++j)
    f[j] = 3.0 + 2.0 * std::sin(kTwoPi * j / mesh.interface_count);
  solver.set_constant_source(f);

  for (int k : {0, 5}) {
    auto merged = solver.solve_step(k, Eigen::Vector3d::Zero());
    auto block = solver.solve_step_block(k, Eigen::Vector3d::Zero());
    const double scale = merged.a.cwiseAbs().maxCoeff();
    CHECK((merged.a - block.a).cwiseAbs().maxCoeff() < 1e-8 * scale);
    const double lscale = merged.lambda.cwiseAbs().maxCoeff();
    CHECK((merged.lambda - block.lambda).cwiseAbs().maxCoeff() <
          1e-8 * lscale);
    CHECK(merged.energy == doctest::Approx(block.energy).epsilon(1e-10));
  }
}

TEST_CASE("merged vs block on the eccentric loaded machine") {
  MachineSpec spec;
  spec.cells_per_slot_pitch = 4;
  auto base = build_machine_mesh(spec, 0);
  auto mesh = pmsm::apply_eccentricity(base, {0.3e-3, 0.7});
  auto mat = Materials::from_spec(spec);

  RotatingSolver solver(mesh, mat);
  solver.set_winding(pmsm::winding_matrix(mesh, spec));
  solver.set_constant_source(pmsm::assemble_magnet_source(mesh, mat));

  const int S = solver.steps_per_period();
  const auto currents = pmsm::phase_currents(spec, 7, S);
  auto merged = solver.solve_step(7, currents);
  auto block = solver.solve_step_block(7, currents);

  CHECK(merged.lambda_residual < 1e-10);
  // iron/air contrast pushes the condition number to ~1e9, so two exact
  // factorizations of the same system agree to roughly kappa * eps here
  const double scale = merged.a.cwiseAbs().maxCoeff();
  CHECK((merged.a - block.a).cwiseAbs().maxCoeff() < 1e-6 * scale);
  CHECK(merged.energy == doctest::Approx(block.energy).epsilon(1e-9));
  CHECK(merged.torque_band == doctest::Approx(block.torque_band).epsilon(1e-6));
  CHECK(merged.flux.isApprox(block.flux, 1e-6));
}

TEST_CASE("magnet-only solves respect the machine symmetries") {
  MachineSpec spec;
  spec.cells_per_slot_pitch = 4;
  auto mesh = build_machine_mesh(spec, 0);
  auto mat = Materials::from_spec(spec);

  RotatingSolver solver(mesh, mat);
  solver.set_constant_source(pmsm::assemble_magnet_source(mesh, mat));

  const int S = solver.steps_per_period();
  const Eigen::Vector3d zero = Eigen::Vector3d::Zero();

  auto r0 = solver.solve_step(3, zero);
  CHECK(r0.lambda_residual < 1e-10);

  // one full revolution later: identical pairing, identical mesh
  auto r_full = solver.solve_step(3 + S, zero);
  CHECK((r0.a - r_full.a).cwiseAbs().maxCoeff() <
        1e-12 * r0.a.cwiseAbs().maxCoeff());

  // a quarter revolution is three pole pitches: the source flips sign, so
  // the potential flips while energy and torque are invariant
  auto r_quarter = solver.solve_step(3 + S / 4, zero);
  CHECK(r_quarter.energy == doctest::Approx(r0.energy).epsilon(1e-9));
  CHECK(r_quarter.torque_band ==
        doctest::Approx(r0.torque_band).epsilon(1e-6));
}

TEST_CASE("balanced three-phase currents") {
  MachineSpec spec;
  const int S = 96;
  for (int k : {0, 7, 31, 95}) {
    const auto i = pmsm::phase_currents(spec, k, S);
    CHECK(std::abs(i.sum()) < 1e-12 * spec.phase_current_amplitude);
    // electrical angle advances pole_pairs times faster than the rotor
    const double th = kTwoPi * spec.pole_pairs * k / S + spec.current_angle;
    CHECK(i[0] == doctest::Approx(spec.phase_current_amplitude * std::cos(th))
                      .epsilon(1e-12));
    CHECK(i[1] == doctest::Approx(spec.phase_current_amplitude *
                                  std::cos(th - kTwoPi / 3.0))
                      .epsilon(1e-12));
  }
}

TEST_CASE("eccentric contour rings coincide at every rotor step") {
  MachineSpec spec;
  spec.cells_per_slot_pitch = 4;
  auto base = build_machine_mesh(spec, 0);
  auto mesh = pmsm::apply_eccentricity(base, {0.4e-3, 1.3});
  auto mat = Materials::from_spec(spec);
  RotatingSolver solver(mesh, mat);

  const int M = mesh.interface_count;
  const int S = solver.steps_per_period();
  std::vector<double> lab;
  for (int k : {0, 1, 11, S / 2}) {
    const double phi = solver.rotor_angle(k);
    CHECK(phi == doctest::Approx(kTwoPi * 3.0 * k / M).epsilon(1e-15));
    mesh.morph_stator_band(phi, lab);
    const double cph = std::cos(phi), sph = std::sin(phi);
    double worst = 0.0;
    for (int i = 0; i < M; ++i) {
      const int j = (i + 3 * k) % M;  // stator index facing rotor node i
      const int rn = mesh.contour_rotor[i];
      const int sn = mesh.contour_stator[j];
      const double rx = mesh.nodes[2 * rn], ry = mesh.nodes[2 * rn + 1];
      const double lx = cph * rx - sph * ry;  // rotor node in the lab frame
      const double ly = sph * rx + cph * ry;
      worst = std::max({worst, std::abs(lx - lab[2 * sn]),
                        std::abs(ly - lab[2 * sn + 1])});
    }
    CHECK(worst < 1e-13);
  }
}

TEST_CASE("run_period assembles the drive cycle consistently") {
  MachineSpec spec;
  spec.cells_per_slot_pitch = 3;  // smallest valid lattice, fast
  auto mesh = build_machine_mesh(spec, 0);
  auto raw = pmsm::run_period(mesh, spec);

  const int S = mesh.steps_per_mech_period();
  CHECK(raw.steps() == S);
  const double T_mech = spec.pole_pairs / spec.electrical_frequency_hz;
  CHECK(raw.dt == doctest::Approx(T_mech / S).epsilon(1e-14));
  CHECK(raw.omega_m == doctest::Approx(kTwoPi / T_mech).epsilon(1e-14));
  CHECK(raw.max_lambda_residual < 1e-10);

  for (int k : {0, S / 3, S - 1}) {
    const auto expect = pmsm::phase_currents(spec, k, S);
    for (int p = 0; p < 3; ++p)
      CHECK(raw.currents[k][p] == doctest::Approx(expect[p]).epsilon(1e-14));
  }

  // all stored series are populated
  CHECK(static_cast<int>(raw.energy.size()) == S);
  CHECK(static_cast<int>(raw.torque_band.size()) == S);
  CHECK(static_cast<int>(raw.flux.size()) == S);
  for (double w : raw.energy) CHECK(w > 0.0);
}
