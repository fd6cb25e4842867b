#pragma once

#include <array>
#include <vector>

#include "pmsm/coupling.hpp"
#include "pmsm/machine.hpp"

namespace pmsm {

enum class DerivativeMode {
  Periodic,  // central differences with wraparound (steady-state period)
  OneSided,  // central inside, one-sided at both ends
};

// finite-difference time derivative of a sampled signal
std::vector<double> time_derivative(const std::vector<double>& f, double dt,
                                    DerivativeMode mode);

// Electrical/mechanical post-processing of one simulated period.
struct TorqueTrace {
  double dt = 0.0;
  double omega_m = 0.0;
  std::vector<double> time;
  std::vector<double> torque;       // instantaneous, from the power balance
  std::vector<double> torque_band;  // Maxwell-stress band integral
  std::vector<std::array<double, 3>> voltage;
  std::vector<double> p_electrical;
  std::vector<double> p_loss;
  std::vector<double> dw_dt;

  double mean_torque = 0.0;       // (mean P_e - mean P_loss) / omega_m
  double mean_torque_inst = 0.0;  // mean of `torque`
  double mean_torque_band = 0.0;
  double mean_p_electrical = 0.0;
  double mean_dw_dt = 0.0;
  double max_lambda_residual = 0.0;
};

TorqueTrace analyze_period(const PeriodRaw& raw, const MachineSpec& spec,
                           DerivativeMode mode = DerivativeMode::Periodic);

// Single-sided amplitude spectrum of a real signal sampled over exactly one
// period: amps[0] = |mean|-signed DC, amps[i] = 2|c_i|, the Nyquist bin (even
// sample counts) kept undoubled. THD = sum of harmonic amplitudes 1..n
// divided by the DC value; n defaults to every bin strictly below Nyquist.
struct Spectrum {
  std::vector<double> amps;  // size floor(S/2)+1; amps[0] is signed
  double thd = 0.0;
  int harmonics_used = 0;
};

Spectrum spectrum_and_thd(const std::vector<double>& samples,
                          int max_harmonic = -1);

}  // namespace pmsm
