#include "pmsm/torque.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pmsm/error.hpp"

namespace pmsm {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}
}  // namespace

std::vector<double> time_derivative(const std::vector<double>& f, double dt,
                                    DerivativeMode mode) {
  const int n = static_cast<int>(f.size());
  if (n < 3) fail(ErrorCode::InvalidArgument, "need at least 3 samples");
  std::vector<double> d(n);
  for (int k = 1; k + 1 < n; ++k) d[k] = (f[k + 1] - f[k - 1]) / (2.0 * dt);
  if (mode == DerivativeMode::Periodic) {
    d[0] = (f[1] - f[n - 1]) / (2.0 * dt);
    d[n - 1] = (f[0] - f[n - 2]) / (2.0 * dt);
  } else {
    d[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * dt);
    d[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * dt);
  }
  return d;
}

TorqueTrace analyze_period(const PeriodRaw& raw, const MachineSpec& spec,
                           DerivativeMode mode) {
  const int S = raw.steps();
  if (S < 3) fail(ErrorCode::InvalidArgument, "period too short to analyze");
  TorqueTrace tr;
  tr.dt = raw.dt;
  tr.omega_m = raw.omega_m;
  tr.max_lambda_residual = raw.max_lambda_residual;
  tr.time.resize(S);
  tr.torque.resize(S);
  tr.torque_band = raw.torque_band;
  tr.voltage.resize(S);
  tr.p_electrical.resize(S);
  tr.p_loss.resize(S);
  tr.dw_dt = time_derivative(raw.energy, raw.dt, mode);

  std::array<std::vector<double>, 3> dpsi;
  for (int p = 0; p < 3; ++p) {
    std::vector<double> psi(S);
    for (int k = 0; k < S; ++k) psi[k] = raw.flux[k][p];
    dpsi[p] = time_derivative(psi, raw.dt, mode);
  }

  const double R = spec.dc_phase_resistance;
  for (int k = 0; k < S; ++k) {
    tr.time[k] = k * raw.dt;
    double pe = 0.0, pl = 0.0;
    for (int p = 0; p < 3; ++p) {
      const double i = raw.currents[k][p];
      const double u = R * i + dpsi[p][k];
      tr.voltage[k][p] = u;
      pe += u * i;
      pl += R * i * i;
    }
    tr.p_electrical[k] = pe;
    tr.p_loss[k] = pl;
    tr.torque[k] = (pe - pl - tr.dw_dt[k]) / raw.omega_m;
  }

  tr.mean_p_electrical = mean(tr.p_electrical);
  tr.mean_dw_dt = mean(tr.dw_dt);
  tr.mean_torque = (tr.mean_p_electrical - mean(tr.p_loss)) / raw.omega_m;
  tr.mean_torque_inst = mean(tr.torque);
  tr.mean_torque_band = mean(tr.torque_band);
  return tr;
}

Spectrum spectrum_and_thd(const std::vector<double>& samples,
                          int max_harmonic) {
  const int S = static_cast<int>(samples.size());
  if (S < 4) fail(ErrorCode::InvalidArgument, "too few samples for a spectrum");
  const int n_bins = S / 2;  // highest representable harmonic
  Spectrum sp;
  sp.amps.resize(n_bins + 1);

  for (int n = 0; n <= n_bins; ++n) {
    double re = 0.0, im = 0.0;
    for (int k = 0; k < S; ++k) {
      const double ph = kTwoPi * n * k / S;
      re += samples[k] * std::cos(ph);
      im -= samples[k] * std::sin(ph);
    }
    re /= S;
    im /= S;
    if (n == 0)
      sp.amps[0] = re;  // signed mean
    else if (2 * n == S)
      sp.amps[n] = std::hypot(re, im);  // Nyquist, not doubled
    else
      sp.amps[n] = 2.0 * std::hypot(re, im);
  }

  int n_used = (S % 2 == 0) ? n_bins - 1 : n_bins;  // strictly below Nyquist
  if (max_harmonic >= 0) n_used = std::min(n_used, max_harmonic);
  sp.harmonics_used = n_used;
  double acc = 0.0, peak = std::abs(sp.amps[0]);
  for (int n = 1; n <= n_used; ++n) {
    acc += sp.amps[n];
    peak = std::max(peak, sp.amps[n]);
  }
  // THD normalizes by the mean; for an (almost) zero-mean waveform the ratio
  // is pure noise amplification, so report it as undefined instead.
  if (std::abs(sp.amps[0]) > 1e-9 * peak)
    sp.thd = acc / std::abs(sp.amps[0]);
  else
    sp.thd = std::numeric_limits<double>::quiet_NaN();
  return sp;
}

}  // namespace pmsm
