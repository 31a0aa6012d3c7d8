#ifndef DMLE2E_CHANNEL_LASER_HPP
#define DMLE2E_CHANNEL_LASER_HPP

#include "dmle2e/sigproc/types.hpp"

namespace dmle2e::channel {

/// Single-mode rate-equation laser, densities in cm^-3, times in s.
///
///   dN/dt = I/(qV) - N/tau_n - g0 (N - N_tr) S / (1 + eps S)
///   dS/dt = Gamma g0 (N - N_tr) S / (1 + eps S) - S/tau_p + Gamma beta N / tau_n
///
/// Output power P = eta * q V S / (Gamma tau_p), so dP/dI -> eta above threshold.
struct LaserParams {
  double active_volume = 0.0;         // cm^3
  double confinement = 0.0;           // Gamma
  double gain_coeff = 0.0;            // g0 = v_g * a, cm^3/s
  double transparency_density = 0.0;  // N_tr, cm^-3
  double gain_compression = 0.0;      // eps, cm^3
  double carrier_lifetime = 0.0;      // tau_n, s
  double photon_lifetime = 0.0;       // tau_p, s
  double spont_fraction = 0.0;        // beta
  double external_efficiency = 0.0;   // eta, W/A
  double electron_charge = 1.602176634e-19;

  void validate() const;
  /// Photon density scale Gamma tau_p N_tr / tau_n used to nondimensionalize S.
  double photon_scale() const;
  double power_mw(double photon_density) const;
};

struct LaserState {
  double carrier_density = 0.0;
  double photon_density = 0.0;
};

struct SteadyState {
  double carrier_density = 0.0;
  double photon_density = 0.0;
  double power_mw = 0.0;
  int iterations = 0;
};

/// I_th = q V (N_tr + 1/(Gamma g0 tau_p)) / tau_n, in mA.
double analytic_threshold_ma(const LaserParams& p);

/// Right-hand side of the rate equations for a drive current in mA.
LaserState rate_equations(const LaserState& y, double current_ma, const LaserParams& p);

/// dN/dt = dS/dt = 0 by damped Newton; residuals < 1e-10 relative.
SteadyState steady_state(double i_bias_ma, const LaserParams& p);

struct SmallSignal {
  double damped_freq_hz = 0.0;    // |Im lambda| / 2pi of the Jacobian eigenpair
  double undamped_freq_hz = 0.0;  // sqrt(det J) / 2pi
  double damping_rate = 0.0;      // -trace J, 1/s
};

/// Linearization of the rate equations around the steady state at `i_bias_ma`.
SmallSignal small_signal(double i_bias_ma, const LaserParams& p);

/// Fixed-step RK4 of the rate equations. Drive (mA) is linearly interpolated
/// between samples and clamped at 0 (the diode does not conduct in reverse);
/// the state starts at the steady state of the first sample. Output power (mW)
/// is reported at the drive's sample instants.
sigproc::Waveform dml_simulate(const sigproc::Waveform& drive_ma, const LaserParams& p, double dt);

}  // namespace dmle2e::channel

#endif  // DMLE2E_CHANNEL_LASER_HPP
