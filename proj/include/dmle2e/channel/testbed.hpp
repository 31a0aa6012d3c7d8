#ifndef DMLE2E_CHANNEL_TESTBED_HPP
#define DMLE2E_CHANNEL_TESTBED_HPP

#include <cstdint>
#include <filesystem>
#include <vector>

#include "dmle2e/channel/laser.hpp"
#include "dmle2e/sigproc/types.hpp"

namespace dmle2e::channel {

/// AWG -> RF amplifier -> bias tee -> DML -> PD -> DSO chain.
/// Analog stages run at `analog_rate`; BWs are -3 dB points.
struct AnalogChainParams {
  double awg_rate = 0.0;       // Sa/s
  double awg_bw = 0.0;         // Hz, super-Gaussian prototype cutoff
  int awg_taps = 9;
  int awg_order = 2;
  double amp_gain_db = 0.0;
  double amp_bw = 0.0;
  double pd_bw = 0.0;
  double pd_responsivity = 1.0;  // mA per mW
  double dso_bw = 0.0;
  double dso_rate = 0.0;
  double analog_rate = 0.0;
  int analog_taps = 33;
  double load_ohms = 50.0;
  double mod_transconductance = 0.0;  // A/V into the laser
  double noise_sigma = 0.0;           // AWGN std at the DSO, photocurrent units (mA)
  double rk4_dt = 0.0;                // s; 0 selects 1/(8 awg_rate)
  bool filters_enabled = true;

  void validate() const;
  double integration_step() const { return rk4_dt > 0.0 ? rk4_dt : 1.0 / (8.0 * awg_rate); }
};

struct ChannelConfig {
  LaserParams laser;
  AnalogChainParams chain;
};

ChannelConfig load_channel_config(const std::filesystem::path& path);
ChannelConfig parse_channel_config(const std::string& json_text);
std::string dump_channel_config(const ChannelConfig& cfg);

/// Peak voltage of a sinusoid delivering `p_rf_dbm` into `load_ohms`.
double dbm_to_peak_voltage(double p_rf_dbm, double load_ohms);

/// Drive current (mA) at the analog rate: resample to the AWG rate, AWG filter,
/// AC-couple and scale to unit RMS times V_peak(P_RF), amplify, convert to mA, add bias.
sigproc::Waveform drive_current(const sigproc::Waveform& digital, double i_bias_ma, double p_rf_dbm,
                                const ChannelConfig& cfg);

/// Noise-free photocurrent at the DSO sample rate (after laser, PD and DSO front-end filter).
sigproc::Waveform clean_capture(const sigproc::Waveform& digital, double i_bias_ma, double p_rf_dbm,
                                const ChannelConfig& cfg);

/// Full testbed: `n_copies` captures differing only in DSO noise, each resampled
/// back to the digital rate and length. Copy c draws from the substream (seed, c).
std::vector<sigproc::Waveform> testbed_propagate(const sigproc::Waveform& digital, double i_bias_ma,
                                                 double p_rf_dbm, int n_copies, std::uint64_t seed,
                                                 const ChannelConfig& cfg);

/// Operating-point ranges covered by the surrogate dataset.
struct OperatingRange {
  static constexpr double kBiasLowMa = 50.0;
  static constexpr double kBiasHighMa = 100.0;
  static constexpr double kPrfLowDbm = -4.0;
  static constexpr double kPrfHighDbm = 2.0;
};

}  // namespace dmle2e::channel

#endif  // DMLE2E_CHANNEL_TESTBED_HPP
