#include "dmle2e/channel/testbed.hpp"

#include <cmath>
#include <random>

#include "dmle2e/log.hpp"
#include "dmle2e/sigproc/filters.hpp"
#include "dmle2e/sigproc/resample.hpp"

namespace dmle2e::channel {

using sigproc::Waveform;

void AnalogChainParams::validate() const {
  const double positive[] = {awg_rate, awg_bw, amp_bw, pd_bw, dso_bw, dso_rate, analog_rate, load_ohms,
                             mod_transconductance, pd_responsivity};
  for (double v : positive) {
    if (!(v > 0.0) || !std::isfinite(v)) throw InvalidArgument("analog chain rates, bandwidths and gains must be positive");
  }
  if (noise_sigma < 0.0) throw InvalidArgument("noise_sigma must be >= 0");
  if (awg_taps < 1 || awg_taps % 2 == 0 || analog_taps < 1 || analog_taps % 2 == 0) {
    throw InvalidArgument("filter tap counts must be odd");
  }
  if (filters_enabled) {
    if (awg_rate <= 2.0 * awg_bw) throw InvalidArgument("awg_rate must exceed twice awg_bw");
    for (double bw : {amp_bw, pd_bw, dso_bw}) {
      if (analog_rate <= 2.0 * bw) throw InvalidArgument("analog_rate must exceed twice each analog bandwidth");
    }
  }
}

double dbm_to_peak_voltage(double p_rf_dbm, double load_ohms) {
  if (!(load_ohms > 0.0)) throw InvalidArgument("load must be positive");
  return std::sqrt(2.0 * std::pow(10.0, p_rf_dbm / 10.0) * 1e-3 * load_ohms);
}

namespace {

// Gaussian front-end responses stand in for the amplifier, PD and DSO (Bessel-like) filters.
Waveform analog_filter(const Waveform& w, double bw, const AnalogChainParams& c) {
  if (!c.filters_enabled) return w;
  return sigproc::fir_apply(w, sigproc::design_supergaussian(c.analog_taps, 1, bw, c.analog_rate));
}

}  // namespace

Waveform drive_current(const Waveform& digital, double i_bias_ma, double p_rf_dbm, const ChannelConfig& cfg) {
  const AnalogChainParams& c = cfg.chain;
  c.validate();
  if (i_bias_ma < OperatingRange::kBiasLowMa || i_bias_ma > OperatingRange::kBiasHighMa ||
      p_rf_dbm < OperatingRange::kPrfLowDbm || p_rf_dbm > OperatingRange::kPrfHighDbm) {
    warn_once("testbed-range", "testbed driven outside I_bias in [50,100] mA / P_RF in [-4,2] dBm");
  }

  // AC coupling happens in the digital domain so a flat input carries no RF power at all.
  const Waveform centered(digital.samples().array() - digital.samples().mean(), digital.sample_rate());
  Waveform awg = sigproc::resample(centered, c.awg_rate);
  if (c.filters_enabled) {
    awg = sigproc::fir_apply(awg, sigproc::design_supergaussian(c.awg_taps, c.awg_order, c.awg_bw, c.awg_rate));
  }
  Eigen::VectorXd v = awg.samples().array() - awg.samples().mean();
  const double rms = std::sqrt(v.squaredNorm() / static_cast<double>(v.size()));
  if (rms > 1e-15 * (1.0 + awg.samples().cwiseAbs().maxCoeff())) {
    v *= dbm_to_peak_voltage(p_rf_dbm, c.load_ohms) / rms;
  } else {
    v.setZero();
  }

  Waveform rf = sigproc::resample(Waveform(std::move(v), c.awg_rate), c.analog_rate);
  rf = Waveform(rf.samples() * std::pow(10.0, c.amp_gain_db / 20.0), rf.sample_rate());
  rf = analog_filter(rf, c.amp_bw, c);
  Eigen::VectorXd current = rf.samples().array() * (c.mod_transconductance * 1e3) + i_bias_ma;
  return Waveform(std::move(current), c.analog_rate);
}

Waveform clean_capture(const Waveform& digital, double i_bias_ma, double p_rf_dbm, const ChannelConfig& cfg) {
  const AnalogChainParams& c = cfg.chain;
  const Waveform drive = drive_current(digital, i_bias_ma, p_rf_dbm, cfg);
  const Waveform optical = dml_simulate(drive, cfg.laser, c.integration_step());
  Waveform pd(optical.samples() * c.pd_responsivity, optical.sample_rate());
  pd = analog_filter(pd, c.pd_bw, c);
  pd = analog_filter(pd, c.dso_bw, c);
  return sigproc::resample(pd, c.dso_rate);
}

std::vector<Waveform> testbed_propagate(const Waveform& digital, double i_bias_ma, double p_rf_dbm, int n_copies,
                                        std::uint64_t seed, const ChannelConfig& cfg) {
  if (n_copies < 1) throw InvalidArgument("testbed_propagate: n_copies must be >= 1");
  const Waveform clean = clean_capture(digital, i_bias_ma, p_rf_dbm, cfg);

  std::vector<Waveform> copies;
  copies.reserve(static_cast<std::size_t>(n_copies));
  for (int copy = 0; copy < n_copies; ++copy) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(copy)};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::VectorXd noisy = clean.samples();
    if (cfg.chain.noise_sigma > 0.0) {
      for (Eigen::Index i = 0; i < noisy.size(); ++i) noisy[i] += cfg.chain.noise_sigma * gauss(rng);
    }
    const Waveform back = sigproc::resample(Waveform(std::move(noisy), clean.sample_rate()), digital.sample_rate());
    Eigen::VectorXd out = Eigen::VectorXd::Zero(digital.size());
    const Eigen::Index n = std::min(out.size(), back.size());
    out.head(n) = back.samples().head(n);
    if (n < out.size()) out.tail(out.size() - n).setConstant(back.samples()[n - 1]);
    copies.emplace_back(std::move(out), digital.sample_rate());
  }
  return copies;
}

}  // namespace dmle2e::channel
