#ifndef DMLE2E_BASELINES_PIPELINE_HPP
#define DMLE2E_BASELINES_PIPELINE_HPP

#include <cstdint>

#include "dmle2e/baselines/equalizer.hpp"
#include "dmle2e/channel/testbed.hpp"
#include "dmle2e/eval/metrics.hpp"

namespace dmle2e::baselines {

inline constexpr int kRrcTaps = 17;
inline constexpr double kRrcRolloff = 0.1;

/// Uniform 4PAM indices from a seed.
sigproc::SymbolFrame random_symbols(std::size_t n, double symbol_rate, std::uint64_t seed);

/// Equispaced levels, mean removed, zero-stuffed to 2 SpS, 17-tap RRC (alpha 0.1), unit RMS.
sigproc::Waveform tx_rrc(const sigproc::SymbolFrame& symbols);

/// Matched RRC filter at 2 SpS.
sigproc::Waveform rx_matched(const sigproc::Waveform& rx);

/// One RRC transmission through the testbed, synchronized and matched-filtered.
struct RrcCapture {
  sigproc::SymbolFrame symbols;
  sigproc::Waveform tx;        // TX DSP output (2 SpS)
  sigproc::Waveform capture;   // raw DSO capture before RX DSP
  sigproc::Waveform matched;   // aligned, matched-filtered, zero mean and unit RMS
  long lag = 0;
  double i_bias_ma = 0.0;
  double p_rf_dbm = 0.0;
};

RrcCapture capture_rrc(const channel::ChannelConfig& cfg, double symbol_rate, double i_bias_ma, double p_rf_dbm,
                       std::size_t n_symbols, std::uint64_t seed);

struct BaselineResult {
  EqualizerKind kind = EqualizerKind::kFfe;
  EqualizerModel model;
  eval::SerResult ser;
  std::size_t n_train = 0;
};

/// Fits on the first `train_fraction` of the frame (after the edge trim) and
/// counts errors on the rest, edges excluded.
BaselineResult evaluate_equalizer(EqualizerKind kind, const RrcCapture& cap, double train_fraction = 0.2,
                                  SecondOrderSupport support = SecondOrderSupport::kDiagonal);

/// capture_rrc followed by evaluate_equalizer; `n_train + n_test` symbols in total.
BaselineResult run_baseline(EqualizerKind kind, const channel::ChannelConfig& cfg, double symbol_rate,
                            double i_bias_ma, double p_rf_dbm, std::size_t n_train, std::size_t n_test,
                            std::uint64_t seed, SecondOrderSupport support = SecondOrderSupport::kDiagonal);

}  // namespace dmle2e::baselines

#endif  // DMLE2E_BASELINES_PIPELINE_HPP
