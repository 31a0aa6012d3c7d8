#ifndef DMLE2E_EVAL_METRICS_HPP
#define DMLE2E_EVAL_METRICS_HPP

#include <cstddef>

#include "dmle2e/sigproc/analysis.hpp"
#include "dmle2e/sigproc/types.hpp"

namespace dmle2e::eval {

/// Symbols excluded at each end of a frame before counting errors.
inline constexpr std::size_t kTrimSymbols = 64;

struct SerResult {
  double ser = 0.0;
  double ci_low = 0.0;   // Wilson 95% interval
  double ci_high = 0.0;
  std::size_t errors = 0;
  std::size_t n = 0;
};

/// Wilson score interval at 95% for `errors` out of `n` trials.
SerResult wilson_interval(std::size_t errors, std::size_t n);

/// Error fraction over equal-length frames.
SerResult compute_ser(const sigproc::SymbolFrame& detected, const sigproc::SymbolFrame& truth);

/// Drops `count` symbols at each end.
sigproc::SymbolFrame trim_symbols(const sigproc::SymbolFrame& frame, std::size_t count = kTrimSymbols);

/// Overlaid two-symbol windows; traces(i, j) = w[offset + i * 2 * sps + j].
struct EyeData {
  Eigen::MatrixXd traces;
  int sps = 0;
  double sample_rate = 0.0;
};

/// `offset` anchors the first trace (typically sync lag minus half a symbol).
EyeData eye_data(const sigproc::Waveform& w, int sps, int n_traces, Eigen::Index offset = 0);

/// Smallest gap between the `n_levels` clusters of the trace values at column `column`,
/// clusters split at the largest gaps of the sorted values.
double eye_opening(const EyeData& eye, Eigen::Index column, int n_levels = 4);

struct SpectrumReport {
  sigproc::Spectrum ae;
  sigproc::Spectrum rrc;
  double bw_ae = 0.0;   // -10 dB bandwidth, Hz
  double bw_rrc = 0.0;
  bool ae_capped = false;   // PSD never fell below the level: bandwidth reported as Nyquist
  bool rrc_capped = false;
  double compression = 0.0;  // (bw_rrc - bw_ae) / bw_rrc
};

/// -10 dB bandwidths that never cross the level within Nyquist are reported as Nyquist (capped).
SpectrumReport spectrum_report(const sigproc::Waveform& ae_wave, const sigproc::Waveform& rrc_wave,
                               int segment_len = 256, double level_db = -10.0);

}  // namespace dmle2e::eval

#endif  // DMLE2E_EVAL_METRICS_HPP
