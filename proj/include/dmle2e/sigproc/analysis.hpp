#ifndef DMLE2E_SIGPROC_ANALYSIS_HPP
#define DMLE2E_SIGPROC_ANALYSIS_HPP

#include <limits>
#include <vector>

#include "dmle2e/sigproc/types.hpp"

namespace dmle2e::sigproc {

/// Lag maximizing the normalized (Pearson) cross-correlation over the overlap,
/// searched in [-max_lag, max_lag]. measured[t + lag] lines up with reference[t].
long synchronize(const Waveform& reference, const Waveform& measured, long max_lag = 64);

/// Shifts `measured` by `lag` and zero-pads/truncates to `length` samples.
Waveform apply_lag(const Waveform& measured, long lag, Eigen::Index length);

Waveform average_copies(const std::vector<Waveform>& copies);

struct Normalized {
  Waveform waveform;
  double scale;
  double offset;
};

/// Affine map sending min -> 0 and max -> 1. Inverse: x * scale + offset.
Normalized normalize01(const Waveform& w);
Waveform denormalize(const Waveform& w, double scale, double offset);

struct SnrEstimate {
  double snr_db = 0.0;
  double signal_power = 0.0;
  double noise_power = 0.0;
  bool infinite = false;
};

/// Deterministic/stochastic split over aligned repeated captures.
SnrEstimate estimate_snr(const std::vector<Waveform>& copies);

/// Welch averaged periodogram (Hann), one-sided density.
Spectrum psd(const Waveform& w, int segment_len, double overlap = 0.5);

/// Highest frequency where the PSD drops below peak - |level_db| and stays there.
double bw_at_level(const Spectrum& s, double level_db);

}  // namespace dmle2e::sigproc

#endif  // DMLE2E_SIGPROC_ANALYSIS_HPP
