#ifndef DMLE2E_SIGPROC_RESAMPLE_HPP
#define DMLE2E_SIGPROC_RESAMPLE_HPP

#include "dmle2e/sigproc/types.hpp"

namespace dmle2e::sigproc {

struct ResampleOptions {
  long max_denominator = 4000;
  /// Kernel half-width in samples of the slower of the two rates.
  double half_width = 40.0;
  /// Anti-alias cutoff as a fraction of the lower Nyquist frequency.
  double passband = 0.9;
  double kaiser_beta = 8.0;
};

/// Rational p/q approximating `ratio` with q bounded; throws if none is within 1e-9 relative.
std::pair<long, long> rational_ratio(double ratio, long max_denominator);

/// Band-limited polyphase resampling (Kaiser-windowed sinc). Output length ceil(n * p / q).
Waveform resample(const Waveform& w, double new_rate_hz, const ResampleOptions& opts = {});

}  // namespace dmle2e::sigproc

#endif  // DMLE2E_SIGPROC_RESAMPLE_HPP
