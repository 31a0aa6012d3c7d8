#ifndef DMLE2E_SIGPROC_FILTERS_HPP
#define DMLE2E_SIGPROC_FILTERS_HPP

#include <algorithm>
#include <span>

#include "dmle2e/sigproc/types.hpp"

namespace dmle2e::sigproc {

/// Root-raised-cosine taps sampled at `sps` samples/symbol, centered, unit energy.
FirFilter design_rrc(int n_taps, double rolloff, int sps);

/// Linear-phase low-pass from frequency sampling of exp(-1/2 (f/fc)^(2 order)),
/// truncated to `n_taps` and renormalized to unit DC gain.
FirFilter design_supergaussian(int n_taps, int order, double cutoff_hz, double rate_hz);

/// "Same"-mode convolution: y[n] = sum_k taps[k] x[n + offset - k], zero outside.
template <typename DerivedX, typename DerivedH>
auto convolve_same(const Eigen::MatrixBase<DerivedX>& x, const Eigen::MatrixBase<DerivedH>& taps,
                   Eigen::Index offset) {
  using Scalar = typename DerivedX::Scalar;
  const Eigen::Index n = x.size();
  const Eigen::Index len = taps.size();
  VectorX<Scalar> y = VectorX<Scalar>::Zero(n);
  for (Eigen::Index k = 0; k < len; ++k) {
    const Scalar h = taps(k);
    if (h == Scalar(0)) continue;
    // x index j = i + offset - k must lie in [0, n)
    const Eigen::Index lo = std::max<Eigen::Index>(0, k - offset);
    const Eigen::Index hi = std::min<Eigen::Index>(n, n + k - offset);
    if (hi <= lo) continue;
    y.segment(lo, hi - lo) += h * x.segment(lo + offset - k, hi - lo);
  }
  return y;
}

/// Filters with group delay compensated at floor((L-1)/2); rate preserved.
template <typename Scalar>
BasicWaveform<Scalar> fir_apply(const BasicWaveform<Scalar>& w, const BasicFirFilter<Scalar>& f) {
  return BasicWaveform<Scalar>(convolve_same(w.samples(), f.taps, f.center()), w.sample_rate());
}

/// Zero-stuffing: values land at indices k*sps. `symbol_rate` sets the output rate sps*symbol_rate.
template <typename Scalar>
BasicWaveform<Scalar> upsample_insert(std::span<const Scalar> values, int sps, double symbol_rate) {
  if (sps < 1) throw InvalidArgument("upsample factor must be >= 1");
  VectorX<Scalar> out = VectorX<Scalar>::Zero(static_cast<Eigen::Index>(values.size()) * sps);
  for (std::size_t k = 0; k < values.size(); ++k) out[static_cast<Eigen::Index>(k) * sps] = values[k];
  return BasicWaveform<Scalar>(std::move(out), symbol_rate * sps);
}

}  // namespace dmle2e::sigproc

#endif  // DMLE2E_SIGPROC_FILTERS_HPP
