#ifndef DMLE2E_SIGPROC_TYPES_HPP
#define DMLE2E_SIGPROC_TYPES_HPP

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "dmle2e/errors.hpp"

namespace dmle2e {

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

namespace sigproc {

/// Uniformly sampled real signal. Samples are finite, length >= 1, rate > 0.
template <typename Scalar>
class BasicWaveform {
 public:
  using Samples = VectorX<Scalar>;

  BasicWaveform(Samples samples, double sample_rate)
      : samples_(std::move(samples)), sample_rate_(sample_rate) {
    if (!(sample_rate_ > 0.0) || !std::isfinite(sample_rate_)) {
      throw InvalidArgument("waveform sample rate must be positive and finite");
    }
    if (samples_.size() < 1) {
      throw InvalidArgument("waveform must hold at least one sample");
    }
    if (!samples_.allFinite()) {
      throw InvalidArgument("waveform samples must be finite");
    }
  }

  const Samples& samples() const { return samples_; }
  double sample_rate() const { return sample_rate_; }
  Eigen::Index size() const { return samples_.size(); }
  Scalar operator[](Eigen::Index i) const { return samples_[i]; }
  double duration() const { return static_cast<double>(samples_.size()) / sample_rate_; }

  bool operator==(const BasicWaveform& other) const {
    return sample_rate_ == other.sample_rate_ && samples_.size() == other.samples_.size() &&
           samples_ == other.samples_;
  }

 private:
  Samples samples_;
  double sample_rate_;
};

using Waveform = BasicWaveform<double>;

enum class FilterDesign { kRaw, kRrc, kSuperGaussian };

/// Real FIR taps plus the design that produced them.
template <typename Scalar>
struct BasicFirFilter {
  VectorX<Scalar> taps;
  FilterDesign design = FilterDesign::kRaw;
  double rolloff = 0.0;    // RRC only
  double cutoff_hz = 0.0;  // super-Gaussian only

  static BasicFirFilter raw(VectorX<Scalar> taps) {
    if (taps.size() < 1 || !taps.allFinite()) {
      throw InvalidArgument("filter taps must be non-empty and finite");
    }
    return BasicFirFilter{std::move(taps), FilterDesign::kRaw, 0.0, 0.0};
  }

  Eigen::Index size() const { return taps.size(); }
  /// Index of the output-alignment tap: floor((L-1)/2).
  Eigen::Index center() const { return (taps.size() - 1) / 2; }
};

using FirFilter = BasicFirFilter<double>;

/// 4PAM symbol indices in {0,1,2,3} at a given baud rate.
struct SymbolFrame {
  std::vector<int> indices;
  double symbol_rate = 0.0;

  SymbolFrame() = default;
  SymbolFrame(std::vector<int> idx, double rate) : indices(std::move(idx)), symbol_rate(rate) {
    if (!(symbol_rate > 0.0)) throw InvalidArgument("symbol rate must be positive");
    for (int s : indices) {
      if (s < 0 || s > 3) throw InvalidArgument("4PAM symbol index out of range");
    }
  }
  std::size_t size() const { return indices.size(); }
  bool operator==(const SymbolFrame&) const = default;
};

/// One-sided power spectral density (linear units per Hz).
struct Spectrum {
  Eigen::VectorXd freqs;
  Eigen::VectorXd psd;
  double resolution_bw = 0.0;

  Eigen::VectorXd psd_db() const { return 10.0 * psd.array().max(1e-300).log10(); }
};

}  // namespace sigproc
}  // namespace dmle2e

#endif  // DMLE2E_SIGPROC_TYPES_HPP
