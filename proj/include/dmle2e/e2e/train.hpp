#ifndef DMLE2E_E2E_TRAIN_HPP
#define DMLE2E_E2E_TRAIN_HPP

#include <cstdint>
#include <vector>

#include "dmle2e/e2e/autoencoder.hpp"
#include "dmle2e/grad/check.hpp"
#include "dmle2e/sigproc/resample.hpp"

namespace dmle2e::e2e {

struct AeTrainOptions {
  double lr = 1e-2;
  double lr_final = 1e-3;  // cosine decay target at the last step
  int steps = 9000;
  int batch = 8;              // sequences per step
  int symbols_per_seq = 256;  // 2 SpS -> 512 surrogate samples per sequence
  /// Noise variance in normalized units; negative selects the surrogate's calibrated value.
  double noise_variance = -1.0;
  /// Occupied fraction of the Nyquist band for the training noise; the default matches the
  /// anti-alias passband that shapes the testbed's receiver noise.
  double noise_band = sigproc::ResampleOptions{}.passband;
  int rx_taps = kDefaultRxTaps;
  double clip_norm = 10.0;
  std::uint64_t seed = 1;
};

struct TrainReport {
  std::vector<double> loss;          // per step
  std::vector<double> surrogate_ser; // per step, argmax errors on the batch
  double i_bias_ma = 0.0;
  double p_rf_dbm = 0.0;
  double noise_variance = 0.0;
  long steps = 0;
  double wall_seconds = 0.0;
  std::uint64_t seed = 0;

  /// Equality ignoring wall-clock time.
  bool same_run(const TrainReport& o) const;
};

/// Loss became non-finite; carries the last good parameters.
class AeTrainingDiverged : public NumericError {
 public:
  AeTrainingDiverged(const std::string& msg, AeParams checkpoint)
      : NumericError(msg), checkpoint_(std::move(checkpoint)) {}
  const AeParams& checkpoint() const { return checkpoint_; }

 private:
  AeParams checkpoint_;
};

struct AeFit {
  AeParams params;
  TrainReport report;
};

/// Adam on every AeParams block through the frozen surrogate.
AeFit train_ae(const surrogate::SurrogateModel& model, const AeTrainOptions& opts, double awg_bw);

/// Central-difference check of the full autoencoder loss with respect to every AeParams
/// entry, at a receiver-initialized point with a fixed symbol/noise batch.
grad::GradientCheck check_ae_gradient(const surrogate::SurrogateModel& model, double awg_bw, std::uint64_t seed,
                                      double h = 1e-5);

}  // namespace dmle2e::e2e

#endif  // DMLE2E_E2E_TRAIN_HPP
