#ifndef DMLE2E_SURROGATE_LSTM_HPP
#define DMLE2E_SURROGATE_LSTM_HPP

#include <cstdint>

#include "dmle2e/grad/tape.hpp"
#include "dmle2e/sigproc/types.hpp"

namespace dmle2e::surrogate {

inline constexpr int kFeatureCount = 3;  // [drive sample, normalized I_bias, normalized P_RF]

/// Single-layer LSTM with a scalar affine readout, conditioned on the laser
/// operating point through two constant per-step features.
struct SurrogateModel {
  int hidden_size = 0;
  Eigen::MatrixXd w_input;   // 4H x 3, gate order (i, f, g, o)
  Eigen::MatrixXd w_hidden;  // 4H x H
  Eigen::MatrixXd bias;      // 4H x 1
  Eigen::MatrixXd w_out;     // 1 x H
  Eigen::MatrixXd b_out;     // 1 x 1

  // Conditioning ranges for min-max feature scaling.
  double bias_low_ma = 50.0, bias_high_ma = 100.0;
  double prf_low_dbm = -4.0, prf_high_dbm = 2.0;
  // Output normalization: normalized = (capture - offset) / scale.
  double output_scale = 1.0, output_offset = 0.0;
  /// Samples by which the target trails the input (lookahead for the causal recursion).
  long delay_samples = 0;
  double symbol_rate = 0.0;
  int sps = 2;
  /// SNR measured on repeated captures and the matching noise variance in normalized units.
  double snr_db = 0.0;
  double noise_variance = 0.0;

  static SurrogateModel init(int hidden_size, std::uint64_t seed);

  void validate() const;
  Eigen::Vector2d conditioning(double i_bias_ma, double p_rf_dbm) const;
  bool operator==(const SurrogateModel&) const = default;
};

/// Per-step scalar outputs for drive columns (T x B) under conditioning (2 x B or 2 x 1).
Eigen::MatrixXd lstm_run(const SurrogateModel& m, const Eigen::MatrixXd& drive, const Eigen::MatrixXd& cond);

/// Zero-initialized recursion over one waveform; output has the input's length and rate.
sigproc::Waveform lstm_forward(const SurrogateModel& m, const sigproc::Waveform& input, double i_bias_ma,
                               double p_rf_dbm);

/// Tape handles for the five weight blocks (parameters when training, constants otherwise).
struct LstmVars {
  grad::Var<double> w_input, w_hidden, bias, w_out, b_out;
};

LstmVars lstm_constants(grad::Tape<double>& tape, const SurrogateModel& m);
LstmVars lstm_parameters(grad::Tape<double>& tape, const SurrogateModel& m);

/// Fused recurrence as one tape node; backward runs BPTT over the whole input span.
grad::Var<double> lstm_sequence(const LstmVars& w, const grad::Var<double>& drive, const grad::Var<double>& cond);

}  // namespace dmle2e::surrogate

#endif  // DMLE2E_SURROGATE_LSTM_HPP
