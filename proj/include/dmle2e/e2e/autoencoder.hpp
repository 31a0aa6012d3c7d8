#ifndef DMLE2E_E2E_AUTOENCODER_HPP
#define DMLE2E_E2E_AUTOENCODER_HPP

#include <cstdint>
#include <random>
#include <vector>

#include "dmle2e/channel/testbed.hpp"
#include "dmle2e/eval/metrics.hpp"
#include "dmle2e/grad/tape.hpp"
#include "dmle2e/surrogate/lstm.hpp"

namespace dmle2e::e2e {

inline constexpr int kSps = 2;
inline constexpr int kPsTaps = 2;
inline constexpr int kDpdTaps = 5;
inline constexpr int kAwgTaps = 9;
inline constexpr int kAwgOrder = 2;
inline constexpr int kDefaultRxTaps = 20;

/// Trainable transmitter and receiver of the autoencoder.
struct AeParams {
  Eigen::VectorXd gcs_levels;  // 4; order defines the symbol mapping
  Eigen::VectorXd ps_taps;     // 2, pulse shaping at 2 SpS
  Eigen::VectorXd dpd_taps;    // 5, predistortion at 2 SpS
  double theta_bias = 0.0;     // unconstrained, mapped into [50, 100] mA
  double theta_prf = 0.0;      // unconstrained, mapped into [-4, 2] dBm
  Eigen::VectorXd rx_ffe_taps; // 2-SpS receiver FFE
  Eigen::VectorXd readout_w;   // 4, logits = w * y + b
  Eigen::VectorXd readout_b;   // 4

  // Fixed (not trained) receiver settings.
  int rx_phase = 0;            // downsampling phase after the FFE
  double rx_scale = 1.0;       // capture normalization copied from the surrogate
  double rx_offset = 0.0;
  double symbol_rate = 0.0;
  double awg_bw = 25e9;        // AWG filter bandwidth applied on the TX side

  /// Equispaced levels, delta filters, mid-range operating point, delta FFE, zero readout.
  static AeParams init(double symbol_rate, double awg_bw, int rx_taps = kDefaultRxTaps);

  void validate() const;
  double i_bias_ma() const;
  double p_rf_dbm() const;
  bool operator==(const AeParams&) const = default;
};

/// low + (high - low) * sigmoid(theta).
double map_operating_point(double theta, double low, double high);

/// AWG super-Gaussian filter realized at 2 SpS; cutoff capped below the Nyquist frequency.
sigproc::FirFilter awg_filter(double symbol_rate, double awg_bw);

/// Tape handles for every AeParams block.
struct AeVars {
  grad::Var<double> gcs_levels, ps_taps, dpd_taps, theta_bias, theta_prf, rx_ffe_taps, readout_w, readout_b;
};
AeVars ae_parameters(grad::Tape<double>& tape, const AeParams& p);
AeVars ae_constants(grad::Tape<double>& tape, const AeParams& p);

/// Gradients of a loss packed in AeParams layout (non-trainable fields copied from `like`).
AeParams ae_gradients(const grad::Gradients<double>& g, const AeParams& like);

struct TxGraph {
  grad::Var<double> drive;   // 2N x B, zero-mean unit-RMS per column
  grad::Var<double> rms;     // 1 x B, RMS before normalization
  grad::Var<double> i_bias;  // 1 x 1, mA
  grad::Var<double> p_rf;    // 1 x 1, dBm
};
/// Symbols are N x B class indices (one sequence per column).
TxGraph tx_graph(const AeVars& v, const Eigen::MatrixXi& symbols, double symbol_rate, double awg_bw);

/// Surrogate response (normalized capture units) to a TX graph.
grad::Var<double> channel_graph(const surrogate::LstmVars& m, const surrogate::SurrogateModel& model,
                                const TxGraph& tx);

/// Shift by `lag` (measured[t + lag] -> out[t]) with zero fill, FFE, downsampling and the
/// affine readout; rows of the result are symbols [first, first + count) of every column,
/// column-major over the batch.
grad::Var<double> rx_graph(const AeVars& v, const grad::Var<double>& rx, long lag, int phase, Eigen::Index first,
                           Eigen::Index count);

struct Transmission {
  sigproc::Waveform waveform;  // 2 SpS, unit RMS
  double i_bias_ma = 0.0;
  double p_rf_dbm = 0.0;
  double rms_scale = 0.0;      // factor applied to reach unit RMS
};

Transmission ae_transmit(const AeParams& p, const sigproc::SymbolFrame& symbols);

/// Logits (one row of 4 per symbol) of a normalized 2-SpS receive waveform.
Eigen::MatrixXd ae_receive(const AeParams& p, const sigproc::Waveform& rx, long sync_lag);

/// Argmax per row, ties to the lowest index.
sigproc::SymbolFrame detect(const Eigen::MatrixXd& logits, double symbol_rate);

/// Symbols trimmed at each end of a training sequence (surrogate burn-in, filter edges).
inline constexpr int kTrainTrimSymbols = 16;

struct LossResult {
  double loss = 0.0;
  double ser = 0.0;  // argmax errors on the scored symbols
  long lag = 0;
};

/// Records the full autoencoder loss on the tape of `v`: transmit, surrogate, AWGN, receive,
/// mean softmax cross-entropy over the trimmed symbols.
grad::Var<double> ae_loss(const AeVars& v, const surrogate::LstmVars& m,
                          const surrogate::SurrogateModel& model, const AeParams& p, const Eigen::MatrixXi& symbols,
                          const Eigen::MatrixXd& noise, LossResult* info = nullptr);

/// Uniform random symbol matrix (N x B).
Eigen::MatrixXi random_symbol_batch(Eigen::Index n, Eigen::Index batch, std::mt19937_64& rng);

/// Standard normal matrix scaled by sqrt(variance).
Eigen::MatrixXd noise_batch(Eigen::Index rows, Eigen::Index cols, double variance, std::mt19937_64& rng);

/// Gaussian noise with the given per-sample variance whose spectrum is flat up to `band` times
/// the Nyquist frequency and (nearly) zero above: the shape of receiver noise that went through
/// the capture resampler's anti-alias filter. band >= 1 gives white noise.
Eigen::MatrixXd band_limited_noise_batch(Eigen::Index rows, Eigen::Index cols, double variance, double band,
                                         std::mt19937_64& rng);

/// Receiver initialization on a surrogate batch: picks the downsampling phase with the best
/// nearest-mean accuracy and sets the readout to the Gaussian ML discriminant of the
/// per-class means with a pooled variance.
void init_receiver(AeParams& p, const surrogate::SurrogateModel& model, double noise_variance, std::uint64_t seed);

struct AeTest {
  eval::SerResult ser;
  sigproc::SymbolFrame symbols;
  Transmission tx;
  sigproc::Waveform capture;  // raw capture before RX DSP
  long lag = 0;
};

/// Transmits through the testbed (one noisy copy), synchronizes, receives and counts errors
/// with the edges trimmed.
AeTest test_ae(const AeParams& p, const channel::ChannelConfig& cfg, std::size_t n_symbols, std::uint64_t seed);

}  // namespace dmle2e::e2e

#endif  // DMLE2E_E2E_AUTOENCODER_HPP
