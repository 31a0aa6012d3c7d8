#include "dmle2e/e2e/autoencoder.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "dmle2e/grad/ops.hpp"
#include "dmle2e/sigproc/analysis.hpp"
#include "dmle2e/sigproc/filters.hpp"
#include "dmle2e/sigproc/resample.hpp"

namespace dmle2e::e2e {

using grad::Tape;
using grad::Var;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using sigproc::Waveform;
using Range = channel::OperatingRange;

namespace {

MatrixXd col(const VectorXd& v) { return MatrixXd(v); }
MatrixXd row(const VectorXd& v) { return MatrixXd(v.transpose()); }
MatrixXd scalar(double v) { return MatrixXd::Constant(1, 1, v); }

VectorXd delta(int n) {
  VectorXd d = VectorXd::Zero(n);
  d[(n - 1) / 2] = 1.0;
  return d;
}

// (x - low) / (high - low) on the tape.
Var<double> minmax(const Var<double>& x, double low, double high) {
  Tape<double>& t = *x.tape();
  return grad::scale(x - t.constant(low), 1.0 / (high - low));
}

// out[t] = x[t + lag], zero outside.
Var<double> shift_rows(const Var<double>& x, long lag) {
  Tape<double>& t = *x.tape();
  const Eigen::Index n = x.rows(), b = x.cols();
  const Eigen::Index k = std::min<Eigen::Index>(std::abs(lag), n);
  if (k == 0) return x;
  const Var<double> zeros = t.constant(MatrixXd::Zero(k, b));
  if (k == n) return zeros;
  if (lag > 0) return grad::vstack<double>({grad::slice_rows(x, k, n - k), zeros});
  return grad::vstack<double>({zeros, grad::slice_rows(x, 0, n - k)});
}

// Shift, FFE, downsampling: one equalized sample per symbol (N x B).
Var<double> equalize(const AeVars& v, const Var<double>& rx, long lag, int phase) {
  const Var<double> aligned = shift_rows(rx, lag);
  const Var<double> eq = grad::conv1d(aligned, v.rx_ffe_taps, (v.rx_ffe_taps.rows() - 1) / 2);
  const Eigen::Index n = (rx.rows() - phase + 1) / kSps;
  return grad::downsample(eq, kSps, phase, n);
}

Var<double> readout(const AeVars& v, const Var<double>& y) {
  const Var<double> flat = grad::reshape(y, y.rows() * y.cols(), 1);
  return grad::matmul(flat, v.readout_w) + v.readout_b;
}

std::vector<int> flat_labels(const Eigen::MatrixXi& symbols, Eigen::Index first, Eigen::Index count) {
  std::vector<int> labels;
  labels.reserve(static_cast<std::size_t>(count * symbols.cols()));
  for (Eigen::Index b = 0; b < symbols.cols(); ++b)
    for (Eigen::Index r = first; r < first + count; ++r) labels.push_back(symbols(r, b));
  return labels;
}

long surrogate_lag(const MatrixXd& drive, const MatrixXd& out, double rate) {
  return sigproc::synchronize(Waveform(drive.col(0), rate), Waveform(out.col(0), rate));
}

}  // namespace

AeParams AeParams::init(double symbol_rate, double awg_bw, int rx_taps) {
  if (!(symbol_rate > 0.0)) throw InvalidArgument("AeParams::init: symbol rate must be positive");
  if (rx_taps < 1) throw InvalidArgument("AeParams::init: need at least one FFE tap");
  AeParams p;
  p.gcs_levels = VectorXd::LinSpaced(4, 0.0, 1.0);
  p.ps_taps = VectorXd::Zero(kPsTaps);
  p.ps_taps[0] = 1.0;
  p.dpd_taps = delta(kDpdTaps);
  p.rx_ffe_taps = delta(rx_taps);
  p.readout_w = VectorXd::Zero(4);
  p.readout_b = VectorXd::Zero(4);
  p.symbol_rate = symbol_rate;
  p.awg_bw = awg_bw;
  return p;
}

void AeParams::validate() const {
  if (gcs_levels.size() != 4 || ps_taps.size() != kPsTaps || dpd_taps.size() != kDpdTaps ||
      readout_w.size() != 4 || readout_b.size() != 4 || rx_ffe_taps.size() < 1) {
    throw InvalidArgument("AeParams: block sizes do not match the autoencoder layout");
  }
  const bool finite = gcs_levels.allFinite() && ps_taps.allFinite() && dpd_taps.allFinite() &&
                      rx_ffe_taps.allFinite() && readout_w.allFinite() && readout_b.allFinite() &&
                      std::isfinite(theta_bias) && std::isfinite(theta_prf) && std::isfinite(rx_scale) &&
                      std::isfinite(rx_offset);
  if (!finite) throw InvalidArgument("AeParams: all entries must be finite");
  if (rx_phase < 0 || rx_phase >= kSps) throw InvalidArgument("AeParams: rx_phase must be 0 or 1");
  if (!(rx_scale > 0.0)) throw InvalidArgument("AeParams: rx_scale must be positive");
  if (!(symbol_rate > 0.0) || !(awg_bw > 0.0)) throw InvalidArgument("AeParams: rates must be positive");
}

double map_operating_point(double theta, double low, double high) {
  if (!(low < high)) throw InvalidArgument("map_operating_point: low must be < high");
  const double s = theta >= 0.0 ? 1.0 / (1.0 + std::exp(-theta)) : std::exp(theta) / (1.0 + std::exp(theta));
  return low + (high - low) * s;
}

double AeParams::i_bias_ma() const { return map_operating_point(theta_bias, Range::kBiasLowMa, Range::kBiasHighMa); }
double AeParams::p_rf_dbm() const { return map_operating_point(theta_prf, Range::kPrfLowDbm, Range::kPrfHighDbm); }

sigproc::FirFilter awg_filter(double symbol_rate, double awg_bw) {
  const double rate = kSps * symbol_rate;
  return sigproc::design_supergaussian(kAwgTaps, kAwgOrder, std::min(awg_bw, 0.45 * rate), rate);
}

AeVars ae_parameters(Tape<double>& t, const AeParams& p) {
  return {t.parameter("ae.gcs_levels", col(p.gcs_levels)), t.parameter("ae.ps_taps", col(p.ps_taps)),
          t.parameter("ae.dpd_taps", col(p.dpd_taps)),     t.parameter("ae.theta_bias", scalar(p.theta_bias)),
          t.parameter("ae.theta_prf", scalar(p.theta_prf)), t.parameter("ae.rx_ffe_taps", col(p.rx_ffe_taps)),
          t.parameter("ae.readout_w", row(p.readout_w)),   t.parameter("ae.readout_b", row(p.readout_b))};
}

AeVars ae_constants(Tape<double>& t, const AeParams& p) {
  return {t.constant(col(p.gcs_levels)), t.constant(col(p.ps_taps)),    t.constant(col(p.dpd_taps)),
          t.constant(scalar(p.theta_bias)), t.constant(scalar(p.theta_prf)), t.constant(col(p.rx_ffe_taps)),
          t.constant(row(p.readout_w)),   t.constant(row(p.readout_b))};
}

AeParams ae_gradients(const grad::Gradients<double>& g, const AeParams& like) {
  AeParams out = like;
  out.gcs_levels = g["ae.gcs_levels"].col(0);
  out.ps_taps = g["ae.ps_taps"].col(0);
  out.dpd_taps = g["ae.dpd_taps"].col(0);
  out.theta_bias = g["ae.theta_bias"](0, 0);
  out.theta_prf = g["ae.theta_prf"](0, 0);
  out.rx_ffe_taps = g["ae.rx_ffe_taps"].col(0);
  out.readout_w = g["ae.readout_w"].row(0).transpose();
  out.readout_b = g["ae.readout_b"].row(0).transpose();
  return out;
}

TxGraph tx_graph(const AeVars& v, const Eigen::MatrixXi& symbols, double symbol_rate, double awg_bw) {
  Tape<double>& t = *v.gcs_levels.tape();
  const Var<double> levels = grad::gather(v.gcs_levels, symbols);
  const Var<double> up = grad::upsample(levels, kSps);
  const Var<double> shaped = grad::conv1d(up, v.ps_taps, (kPsTaps - 1) / 2);
  const Var<double> pre = grad::conv1d(shaped, v.dpd_taps, (kDpdTaps - 1) / 2);
  const Var<double> awg = grad::conv1d(pre, t.constant(MatrixXd(awg_filter(symbol_rate, awg_bw).taps)),
                                       (kAwgTaps - 1) / 2);
  const Var<double> centered = awg - grad::col_mean(awg);
  const Var<double> rms = grad::sqrt(grad::col_mean(grad::square(centered)));
  return {centered / rms, rms, grad::range_map(v.theta_bias, Range::kBiasLowMa, Range::kBiasHighMa),
          grad::range_map(v.theta_prf, Range::kPrfLowDbm, Range::kPrfHighDbm)};
}

Var<double> channel_graph(const surrogate::LstmVars& m, const surrogate::SurrogateModel& model, const TxGraph& tx) {
  const Var<double> cond = grad::vstack<double>({minmax(tx.i_bias, model.bias_low_ma, model.bias_high_ma),
                                                 minmax(tx.p_rf, model.prf_low_dbm, model.prf_high_dbm)});
  return surrogate::lstm_sequence(m, tx.drive, cond);
}

Var<double> rx_graph(const AeVars& v, const Var<double>& rx, long lag, int phase, Eigen::Index first,
                     Eigen::Index count) {
  const Var<double> y = equalize(v, rx, lag, phase);
  if (first < 0 || count < 1 || first + count > y.rows()) throw InvalidArgument("rx_graph: symbol range exceeds the input");
  return readout(v, grad::slice_rows(y, first, count));
}

Transmission ae_transmit(const AeParams& p, const sigproc::SymbolFrame& symbols) {
  p.validate();
  if (symbols.size() == 0) throw InvalidArgument("ae_transmit: empty frame");
  if (p.gcs_levels.maxCoeff() - p.gcs_levels.minCoeff() <= 1e-9) {
    throw DegenerateInput("ae_transmit: constellation levels are all equal");
  }
  Tape<double> t;
  const AeVars v = ae_constants(t, p);
  const Eigen::MatrixXi idx =
      Eigen::Map<const Eigen::VectorXi>(symbols.indices.data(), static_cast<Eigen::Index>(symbols.size()));
  const TxGraph tx = tx_graph(v, idx, p.symbol_rate, p.awg_bw);
  return {Waveform(tx.drive.value().col(0), kSps * symbols.symbol_rate), p.i_bias_ma(), p.p_rf_dbm(),
          1.0 / tx.rms.scalar()};
}

Eigen::MatrixXd ae_receive(const AeParams& p, const Waveform& rx, long sync_lag) {
  p.validate();
  Tape<double> t;
  const AeVars v = ae_constants(t, p);
  const Var<double> x = t.constant(MatrixXd(rx.samples()));
  const Eigen::Index n = (rx.size() - p.rx_phase + 1) / kSps;
  return rx_graph(v, x, sync_lag, p.rx_phase, 0, n).value();
}

sigproc::SymbolFrame detect(const Eigen::MatrixXd& logits, double symbol_rate) {
  if (logits.cols() != 4) throw InvalidArgument("detect: logits must have 4 columns");
  std::vector<int> out(static_cast<std::size_t>(logits.rows()));
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    int best = 0;
    for (int c = 1; c < 4; ++c) {
      if (logits(r, c) > logits(r, best)) best = c;
    }
    out[static_cast<std::size_t>(r)] = best;
  }
  return sigproc::SymbolFrame(std::move(out), symbol_rate);
}

Var<double> ae_loss(const AeVars& v, const surrogate::LstmVars& m,
                    const surrogate::SurrogateModel& model, const AeParams& p, const Eigen::MatrixXi& symbols,
                    const Eigen::MatrixXd& noise, LossResult* info) {
  const Eigen::Index n = symbols.rows();
  if (n <= 2 * kTrainTrimSymbols) throw InvalidArgument("ae_loss: sequences shorter than the edge trim");
  const TxGraph tx = tx_graph(v, symbols, p.symbol_rate, p.awg_bw);
  const Var<double> clean = channel_graph(m, model, tx);
  const long lag = surrogate_lag(tx.drive.value(), clean.value(), kSps * p.symbol_rate);
  const Var<double> rx = grad::add_noise(clean, noise);
  const Eigen::Index count = n - 2 * kTrainTrimSymbols;
  const Var<double> logits = rx_graph(v, rx, lag, p.rx_phase, kTrainTrimSymbols, count);
  const std::vector<int> labels = flat_labels(symbols, kTrainTrimSymbols, count);
  const Var<double> loss = grad::softmax_xent(logits, std::span<const int>(labels));
  if (!std::isfinite(loss.scalar())) throw NumericError("ae_loss: loss is not finite");
  if (info) {
    const sigproc::SymbolFrame d = detect(logits.value(), p.symbol_rate);
    std::size_t errors = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) errors += d.indices[i] != labels[i];
    info->loss = loss.scalar();
    info->ser = static_cast<double>(errors) / static_cast<double>(labels.size());
    info->lag = lag;
  }
  return loss;
}

Eigen::MatrixXi random_symbol_batch(Eigen::Index n, Eigen::Index batch, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> u(0, 3);
  Eigen::MatrixXi s(n, batch);
  for (Eigen::Index b = 0; b < batch; ++b)
    for (Eigen::Index i = 0; i < n; ++i) s(i, b) = u(rng);
  return s;
}

Eigen::MatrixXd noise_batch(Eigen::Index rows, Eigen::Index cols, double variance, std::mt19937_64& rng) {
  if (variance < 0.0) throw InvalidArgument("noise variance must be >= 0");
  std::normal_distribution<double> g(0.0, std::sqrt(variance));
  MatrixXd x(rows, cols);
  for (Eigen::Index b = 0; b < cols; ++b)
    for (Eigen::Index i = 0; i < rows; ++i) x(i, b) = g(rng);
  return x;
}

MatrixXd band_limited_noise_batch(Eigen::Index rows, Eigen::Index cols, double variance, double band,
                                  std::mt19937_64& rng) {
  if (!(band > 0.0)) throw InvalidArgument("noise band must be positive");
  if (band >= 1.0) return noise_batch(rows, cols, variance, rng);
  // Kaiser-windowed sinc with unit energy, so white input keeps its variance in the passband
  // fraction it occupies; the same window as the capture resampler.
  const sigproc::ResampleOptions ro;
  constexpr int kHalf = 32;
  Eigen::VectorXd h(2 * kHalf + 1);
  const double fc = 0.5 * band;  // cycles per sample
  for (int k = -kHalf; k <= kHalf; ++k) {
    const double x = 2.0 * fc * k;
    const double sinc = k == 0 ? 1.0 : std::sin(std::numbers::pi * x) / (std::numbers::pi * x);
    const double r = static_cast<double>(k) / (kHalf + 1);
    h[k + kHalf] = 2.0 * fc * sinc * std::cyl_bessel_i(0.0, ro.kaiser_beta * std::sqrt(1.0 - r * r));
  }
  h /= h.norm();
  const MatrixXd white = noise_batch(rows + h.size() - 1, cols, variance, rng);
  MatrixXd out(rows, cols);
  for (Eigen::Index b = 0; b < cols; ++b)
    for (Eigen::Index i = 0; i < rows; ++i) out(i, b) = white.col(b).segment(i, h.size()).dot(h);
  return out;
}

void init_receiver(AeParams& p, const surrogate::SurrogateModel& model, double noise_variance, std::uint64_t seed) {
  constexpr Eigen::Index kSymbols = 512, kBatch = 8;
  std::mt19937_64 rng(seed);
  const Eigen::MatrixXi symbols = random_symbol_batch(kSymbols, kBatch, rng);
  const MatrixXd noise = noise_batch(kSps * kSymbols, kBatch, noise_variance, rng);

  Tape<double> t;
  const AeVars v = ae_constants(t, p);
  const TxGraph tx = tx_graph(v, symbols, p.symbol_rate, p.awg_bw);
  const Var<double> clean = channel_graph(surrogate::lstm_constants(t, model), model, tx);
  const long lag = surrogate_lag(tx.drive.value(), clean.value(), kSps * p.symbol_rate);
  const Var<double> rx = grad::add_noise(clean, noise);

  const Eigen::Index first = kTrainTrimSymbols, count = kSymbols - 2 * kTrainTrimSymbols;
  int best_phase = 0;
  double best_acc = -1.0;
  std::array<double, 4> best_mean{};
  double best_var = 1.0;
  for (int phase = 0; phase < kSps; ++phase) {
    const MatrixXd y = equalize(v, rx, lag, phase).value();
    std::array<double, 4> sum{}, mean{};
    std::array<double, 4> n{};
    for (Eigen::Index b = 0; b < kBatch; ++b)
      for (Eigen::Index r = first; r < first + count; ++r) sum[symbols(r, b)] += y(r, b), n[symbols(r, b)] += 1.0;
    for (int c = 0; c < 4; ++c) mean[c] = n[c] > 0 ? sum[c] / n[c] : 0.0;
    double ss = 0.0, hits = 0.0;
    for (Eigen::Index b = 0; b < kBatch; ++b) {
      for (Eigen::Index r = first; r < first + count; ++r) {
        const double val = y(r, b);
        ss += (val - mean[symbols(r, b)]) * (val - mean[symbols(r, b)]);
        int nearest = 0;
        for (int c = 1; c < 4; ++c) {
          if (std::abs(val - mean[c]) < std::abs(val - mean[nearest])) nearest = c;
        }
        hits += nearest == symbols(r, b);
      }
    }
    const double total = static_cast<double>(count * kBatch);
    if (hits / total > best_acc) {
      best_acc = hits / total;
      best_phase = phase;
      best_mean = mean;
      best_var = std::max(ss / total, 1e-12);
    }
  }
  p.rx_phase = best_phase;
  for (int c = 0; c < 4; ++c) {
    p.readout_w[c] = best_mean[c] / best_var;
    p.readout_b[c] = -best_mean[c] * best_mean[c] / (2.0 * best_var);
  }
}

AeTest test_ae(const AeParams& p, const channel::ChannelConfig& cfg, std::size_t n_symbols, std::uint64_t seed) {
  if (n_symbols <= 2 * eval::kTrimSymbols) throw InvalidArgument("test_ae: frame shorter than the edge trim");
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), 0xAEu};
  std::mt19937_64 rng(seq);
  std::uniform_int_distribution<int> u(0, 3);
  std::vector<int> idx(n_symbols);
  for (auto& s : idx) s = u(rng);

  sigproc::SymbolFrame symbols(std::move(idx), p.symbol_rate);
  Transmission tx = ae_transmit(p, symbols);
  Waveform capture = channel::testbed_propagate(tx.waveform, tx.i_bias_ma, tx.p_rf_dbm, 1, rng(), cfg).front();
  AeTest out{{}, std::move(symbols), std::move(tx), std::move(capture), 0};
  out.lag = sigproc::synchronize(out.tx.waveform, out.capture);
  const Waveform normalized((out.capture.samples().array() - p.rx_offset) / p.rx_scale, out.capture.sample_rate());
  const MatrixXd logits = ae_receive(p, normalized, out.lag);
  const sigproc::SymbolFrame detected = detect(logits.topRows(static_cast<Eigen::Index>(n_symbols)), p.symbol_rate);
  out.ser = eval::compute_ser(eval::trim_symbols(detected), eval::trim_symbols(out.symbols));
  return out;
}

}  // namespace dmle2e::e2e
