#include "dmle2e/e2e/train.hpp"

#include <chrono>
#include <cmath>
#include <numbers>

#include "dmle2e/grad/adam.hpp"
#include "dmle2e/grad/ops.hpp"

namespace dmle2e::e2e {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

std::vector<MatrixXd> pack(const AeParams& p) {
  return {MatrixXd(p.gcs_levels),  MatrixXd(p.ps_taps),
          MatrixXd(p.dpd_taps),    MatrixXd::Constant(1, 1, p.theta_bias),
          MatrixXd::Constant(1, 1, p.theta_prf), MatrixXd(p.rx_ffe_taps),
          MatrixXd(p.readout_w.transpose()), MatrixXd(p.readout_b.transpose())};
}

void unpack(const std::vector<MatrixXd>& b, AeParams& p) {
  p.gcs_levels = b[0].col(0);
  p.ps_taps = b[1].col(0);
  p.dpd_taps = b[2].col(0);
  p.theta_bias = b[3](0, 0);
  p.theta_prf = b[4](0, 0);
  p.rx_ffe_taps = b[5].col(0);
  p.readout_w = b[6].row(0).transpose();
  p.readout_b = b[7].row(0).transpose();
}

AeVars vars_from(const std::vector<grad::Var<double>>& in) {
  return {in[0], in[1], in[2], in[3], in[4], in[5], in[6], in[7]};
}

// The transmitted waveform is invariant to the scale of the level spread and of the
// pulse-shaping and DPD taps, so Adam would only inflate their norms. Pinning each block
// to its initial norm keeps the effective step size constant without changing the
// transmitted signal.
std::vector<double> tx_norms(const std::vector<MatrixXd>& b) {
  return {(b[0].array() - b[0].mean()).matrix().norm(), b[1].norm(), b[2].norm()};
}

void pin_tx_scale(std::vector<MatrixXd>& b, const std::vector<double>& norms) {
  const std::vector<double> now = tx_norms(b);
  const double mean = b[0].mean();
  if (now[0] > 0.0) b[0] = ((b[0].array() - mean) * (norms[0] / now[0]) + mean).matrix();
  for (std::size_t k = 1; k < 3; ++k) {
    if (now[k] > 0.0) b[k] *= norms[k] / now[k];
  }
}

std::uint64_t mix(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream)};
  std::mt19937_64 rng(seq);
  return rng();
}

}  // namespace

bool TrainReport::same_run(const TrainReport& o) const {
  return loss == o.loss && surrogate_ser == o.surrogate_ser && i_bias_ma == o.i_bias_ma && p_rf_dbm == o.p_rf_dbm &&
         noise_variance == o.noise_variance && steps == o.steps && seed == o.seed;
}

AeFit train_ae(const surrogate::SurrogateModel& model, const AeTrainOptions& opts, double awg_bw) {
  model.validate();
  if (opts.steps < 1 || opts.batch < 1) throw InvalidArgument("train_ae: steps and batch must be >= 1");
  if (!(opts.lr > 0.0) || !(opts.lr_final > 0.0)) throw InvalidArgument("train_ae: learning rates must be positive");
  const auto start = std::chrono::steady_clock::now();

  AeFit fit{AeParams::init(model.symbol_rate, awg_bw, opts.rx_taps), {}};
  AeParams& p = fit.params;
  p.rx_scale = model.output_scale;
  p.rx_offset = model.output_offset;
  const double noise = opts.noise_variance < 0.0 ? model.noise_variance : opts.noise_variance;
  init_receiver(p, model, noise, mix(opts.seed, 1));

  TrainReport& rep = fit.report;
  rep.seed = opts.seed;
  rep.noise_variance = noise;

  std::mt19937_64 rng(mix(opts.seed, 2));
  std::vector<MatrixXd> blocks = pack(p);
  const std::vector<double> norms = tx_norms(blocks);
  // The ML readout starts at logit slopes of order 1/noise variance; a unit-scale step
  // would leave it frozen while the equalizer moves, so it steps relative to its size.
  const double readout_scale =
      std::max(1.0, std::sqrt((blocks[6].squaredNorm() + blocks[7].squaredNorm()) / 8.0));
  grad::Adam<double> adam(opts.lr), readout_adam(opts.lr * readout_scale);
  std::vector<MatrixXd*> ptrs, readout_ptrs{&blocks[6], &blocks[7]};
  for (std::size_t k = 0; k < 6; ++k) ptrs.push_back(&blocks[k]);

  grad::Tape<double> tape;
  for (int step = 1; step <= opts.steps; ++step) {
    const double progress = opts.steps > 1 ? static_cast<double>(step - 1) / (opts.steps - 1) : 1.0;
    const double lr = opts.lr_final + 0.5 * (opts.lr - opts.lr_final) * (1.0 + std::cos(std::numbers::pi * progress));
    adam.set_lr(lr);
    readout_adam.set_lr(lr * readout_scale);
    const Eigen::MatrixXi symbols = random_symbol_batch(opts.symbols_per_seq, opts.batch, rng);
    const MatrixXd n = band_limited_noise_batch(kSps * opts.symbols_per_seq, opts.batch, noise, opts.noise_band, rng);
    tape.reset();
    const AeVars v = ae_parameters(tape, p);
    LossResult info;
    grad::Gradients<double> g;
    try {
      const auto loss = ae_loss(v, surrogate::lstm_constants(tape, model), model, p, symbols, n, &info);
      g = tape.backward(loss);
    } catch (const NumericError& e) {
      throw AeTrainingDiverged("autoencoder training diverged at step " + std::to_string(step) + ": " + e.what(), p);
    }
    std::vector<MatrixXd> grads = pack(ae_gradients(g, p));
    double norm2 = 0.0;
    for (const auto& m : grads) norm2 += m.squaredNorm();
    const double norm = std::sqrt(norm2);
    if (opts.clip_norm > 0.0 && norm > opts.clip_norm) {
      for (auto& m : grads) m *= opts.clip_norm / norm;
    }
    adam.step(ptrs, {grads.begin(), grads.begin() + 6});
    readout_adam.step(readout_ptrs, {grads.begin() + 6, grads.end()});
    pin_tx_scale(blocks, norms);
    AeParams next = p;
    unpack(blocks, next);
    try {
      next.validate();
    } catch (const InvalidArgument&) {
      throw AeTrainingDiverged("autoencoder parameters became non-finite at step " + std::to_string(step), p);
    }
    p = std::move(next);
    rep.loss.push_back(info.loss);
    rep.surrogate_ser.push_back(info.ser);
  }
  rep.steps = opts.steps;
  rep.i_bias_ma = p.i_bias_ma();
  rep.p_rf_dbm = p.p_rf_dbm();
  rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return fit;
}

grad::GradientCheck check_ae_gradient(const surrogate::SurrogateModel& model, double awg_bw, std::uint64_t seed,
                                      double h) {
  constexpr Eigen::Index kSymbols = 96, kBatch = 2;
  AeParams p = AeParams::init(model.symbol_rate, awg_bw);
  p.rx_scale = model.output_scale;
  p.rx_offset = model.output_offset;
  const double noise = model.noise_variance;
  init_receiver(p, model, noise, mix(seed, 1));

  // Move away from the symmetric initialization so every block has a generic gradient.
  std::mt19937_64 rng(mix(seed, 3));
  std::normal_distribution<double> g(0.0, 0.05);
  std::vector<MatrixXd> point = pack(p);
  for (std::size_t k = 0; k < 6; ++k)
    for (Eigen::Index i = 0; i < point[k].size(); ++i) point[k].data()[i] += g(rng);
  const Eigen::MatrixXi symbols = random_symbol_batch(kSymbols, kBatch, rng);
  const MatrixXd n = noise_batch(kSps * kSymbols, kBatch, noise, rng);

  const grad::MultiFunction f = [&](grad::Tape<double>& t, const std::vector<grad::Var<double>>& in) {
    return ae_loss(vars_from(in), surrogate::lstm_constants(t, model), model, p, symbols, n);
  };
  return grad::check_gradient(f, point, h);
}

}  // namespace dmle2e::e2e
