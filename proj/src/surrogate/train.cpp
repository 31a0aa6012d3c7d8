#include "dmle2e/surrogate/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>

#include "dmle2e/grad/adam.hpp"
#include "dmle2e/grad/ops.hpp"

namespace dmle2e::surrogate {

using Eigen::MatrixXd;

namespace {

struct Split {
  std::vector<const DatasetEntry*> train, test;
};

Split split_entries(const SurrogateDataset& ds, double fraction) {
  const std::size_t n = ds.entries.size();
  if (!(fraction > 0.0 && fraction <= 1.0)) throw InvalidArgument("train split must lie in (0, 1]");
  Split s;
  if (fraction == 1.0) {
    for (const auto& e : ds.entries) s.train.push_back(&e);
    s.test = s.train;
    return s;
  }
  const auto n_train = static_cast<std::size_t>(std::lround(fraction * static_cast<double>(n)));
  if (n_train < 1 || n_train >= n) throw InvalidArgument("dataset needs at least one training and one held-out sequence");
  for (std::size_t k = 0; k < n; ++k) (k < n_train ? s.train : s.test).push_back(&ds.entries[k]);
  return s;
}

// Stacks equal-length sequences as columns; drive, delayed target and conditioning.
struct Batch {
  MatrixXd drive, target, cond;
};

Batch full_sequences(const SurrogateModel& m, const std::vector<const DatasetEntry*>& entries) {
  const Eigen::Index len = entries.front()->input.size();
  Batch b{MatrixXd(len, static_cast<Eigen::Index>(entries.size())), MatrixXd(len, static_cast<Eigen::Index>(entries.size())),
          MatrixXd(2, static_cast<Eigen::Index>(entries.size()))};
  for (std::size_t k = 0; k < entries.size(); ++k) {
    const auto c = static_cast<Eigen::Index>(k);
    if (entries[k]->input.size() != len) throw InvalidArgument("sequence_mse: sequences must share one length");
    b.drive.col(c) = entries[k]->input.samples();
    b.target.col(c) = entries[k]->output.samples();
    b.cond.col(c) = m.conditioning(entries[k]->i_bias_ma, entries[k]->p_rf_dbm);
  }
  return b;
}

double global_norm(const std::vector<MatrixXd>& g) {
  double s = 0.0;
  for (const auto& m : g) s += m.squaredNorm();
  return std::sqrt(s);
}

}  // namespace

double sequence_mse(const SurrogateModel& m, const std::vector<const DatasetEntry*>& entries, int burn_in) {
  if (entries.empty()) throw InvalidArgument("sequence_mse: no sequences");
  const Batch b = full_sequences(m, entries);
  const MatrixXd y = lstm_run(m, b.drive, b.cond);
  const Eigen::Index start = std::max<Eigen::Index>(burn_in, m.delay_samples);
  const Eigen::Index rows = y.rows() - start;
  if (rows < 1) throw InvalidArgument("sequence_mse: sequences shorter than the burn-in");
  return (y.bottomRows(rows) - b.target.middleRows(start - m.delay_samples, rows)).squaredNorm() /
         static_cast<double>(rows * y.cols());
}

SurrogateFit train_surrogate(const SurrogateDataset& ds, const TrainOptions& opts) {
  if (opts.batch < 1 || opts.window < 2 || opts.steps < 0 || opts.eval_every < 1 || opts.delay < 0 ||
      opts.burn_in < 0) {
    throw InvalidArgument("invalid surrogate training options");
  }
  if (ds.entries.empty()) throw InvalidArgument("train_surrogate: empty dataset");
  const Split split = split_entries(ds, opts.split);
  const Eigen::Index window = std::min<Eigen::Index>(opts.window, split.train.front()->input.size());
  const Eigen::Index start = std::max<Eigen::Index>(opts.burn_in, opts.delay);
  if (window <= start) throw InvalidArgument("training window shorter than burn-in/delay");

  SurrogateModel model = SurrogateModel::init(opts.hidden_size, opts.seed);
  model.delay_samples = opts.delay;
  model.symbol_rate = ds.symbol_rate;
  model.sps = ds.sps;
  model.snr_db = ds.snr_db;
  model.noise_variance = ds.noise_variance;
  model.output_scale = ds.entries.front().norm_scale;
  model.output_offset = ds.entries.front().norm_offset;

  // Held-out variance baseline: predicting the held-out mean.
  double mean = 0.0, count = 0.0;
  for (const auto* e : split.test) mean += e->output.samples().sum(), count += static_cast<double>(e->output.size());
  mean /= count;
  double var = 0.0;
  for (const auto* e : split.test) var += (e->output.samples().array() - mean).square().sum();

  SurrogateFit fit;
  fit.test_variance = var / count;
  fit.model = model;
  fit.best_test_mse = sequence_mse(model, split.test, opts.burn_in);
  fit.history.step.push_back(0);
  fit.history.train_mse.push_back(std::numeric_limits<double>::quiet_NaN());
  fit.history.test_mse.push_back(fit.best_test_mse);

  std::mt19937_64 rng(opts.seed ^ 0x5deece66dULL);
  std::uniform_int_distribution<std::size_t> pick(0, split.train.size() - 1);
  grad::Adam<double> adam(opts.lr);
  std::vector<MatrixXd*> params{&model.w_input, &model.w_hidden, &model.bias, &model.w_out, &model.b_out};

  MatrixXd drive(window, opts.batch), target(window - start, opts.batch), cond(2, opts.batch);
  double running = 0.0;
  int running_n = 0;
  grad::Tape<double> tape;
  for (int step = 1; step <= opts.steps; ++step) {
    for (int b = 0; b < opts.batch; ++b) {
      const std::size_t k = pick(rng);
      const DatasetEntry& in = *split.train[k];
      const DatasetEntry& out = opts.shuffle_pairs ? *split.train[(k + 1) % split.train.size()] : in;
      const Eigen::Index len = std::min(in.input.size(), out.output.size());
      std::uniform_int_distribution<Eigen::Index> offset(0, len - window);
      const Eigen::Index o = offset(rng);
      drive.col(b) = in.input.samples().segment(o, window);
      target.col(b) = out.output.samples().segment(o + start - opts.delay, window - start);
      cond.col(b) = model.conditioning(in.i_bias_ma, in.p_rf_dbm);
    }

    const double progress = opts.steps > 1 ? static_cast<double>(step - 1) / (opts.steps - 1) : 1.0;
    adam.set_lr(opts.lr_final + 0.5 * (opts.lr - opts.lr_final) * (1.0 + std::cos(std::numbers::pi * progress)));

    tape.reset();
    const LstmVars w = lstm_parameters(tape, model);
    const auto y = lstm_sequence(w, tape.constant(drive), tape.constant(cond));
    const auto loss = grad::mean(grad::square(grad::slice_rows(y, start, window - start) - tape.constant(target)));
    const double lv = loss.scalar();
    if (!std::isfinite(lv)) {
      throw TrainingDiverged("surrogate training diverged at step " + std::to_string(step), fit.model);
    }
    const auto g = tape.backward(loss);
    std::vector<MatrixXd> grads{g[w.w_input], g[w.w_hidden], g[w.bias], g[w.w_out], g[w.b_out]};
    const double norm = global_norm(grads);
    if (opts.clip_norm > 0.0 && norm > opts.clip_norm) {
      for (auto& m : grads) m *= opts.clip_norm / norm;
    }
    adam.step(params, grads);
    running += lv;
    ++running_n;

    if (step % opts.eval_every == 0 || step == opts.steps) {
      const double test = sequence_mse(model, split.test, opts.burn_in);
      if (!std::isfinite(test)) {
        throw TrainingDiverged("surrogate held-out loss diverged at step " + std::to_string(step), fit.model);
      }
      fit.history.step.push_back(step);
      fit.history.train_mse.push_back(running / running_n);
      fit.history.test_mse.push_back(test);
      running = 0.0;
      running_n = 0;
      if (test < fit.best_test_mse) {
        fit.best_test_mse = test;
        fit.model = model;
      }
    }
  }
  return fit;
}

}  // namespace dmle2e::surrogate
