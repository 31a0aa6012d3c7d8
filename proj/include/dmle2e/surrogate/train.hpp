#ifndef DMLE2E_SURROGATE_TRAIN_HPP
#define DMLE2E_SURROGATE_TRAIN_HPP

#include <cstdint>
#include <vector>

#include "dmle2e/surrogate/dataset.hpp"
#include "dmle2e/surrogate/lstm.hpp"

namespace dmle2e::surrogate {

struct TrainOptions {
  int hidden_size = 64;
  double lr = 1e-3;
  double lr_final = 1e-4;  // cosine decay target at the last step
  int batch = 16;       // windows per step
  int window = 512;     // samples per window
  int steps = 3000;
  int eval_every = 100;
  double split = 0.9;   // fraction of sequences used for training
  int burn_in = 16;     // leading samples excluded from the loss (zero initial state)
  long delay = 4;       // target trails the input by this many samples
  double clip_norm = 1.0;
  std::uint64_t seed = 1;
  /// Negative control: pair each training input with another sequence's output.
  bool shuffle_pairs = false;
};

struct TrainHistory {
  std::vector<long> step;
  std::vector<double> train_mse;  // running mean over the steps since the last evaluation
  std::vector<double> test_mse;
};

struct SurrogateFit {
  SurrogateModel model;  // best held-out checkpoint
  TrainHistory history;
  double best_test_mse = 0.0;
  double test_variance = 0.0;  // MSE of predicting the held-out mean, for reference
};

/// Loss diverged to a non-finite value; carries the last good checkpoint.
class TrainingDiverged : public NumericError {
 public:
  TrainingDiverged(const std::string& msg, SurrogateModel checkpoint)
      : NumericError(msg), checkpoint_(std::move(checkpoint)) {}
  const SurrogateModel& checkpoint() const { return checkpoint_; }

 private:
  SurrogateModel checkpoint_;
};

/// Adam on windowed minibatches with global-norm gradient clipping; keeps the model
/// with the lowest held-out MSE. With split = 1 the held-out set is the training set.
SurrogateFit train_surrogate(const SurrogateDataset& ds, const TrainOptions& opts);

/// Full-sequence MSE against delayed targets, excluding burn-in.
double sequence_mse(const SurrogateModel& m, const std::vector<const DatasetEntry*>& entries, int burn_in);

}  // namespace dmle2e::surrogate

#endif  // DMLE2E_SURROGATE_TRAIN_HPP
