#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include "dmle2e/grad/check.hpp"
#include "dmle2e/grad/ops.hpp"
#include "dmle2e/surrogate/lstm.hpp"
#include "dmle2e/surrogate/model_io.hpp"
#include "dmle2e/surrogate/train.hpp"

using namespace dmle2e;
using namespace dmle2e::surrogate;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

VectorXd noise(Eigen::Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  VectorXd v(n);
  for (auto& x : v) x = g(rng);
  return v;
}

SurrogateModel zero_model(int hidden, double readout_bias) {
  SurrogateModel m;
  m.hidden_size = hidden;
  m.w_input = MatrixXd::Zero(4 * hidden, 3);
  m.w_hidden = MatrixXd::Zero(4 * hidden, hidden);
  m.bias = MatrixXd::Zero(4 * hidden, 1);
  m.w_out = MatrixXd::Zero(1, hidden);
  m.b_out = MatrixXd::Constant(1, 1, readout_bias);
  return m;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

const channel::ChannelConfig& channel_config() {
  static const channel::ChannelConfig cfg = channel::load_channel_config(DMLE2E_CHANNEL_CONFIG);
  return cfg;
}

DatasetOptions small_dataset_options() {
  DatasetOptions o;
  o.n_sequences = 6;
  o.symbols_per_seq = 256;
  o.n_copies = 3;
  o.seed = 5;
  return o;
}

// Generated once; the channel simulation dominates the cost of these tests.
const SurrogateDataset& small_dataset() {
  static const SurrogateDataset ds = gen_dataset(small_dataset_options(), channel_config());
  return ds;
}

TrainOptions small_train_options() {
  TrainOptions t;
  t.hidden_size = 16;
  t.lr = 5e-3;
  t.lr_final = 5e-4;
  t.batch = 4;
  t.window = 256;
  t.steps = 1000;
  t.eval_every = 100;
  t.split = 0.5;
  return t;
}

}  // namespace

TEST(LstmForward, ZeroWeightsOutputReadoutBias) {
  const SurrogateModel m = zero_model(5, 0.37);
  const auto y = lstm_forward(m, sigproc::Waveform(noise(40, 1), 40e9), 60.0, 0.0);
  EXPECT_TRUE((y.samples().array() == 0.37).all());
}

TEST(LstmForward, SingleStepByHand) {
  SurrogateModel m = zero_model(1, 0.1);
  m.w_input << 0.5, 0.2, -0.1,  //
      -0.3, 0.4, 0.2,           //
      0.8, -0.5, 0.3,           //
      0.1, 0.1, -0.6;
  m.bias << 0.05, -0.02, 0.1, 0.2;
  m.w_out << 1.7;
  const double x = 0.9, ib = 80.0, pr = -1.0;
  const Eigen::Vector2d c = m.conditioning(ib, pr);
  auto pre = [&](int r) { return m.w_input(r, 0) * x + m.w_input(r, 1) * c[0] + m.w_input(r, 2) * c[1] + m.bias(r, 0); };
  const double i = sigmoid(pre(0)), g = std::tanh(pre(2)), o = sigmoid(pre(3));
  const double cell = i * g;  // f * c_prev vanishes with c_prev = 0
  const double expected = 1.7 * o * std::tanh(cell) + 0.1;
  const auto y = lstm_forward(m, sigproc::Waveform(VectorXd::Constant(1, x), 1.0), ib, pr);
  EXPECT_NEAR(y[0], expected, 1e-12);
}

TEST(LstmForward, OutputLengthMatchesInput) {
  const SurrogateModel m = SurrogateModel::init(8, 3);
  for (Eigen::Index n : {1, 7, 1024}) {
    const auto y = lstm_forward(m, sigproc::Waveform(noise(n, 2), 40e9), 75.0, 0.0);
    EXPECT_EQ(y.size(), n);
    EXPECT_EQ(y.sample_rate(), 40e9);
  }
}

TEST(LstmForward, Causal) {
  const SurrogateModel m = SurrogateModel::init(8, 4);
  const VectorXd x = noise(200, 5);
  const auto full = lstm_forward(m, sigproc::Waveform(x, 1.0), 70.0, 1.0);
  const auto head = lstm_forward(m, sigproc::Waveform(x.head(57), 1.0), 70.0, 1.0);
  EXPECT_EQ(full.samples().head(57), head.samples());
}

TEST(LstmForward, BatchColumnsMatchSingleRuns) {
  const SurrogateModel m = SurrogateModel::init(6, 5);
  MatrixXd drive(50, 3);
  MatrixXd cond(2, 3);
  for (int b = 0; b < 3; ++b) {
    drive.col(b) = noise(50, 10 + b);
    cond.col(b) = m.conditioning(55.0 + 20 * b, -3.0 + 2 * b);
  }
  const MatrixXd y = lstm_run(m, drive, cond);
  for (int b = 0; b < 3; ++b) {
    const auto single = lstm_forward(m, sigproc::Waveform(drive.col(b), 1.0), 55.0 + 20 * b, -3.0 + 2 * b);
    EXPECT_LE((y.col(b) - single.samples()).cwiseAbs().maxCoeff(), 1e-14);
  }
}

TEST(LstmSequence, MatchesPlainForward) {
  const SurrogateModel m = SurrogateModel::init(5, 6);
  MatrixXd drive = noise(30, 7);
  grad::Tape<double> t;
  const LstmVars w = lstm_constants(t, m);
  const auto y = lstm_sequence(w, t.constant(drive), t.constant(MatrixXd(m.conditioning(65.0, 0.5))));
  EXPECT_LE((y.value() - lstm_run(m, drive, m.conditioning(65.0, 0.5))).cwiseAbs().maxCoeff(), 0.0);
}

TEST(LstmSequence, GradientMatchesFiniteDifferences) {
  const SurrogateModel m = SurrogateModel::init(4, 8);
  const MatrixXd target = noise(24, 9).reshaped(12, 2);
  const grad::MultiFunction f = [&](grad::Tape<double>& t, const std::vector<grad::Var<double>>& x) {
    const LstmVars w{x[0], x[1], x[2], x[3], x[4]};
    const auto y = lstm_sequence(w, x[5], x[6]);
    return grad::mean(grad::square(y - t.constant(target)));
  };
  MatrixXd cond(2, 2);
  cond << 0.3, 0.8, 0.1, 0.6;
  const auto r = grad::check_gradient(f, {m.w_input, m.w_hidden, m.bias, m.w_out, m.b_out, noise(24, 10).reshaped(12, 2), cond});
  EXPECT_LT(r.max_rel_error, 1e-5) << "input " << r.worst_input << " index " << r.worst_index;
}

TEST(LstmSequence, BroadcastConditioningGradient) {
  const SurrogateModel m = SurrogateModel::init(3, 11);
  const grad::MultiFunction f = [&](grad::Tape<double>& t, const std::vector<grad::Var<double>>& x) {
    const auto w = lstm_constants(t, m);
    return grad::mean(grad::square(lstm_sequence(w, x[0], x[1])));
  };
  MatrixXd cond(2, 1);
  cond << 0.4, 0.7;
  const auto r = grad::check_gradient(f, {noise(30, 12).reshaped(10, 3), cond});
  EXPECT_LT(r.max_rel_error, 1e-5);
}

TEST(SurrogateModel, InitShapesAndValidation) {
  const SurrogateModel m = SurrogateModel::init(16, 1);
  EXPECT_NO_THROW(m.validate());
  EXPECT_EQ(m.w_input.rows(), 64);
  EXPECT_EQ(SurrogateModel::init(16, 1), m);
  SurrogateModel bad = m;
  bad.w_out(0, 0) = std::nan("");
  EXPECT_THROW(bad.validate(), InvalidArgument);
  bad = m;
  bad.w_hidden.resize(64, 15);
  EXPECT_THROW(bad.validate(), InvalidArgument);
}

TEST(RandomDrive, ZeroMeanUnitRmsAndDeterministic) {
  const auto a = random_drive(500, 20e9, 9);
  EXPECT_EQ(a.size(), 1000);
  EXPECT_DOUBLE_EQ(a.sample_rate(), 40e9);
  EXPECT_NEAR(a.samples().mean(), 0.0, 1e-12);
  EXPECT_NEAR(a.samples().squaredNorm() / a.size(), 1.0, 1e-12);
  EXPECT_EQ(a, random_drive(500, 20e9, 9));
  EXPECT_NE(a, random_drive(500, 20e9, 10));
  EXPECT_THROW(random_drive(0, 20e9, 1), InvalidArgument);
}

TEST(Dataset, ShapesRangesAndCalibration) {
  const SurrogateDataset& ds = small_dataset();
  ASSERT_EQ(ds.entries.size(), 6u);
  double lo = 1.0, hi = 0.0;
  for (const auto& e : ds.entries) {
    EXPECT_EQ(e.input.size(), e.output.size());
    EXPECT_EQ(e.input.size(), 2 * 256 - 2 * DatasetOptions{}.edge_trim);
    EXPECT_GE(e.i_bias_ma, channel::OperatingRange::kBiasLowMa);
    EXPECT_LE(e.i_bias_ma, channel::OperatingRange::kBiasHighMa);
    EXPECT_GE(e.p_rf_dbm, channel::OperatingRange::kPrfLowDbm);
    EXPECT_LE(e.p_rf_dbm, channel::OperatingRange::kPrfHighDbm);
    EXPECT_EQ(e.lag, ds.entries.front().lag);
    EXPECT_EQ(e.norm_scale, ds.entries.front().norm_scale);
    lo = std::min(lo, e.output.samples().minCoeff());
    hi = std::max(hi, e.output.samples().maxCoeff());
  }
  // One dataset-wide min/max map.
  EXPECT_NEAR(lo, 0.0, 1e-12);
  EXPECT_NEAR(hi, 1.0, 1e-12);
  EXPECT_TRUE(std::isfinite(ds.snr_db));
  EXPECT_GT(ds.snr_db, 0.0);
  EXPECT_GT(ds.noise_variance, 0.0);
  EXPECT_LT(ds.noise_variance, 1.0);
}

TEST(Dataset, SaveLoadRoundTripIsExact) {
  const auto dir = std::filesystem::temp_directory_path() / "dmle2e_test_dataset";
  std::filesystem::remove_all(dir);
  save_dataset(dir, small_dataset());
  EXPECT_EQ(load_dataset(dir), small_dataset());
  EXPECT_THROW(load_dataset(dir / "missing"), std::exception);
}

TEST(Dataset, RejectsBadOptions) {
  DatasetOptions o = small_dataset_options();
  o.n_copies = 1;
  EXPECT_THROW(gen_dataset(o, channel_config()), InvalidArgument);
  o = small_dataset_options();
  o.symbols_per_seq = 40;
  EXPECT_THROW(gen_dataset(o, channel_config()), InvalidArgument);
}

TEST(TrainSurrogate, BeatsMeanPredictorAndIsDeterministic) {
  const SurrogateFit a = train_surrogate(small_dataset(), small_train_options());
  EXPECT_LT(a.best_test_mse, 0.5 * a.test_variance);
  EXPECT_EQ(a.model.noise_variance, small_dataset().noise_variance);
  EXPECT_EQ(a.model.symbol_rate, small_dataset().symbol_rate);
  EXPECT_EQ(a.history.step.size(), a.history.test_mse.size());
  const SurrogateFit b = train_surrogate(small_dataset(), small_train_options());
  EXPECT_EQ(save_model(a.model), save_model(b.model));
}

TEST(TrainSurrogate, ShuffledPairsLearnLess) {
  // Negative control: with inputs paired to the wrong outputs there is nothing to learn.
  TrainOptions t = small_train_options();
  const SurrogateFit good = train_surrogate(small_dataset(), t);
  t.shuffle_pairs = true;
  const SurrogateFit bad = train_surrogate(small_dataset(), t);
  EXPECT_GT(bad.best_test_mse, 2.0 * good.best_test_mse);
}

TEST(ModelIo, RoundTripIsExactAndRejectsGarbage) {
  SurrogateModel m = SurrogateModel::init(6, 3);
  m.symbol_rate = 30e9;
  m.noise_variance = 1.25e-3;
  m.snr_db = 21.5;
  const std::string bytes = save_model(m);
  EXPECT_EQ(save_model(load_model(bytes)), bytes);
  EXPECT_THROW(load_model("not a model"), FormatError);
  EXPECT_THROW(load_model(bytes.substr(0, bytes.size() / 2)), FormatError);
}
