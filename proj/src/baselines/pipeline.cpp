#include "dmle2e/baselines/pipeline.hpp"

#include <cmath>
#include <random>

#include "dmle2e/sigproc/analysis.hpp"
#include "dmle2e/sigproc/filters.hpp"

namespace dmle2e::baselines {

using sigproc::Waveform;

sigproc::SymbolFrame random_symbols(std::size_t n, double symbol_rate, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> u(0, 3);
  std::vector<int> idx(n);
  for (auto& s : idx) s = u(rng);
  return sigproc::SymbolFrame(std::move(idx), symbol_rate);
}

Waveform tx_rrc(const sigproc::SymbolFrame& symbols) {
  if (symbols.size() == 0) throw InvalidArgument("tx_rrc: empty frame");
  std::vector<double> levels(symbols.size());
  for (std::size_t k = 0; k < levels.size(); ++k) levels[k] = symbol_level(symbols.indices[k]);
  const Waveform up = sigproc::upsample_insert<double>(levels, 2, symbols.symbol_rate);
  const Waveform shaped = sigproc::fir_apply(up, sigproc::design_rrc(kRrcTaps, kRrcRolloff, 2));
  const double rms = std::sqrt(shaped.samples().squaredNorm() / static_cast<double>(shaped.size()));
  if (!(rms > 0.0)) throw DegenerateInput("tx_rrc: transmitted waveform is zero");
  return Waveform(shaped.samples() / rms, shaped.sample_rate());
}

Waveform rx_matched(const Waveform& rx) { return sigproc::fir_apply(rx, sigproc::design_rrc(kRrcTaps, kRrcRolloff, 2)); }

RrcCapture capture_rrc(const channel::ChannelConfig& cfg, double symbol_rate, double i_bias_ma, double p_rf_dbm,
                       std::size_t n_symbols, std::uint64_t seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  std::mt19937_64 rng(seq);
  RrcCapture cap{random_symbols(n_symbols, symbol_rate, rng()), Waveform(Eigen::VectorXd::Zero(1), 1.0),
                 Waveform(Eigen::VectorXd::Zero(1), 1.0), Waveform(Eigen::VectorXd::Zero(1), 1.0), 0, i_bias_ma,
                 p_rf_dbm};
  cap.tx = tx_rrc(cap.symbols);
  cap.capture = channel::testbed_propagate(cap.tx, i_bias_ma, p_rf_dbm, 1, rng(), cfg).front();
  cap.lag = sigproc::synchronize(cap.tx, cap.capture);
  // Zero mean and unit RMS keep the squared VNLE terms from collapsing onto the
  // constant and linear columns (the raw capture rides on a large optical DC level).
  const Waveform m = rx_matched(sigproc::apply_lag(cap.capture, cap.lag, cap.tx.size()));
  const Eigen::ArrayXd centered = m.samples().array() - m.samples().mean();
  const double rms = std::sqrt(centered.square().mean());
  if (!(rms > 0.0)) throw DegenerateInput("capture_rrc: received waveform is constant");
  cap.matched = Waveform((centered / rms).matrix(), m.sample_rate());
  return cap;
}

BaselineResult evaluate_equalizer(EqualizerKind kind, const RrcCapture& cap, double train_fraction,
                                  SecondOrderSupport support) {
  const std::size_t n = cap.symbols.size();
  const std::size_t trim = eval::kTrimSymbols;
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw InvalidArgument("train fraction must lie in (0, 1)");
  if (n <= 4 * trim) throw InvalidArgument("baseline frame too short");
  const auto n_train = static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(n - 2 * trim)));
  const std::size_t test_first = trim + n_train;
  const std::size_t n_test = n - trim - test_first;

  BaselineResult r;
  r.kind = kind;
  r.n_train = n_train;
  r.model = fit_equalizer(kind, cap.matched, cap.symbols, trim, n_train, support);
  const Eigen::VectorXd y = apply_equalizer(r.model, cap.matched, test_first, n_test);
  const sigproc::SymbolFrame detected = ml_detect(y, r.model.stats, cap.symbols.symbol_rate);
  const sigproc::SymbolFrame truth(
      std::vector<int>(cap.symbols.indices.begin() + static_cast<long>(test_first),
                       cap.symbols.indices.begin() + static_cast<long>(test_first + n_test)),
      cap.symbols.symbol_rate);
  r.ser = eval::compute_ser(detected, truth);
  return r;
}

BaselineResult run_baseline(EqualizerKind kind, const channel::ChannelConfig& cfg, double symbol_rate,
                            double i_bias_ma, double p_rf_dbm, std::size_t n_train, std::size_t n_test,
                            std::uint64_t seed, SecondOrderSupport support) {
  const std::size_t n = n_train + n_test + 2 * eval::kTrimSymbols;
  const RrcCapture cap = capture_rrc(cfg, symbol_rate, i_bias_ma, p_rf_dbm, n, seed);
  return evaluate_equalizer(kind, cap, static_cast<double>(n_train) / static_cast<double>(n_train + n_test), support);
}

}  // namespace dmle2e::baselines
