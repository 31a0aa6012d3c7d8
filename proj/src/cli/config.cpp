#include "dmle2e/cli/config.hpp"

#include <cmath>
#include <cstdio>
#include <random>
#include <set>

#include <json.hpp>

#include "dmle2e/sigproc/waveform_io.hpp"

namespace dmle2e::cli {

using Json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

// A JSON object whose keys must all be consumed; leftovers are reported as typos.
class Section {
 public:
  Section(const Json& obj, std::string name) : obj_(obj), name_(std::move(name)) {
    if (!obj_.is_object()) throw ConfigError("config: '" + name_ + "' must be an object");
  }

  bool has(const std::string& key) const { return obj_.contains(key); }

  template <typename T>
  T get(const std::string& key, T fallback) {
    if (!obj_.contains(key)) return fallback;
    return required<T>(key);
  }

  template <typename T>
  T required(const std::string& key) {
    if (!obj_.contains(key)) throw ConfigError("config: missing " + qualified(key));
    seen_.insert(key);
    try {
      return obj_.at(key).get<T>();
    } catch (const Json::exception&) {
      throw ConfigError("config: " + qualified(key) + " has the wrong type");
    }
  }

  Section child(const std::string& key) {
    seen_.insert(key);
    static const Json empty = Json::object();
    return Section(obj_.contains(key) ? obj_.at(key) : empty, qualified(key));
  }

  void finish() const {
    for (const auto& item : obj_.items()) {
      if (!seen_.count(item.key())) throw ConfigError("config: unknown key " + qualified(item.key()));
    }
  }

 private:
  std::string qualified(const std::string& key) const { return name_.empty() ? key : name_ + "." + key; }

  const Json& obj_;
  std::string name_;
  std::set<std::string> seen_;
};

void check(bool ok, const std::string& what) {
  if (!ok) throw ConfigError("config: " + what);
}

baselines::SecondOrderSupport parse_support(const std::string& s) {
  if (s == "diagonal") return baselines::SecondOrderSupport::kDiagonal;
  if (s == "cross") return baselines::SecondOrderSupport::kCrossTerms;
  throw ConfigError("config: support must be 'diagonal' or 'cross', got '" + s + "'");
}

std::string support_name(baselines::SecondOrderSupport s) {
  return s == baselines::SecondOrderSupport::kDiagonal ? "diagonal" : "cross";
}

}  // namespace

std::string rate_tag(double symbol_rate) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "rs%gg", symbol_rate / 1e9);
  return buf;
}

fs::path ExperimentConfig::rate_dir(double symbol_rate) const { return output_dir / rate_tag(symbol_rate); }

std::uint64_t ExperimentConfig::stage_seed(double symbol_rate, std::uint64_t stage) const {
  const auto khz = static_cast<std::uint64_t>(std::llround(symbol_rate / 1e3));
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(khz), static_cast<std::uint32_t>(khz >> 32),
                    static_cast<std::uint32_t>(stage)};
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

ExperimentConfig parse_experiment_config(const std::string& json_text, const fs::path& source,
                                         const std::string& env_out) {
  Json j;
  try {
    j = Json::parse(json_text);
  } catch (const Json::parse_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  Section root(j, "");
  const fs::path base = source.has_parent_path() ? source.parent_path() : fs::path(".");
  auto resolve = [&](const std::string& p) { return (fs::path(p).is_absolute() ? fs::path(p) : base / p).lexically_normal(); };

  ExperimentConfig cfg;
  cfg.source = source;
  if (!root.has("seed")) throw ConfigError("config: 'seed' is mandatory (no implicit entropy)");
  cfg.seed = root.required<std::uint64_t>("seed");
  cfg.profile = root.get<std::string>("profile", "custom");
  cfg.symbol_rates = root.get<std::vector<double>>("symbol_rates", {20e9, 30e9});
  check(!cfg.symbol_rates.empty(), "symbol_rates must not be empty");
  std::set<std::string> tags;
  for (double rs : cfg.symbol_rates) {
    check(std::isfinite(rs) && rs >= 1e9 && rs <= 100e9, "symbol rates must lie in [1, 100] GBd");
    check(tags.insert(rate_tag(rs)).second, "duplicate symbol rate " + rate_tag(rs));
  }

  cfg.channel_path = resolve(root.required<std::string>("channel"));
  try {
    cfg.channel = channel::load_channel_config(cfg.channel_path);
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  const std::string out = env_out.empty() ? root.required<std::string>("output_dir") : root.get<std::string>("output_dir", "");
  if (env_out.empty()) check(!out.empty(), "output_dir must not be empty");
  cfg.output_dir = env_out.empty() ? resolve(out) : fs::path(env_out);

  Section ds = root.child("dataset");
  cfg.dataset.n_sequences = ds.get("n_sequences", cfg.dataset.n_sequences);
  cfg.dataset.symbols_per_seq = ds.get("symbols_per_seq", cfg.dataset.symbols_per_seq);
  cfg.dataset.n_copies = ds.get("n_copies", cfg.dataset.n_copies);
  ds.finish();
  check(cfg.dataset.n_sequences >= 2, "dataset.n_sequences must be >= 2");
  check(cfg.dataset.symbols_per_seq >= 256, "dataset.symbols_per_seq must be >= 256");
  check(cfg.dataset.n_copies >= 2, "dataset.n_copies must be >= 2");

  Section sur = root.child("surrogate");
  cfg.surrogate.hidden_size = sur.get("hidden_size", cfg.surrogate.hidden_size);
  cfg.surrogate.lr = sur.get("lr", cfg.surrogate.lr);
  cfg.surrogate.lr_final = sur.get("lr_final", cfg.surrogate.lr_final);
  cfg.surrogate.batch = sur.get("batch", cfg.surrogate.batch);
  cfg.surrogate.window = sur.get("window", cfg.surrogate.window);
  cfg.surrogate.steps = sur.get("steps", cfg.surrogate.steps);
  cfg.surrogate.split = sur.get("split", cfg.surrogate.split);
  cfg.surrogate_mse_bound = sur.get("mse_bound", cfg.surrogate_mse_bound);
  sur.finish();
  check(cfg.surrogate.hidden_size >= 1 && cfg.surrogate.batch >= 1 && cfg.surrogate.steps >= 1,
        "surrogate hidden_size, batch and steps must be positive");
  check(cfg.surrogate.lr > 0.0 && cfg.surrogate.lr_final > 0.0, "surrogate learning rates must be positive");
  check(cfg.surrogate.window > cfg.surrogate.burn_in + cfg.surrogate.delay, "surrogate.window is too short");
  check(cfg.surrogate.split > 0.0 && cfg.surrogate.split < 1.0, "surrogate.split must lie in (0, 1)");
  check(cfg.surrogate_mse_bound > 0.0, "surrogate.mse_bound must be positive");
  check(cfg.surrogate.window <= 2 * cfg.dataset.symbols_per_seq, "surrogate.window exceeds the sequence length");

  Section ae = root.child("ae");
  cfg.ae.lr = ae.get("lr", cfg.ae.lr);
  cfg.ae.lr_final = ae.get("lr_final", cfg.ae.lr_final);
  cfg.ae.noise_band = ae.get("noise_band", cfg.ae.noise_band);
  cfg.ae.steps = ae.get("steps", cfg.ae.steps);
  cfg.ae.batch = ae.get("batch", cfg.ae.batch);
  cfg.ae.symbols_per_seq = ae.get("symbols_per_seq", cfg.ae.symbols_per_seq);
  cfg.ae.rx_taps = ae.get("rx_taps", cfg.ae.rx_taps);
  ae.finish();
  check(cfg.ae.lr > 0.0 && cfg.ae.steps >= 1 && cfg.ae.batch >= 1, "ae lr, steps and batch must be positive");
  check(cfg.ae.symbols_per_seq > 2 * e2e::kTrainTrimSymbols + 8, "ae.symbols_per_seq is too short");
  check(cfg.ae.rx_taps >= 1, "ae.rx_taps must be positive");
  check(cfg.ae.lr_final > 0.0 && cfg.ae.lr_final <= cfg.ae.lr, "ae.lr_final must lie in (0, ae.lr]");
  check(cfg.ae.noise_band > 0.0 && cfg.ae.noise_band <= 1.0, "ae.noise_band must lie in (0, 1]");

  Section bl = root.child("baseline");
  cfg.baseline.i_bias_ma = bl.get("i_bias_ma", cfg.baseline.i_bias_ma);
  cfg.baseline.p_rf_dbm = bl.get("p_rf_dbm", cfg.baseline.p_rf_dbm);
  cfg.baseline.n_train = bl.get("n_train", cfg.baseline.n_train);
  cfg.baseline.n_test = bl.get("n_test", cfg.baseline.n_test);
  cfg.baseline.support = parse_support(bl.get<std::string>("support", "diagonal"));
  bl.finish();
  check(cfg.baseline.i_bias_ma >= 50.0 && cfg.baseline.i_bias_ma <= 100.0, "baseline.i_bias_ma must lie in [50, 100]");
  check(cfg.baseline.p_rf_dbm >= -4.0 && cfg.baseline.p_rf_dbm <= 2.0, "baseline.p_rf_dbm must lie in [-4, 2]");
  check(cfg.baseline.n_train >= 1000 && cfg.baseline.n_test >= 1000, "baseline n_train and n_test must be >= 1000");

  Section sw = root.child("sweep");
  cfg.sweep.grid = sw.get("grid", cfg.sweep.grid);
  cfg.sweep.n_symbols = sw.get("n_symbols", cfg.sweep.n_symbols);
  cfg.sweep.support = parse_support(sw.get<std::string>("support", "diagonal"));
  sw.finish();
  check(!cfg.sweep.grid.empty(), "sweep.grid must not be empty");
  for (double p : cfg.sweep.grid) check(p >= -4.0 && p <= 2.0, "sweep.grid points must lie in [-4, 2] dBm");
  check(cfg.sweep.n_symbols >= 1000, "sweep.n_symbols must be >= 1000");

  Section eye = root.child("eye");
  cfg.eye_traces = eye.get("n_traces", cfg.eye_traces);
  eye.finish();
  check(cfg.eye_traces >= 1, "eye.n_traces must be positive");

  root.finish();
  return cfg;
}

ExperimentConfig load_experiment_config(const fs::path& path, const std::string& env_out) {
  std::string text;
  try {
    text = sigproc::read_file(path);
  } catch (const FormatError&) {
    throw ConfigError("config file not found: " + path.string());
  }
  return parse_experiment_config(text, path, env_out);
}

std::string experiment_config_to_json(const ExperimentConfig& cfg) {
  const Json j = {
      {"profile", cfg.profile},
      {"seed", cfg.seed},
      {"symbol_rates", cfg.symbol_rates},
      {"channel", cfg.channel_path.generic_string()},
      {"output_dir", cfg.output_dir.generic_string()},
      {"dataset",
       {{"n_sequences", cfg.dataset.n_sequences},
        {"symbols_per_seq", cfg.dataset.symbols_per_seq},
        {"n_copies", cfg.dataset.n_copies}}},
      {"surrogate",
       {{"hidden_size", cfg.surrogate.hidden_size},
        {"lr", cfg.surrogate.lr},
        {"lr_final", cfg.surrogate.lr_final},
        {"batch", cfg.surrogate.batch},
        {"window", cfg.surrogate.window},
        {"steps", cfg.surrogate.steps},
        {"split", cfg.surrogate.split},
        {"mse_bound", cfg.surrogate_mse_bound}}},
      {"ae",
       {{"lr", cfg.ae.lr},
        {"lr_final", cfg.ae.lr_final},
        {"noise_band", cfg.ae.noise_band},
        {"steps", cfg.ae.steps},
        {"batch", cfg.ae.batch},
        {"symbols_per_seq", cfg.ae.symbols_per_seq},
        {"rx_taps", cfg.ae.rx_taps}}},
      {"baseline",
       {{"i_bias_ma", cfg.baseline.i_bias_ma},
        {"p_rf_dbm", cfg.baseline.p_rf_dbm},
        {"n_train", cfg.baseline.n_train},
        {"n_test", cfg.baseline.n_test},
        {"support", support_name(cfg.baseline.support)}}},
      {"sweep",
       {{"grid", cfg.sweep.grid},
        {"n_symbols", cfg.sweep.n_symbols},
        {"support", support_name(cfg.sweep.support)}}},
      {"eye", {{"n_traces", cfg.eye_traces}}},
  };
  return j.dump(2) + "\n";
}

}  // namespace dmle2e::cli
