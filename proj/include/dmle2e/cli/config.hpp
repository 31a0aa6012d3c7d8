#ifndef DMLE2E_CLI_CONFIG_HPP
#define DMLE2E_CLI_CONFIG_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "dmle2e/baselines/equalizer.hpp"
#include "dmle2e/channel/testbed.hpp"
#include "dmle2e/e2e/train.hpp"
#include "dmle2e/eval/sweep.hpp"
#include "dmle2e/surrogate/dataset.hpp"
#include "dmle2e/surrogate/train.hpp"

namespace dmle2e::cli {

/// Malformed or inconsistent experiment configuration (exit code 2).
class ConfigError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

/// An upstream artifact is missing; the message names the command that produces it (exit code 2).
class MissingArtifact : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A configured acceptance bound was violated (exit code 4).
class BoundViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kLayoutVersion = 1;

struct BaselineSettings {
  double i_bias_ma = 75.0;
  double p_rf_dbm = 0.0;
  std::size_t n_train = 25000;
  std::size_t n_test = 100000;
  baselines::SecondOrderSupport support = baselines::SecondOrderSupport::kDiagonal;
};

struct ExperimentConfig {
  std::filesystem::path source;  // config file the settings came from
  std::string profile;
  std::uint64_t seed = 0;
  std::vector<double> symbol_rates;
  std::filesystem::path channel_path;  // resolved against the config file's directory
  channel::ChannelConfig channel;
  std::filesystem::path output_dir;    // DMLE2E_OUT replaces it when set

  surrogate::DatasetOptions dataset;   // symbol_rate and seed filled per rate
  surrogate::TrainOptions surrogate;
  double surrogate_mse_bound = 1e-3;
  e2e::AeTrainOptions ae;
  BaselineSettings baseline;
  eval::SweepOptions sweep;            // seed filled from `seed`
  int eye_traces = 500;

  /// Per-rate artifact directory, e.g. <out>/rs20g.
  std::filesystem::path rate_dir(double symbol_rate) const;
  /// Seed of one pipeline stage at one rate (independent streams, no other entropy).
  std::uint64_t stage_seed(double symbol_rate, std::uint64_t stage) const;
};

/// "rs20g" for 20e9 Bd; fractional rates keep their decimals ("rs12.5g").
std::string rate_tag(double symbol_rate);

/// Parses and validates a config. Unknown keys are rejected so typos cannot silently
/// fall back to defaults. `env_out` (the DMLE2E_OUT value, may be empty) overrides output_dir.
ExperimentConfig parse_experiment_config(const std::string& json_text, const std::filesystem::path& source,
                                         const std::string& env_out = "");
ExperimentConfig load_experiment_config(const std::filesystem::path& path, const std::string& env_out = "");

/// Canonical JSON rendering of the resolved configuration (used by --dry-run and report).
std::string experiment_config_to_json(const ExperimentConfig& cfg);

}  // namespace dmle2e::cli

#endif  // DMLE2E_CLI_CONFIG_HPP
