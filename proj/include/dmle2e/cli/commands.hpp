#ifndef DMLE2E_CLI_COMMANDS_HPP
#define DMLE2E_CLI_COMMANDS_HPP

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "dmle2e/cli/config.hpp"

namespace dmle2e::cli {

/// Artifact locations under the output root. Bumping kLayoutVersion is required whenever
/// a name here changes.
namespace layout {
std::filesystem::path dataset_dir(const ExperimentConfig& c, double rs);
std::filesystem::path surrogate_model(const ExperimentConfig& c, double rs);
std::filesystem::path surrogate_history(const ExperimentConfig& c, double rs);
std::filesystem::path surrogate_report(const ExperimentConfig& c, double rs);
std::filesystem::path ae_params_json(const ExperimentConfig& c, double rs);
std::filesystem::path ae_params_bin(const ExperimentConfig& c, double rs);
std::filesystem::path ae_report(const ExperimentConfig& c, double rs);
std::filesystem::path baseline(const ExperimentConfig& c, double rs, baselines::EqualizerKind kind);
std::filesystem::path sweep_csv(const ExperimentConfig& c, double rs);
std::filesystem::path sweep_json(const ExperimentConfig& c, double rs);
std::filesystem::path eye(const ExperimentConfig& c, double rs, const std::string& system);
std::filesystem::path spectrum(const ExperimentConfig& c, double rs);
std::filesystem::path check_grads(const ExperimentConfig& c);
std::filesystem::path report(const ExperimentConfig& c);
}  // namespace layout

/// Pipeline stage numbers feeding ExperimentConfig::stage_seed.
enum Stage : std::uint64_t { kStageDataset = 1, kStageSurrogate, kStageAe, kStageBaseline, kStageSweep, kStageGrads };

struct CommandContext {
  ExperimentConfig cfg;
  std::vector<double> rates;  // subset of cfg.symbol_rates to process (all when empty)
  bool dry_run = false;       // validate and describe, write nothing
  int jobs = 1;
  std::ostream* out = nullptr;

  const std::vector<double>& active_rates() const { return rates.empty() ? cfg.symbol_rates : rates; }
  std::ostream& log() const;
};

void cmd_gen_dataset(const CommandContext& ctx);
/// Throws BoundViolation (after writing every artifact) when a held-out MSE exceeds the bound.
void cmd_train_surrogate(const CommandContext& ctx);
/// Primitive checks (< 1e-5) plus the full autoencoder loss (< 1e-4) at every rate, using the
/// trained surrogate when one exists and a random one otherwise. Throws BoundViolation on failure.
void cmd_check_grads(const CommandContext& ctx);
void cmd_train_ae(const CommandContext& ctx);
void cmd_baseline(const CommandContext& ctx, baselines::EqualizerKind kind);
void cmd_sweep(const CommandContext& ctx);
void cmd_report(const CommandContext& ctx);
/// Every stage in order, stopping at the first failure.
void cmd_run(const CommandContext& ctx);

inline constexpr double kPrimitiveTolerance = 1e-5;
inline constexpr double kAeLossTolerance = 1e-4;

}  // namespace dmle2e::cli

#endif  // DMLE2E_CLI_COMMANDS_HPP
