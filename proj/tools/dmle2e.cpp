// Command-line front end: one subcommand per pipeline stage, all driven by one JSON config.
//
// Exit codes: 0 success, 2 configuration/usage/missing-artifact error, 3 numeric failure,
// 4 acceptance-bound violation.

#include <cstdlib>
#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "dmle2e/cli/commands.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitBound = 4;

int fail(int code, const std::string& what) {
  std::cerr << "error: " << what << "\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace dmle2e;

  CLI::App app{"Learned transmitter/receiver for a directly modulated laser IM/DD link"};
  app.require_subcommand(1);
  std::string config_path;
  std::vector<double> rates;
  bool dry_run = false;
  int jobs = 0;
  app.add_option("-c,--config", config_path, "experiment config (JSON)")->required();
  app.add_option("--rate", rates, "restrict to these symbol rates (Bd), default: all configured");
  app.add_flag("--dry-run", dry_run, "validate the config and list the planned outputs; write nothing");
  app.add_option("-j,--jobs", jobs, "worker threads for the sweep (0 = hardware concurrency)")
      ->check(CLI::NonNegativeNumber);
  app.fallthrough();

  std::string kind = "ffe";
  app.add_subcommand("gen-dataset", "simulate the surrogate training dataset");
  app.add_subcommand("train-surrogate", "fit the LSTM channel surrogate");
  app.add_subcommand("check-grads", "finite-difference check of every primitive and the AE loss");
  app.add_subcommand("train-ae", "train the autoencoder through the frozen surrogate");
  app.add_subcommand("baseline", "RRC + FFE/VNLE baseline at the configured operating point")
      ->add_option("--kind", kind, "equalizer")
      ->check(CLI::IsMember({"ffe", "vnle"}));
  app.add_subcommand("sweep", "SER vs P_RF for AE, FFE and VNLE; eye and spectrum exports");
  app.add_subcommand("report", "collate artifacts into report.json");
  app.add_subcommand("run", "every stage in order");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    const char* env_out = std::getenv("DMLE2E_OUT");
    cli::CommandContext ctx;
    ctx.cfg = cli::load_experiment_config(config_path, env_out ? env_out : "");
    for (double rs : rates) {
      bool known = false;
      for (double c : ctx.cfg.symbol_rates) known = known || cli::rate_tag(c) == cli::rate_tag(rs);
      if (!known) throw cli::ConfigError("--rate " + cli::rate_tag(rs) + " is not in the config's symbol_rates");
    }
    ctx.rates = rates;
    ctx.dry_run = dry_run;
    ctx.jobs = jobs > 0 ? jobs : static_cast<int>(std::max(1U, std::thread::hardware_concurrency()));
    if (dry_run) std::cout << cli::experiment_config_to_json(ctx.cfg);

    const std::string cmd = app.get_subcommands().front()->get_name();
    if (cmd == "gen-dataset") cli::cmd_gen_dataset(ctx);
    else if (cmd == "train-surrogate") cli::cmd_train_surrogate(ctx);
    else if (cmd == "check-grads") cli::cmd_check_grads(ctx);
    else if (cmd == "train-ae") cli::cmd_train_ae(ctx);
    else if (cmd == "baseline") cli::cmd_baseline(ctx, baselines::parse_kind(kind));
    else if (cmd == "sweep") cli::cmd_sweep(ctx);
    else if (cmd == "report") cli::cmd_report(ctx);
    else cli::cmd_run(ctx);
  } catch (const cli::BoundViolation& e) {
    return fail(kExitBound, e.what());
  } catch (const cli::MissingArtifact& e) {
    return fail(kExitConfig, e.what());
  } catch (const InvalidArgument& e) {
    return fail(kExitConfig, e.what());
  } catch (const FormatError& e) {
    return fail(kExitConfig, e.what());
  } catch (const UsageError& e) {
    return fail(kExitConfig, e.what());
  } catch (const NumericError& e) {
    return fail(kExitNumeric, e.what());
  } catch (const DegenerateInput& e) {
    return fail(kExitNumeric, e.what());
  } catch (const OutOfRange& e) {
    return fail(kExitNumeric, e.what());
  } catch (const std::exception& e) {
    return fail(kExitNumeric, e.what());
  }
  return 0;
}
