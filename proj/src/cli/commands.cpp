#include "dmle2e/cli/commands.hpp"

#include <cstdio>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "dmle2e/baselines/pipeline.hpp"
#include "dmle2e/e2e/params_io.hpp"
#include "dmle2e/eval/export.hpp"
#include "dmle2e/grad/suite.hpp"
#include "dmle2e/sigproc/waveform_io.hpp"
#include "dmle2e/surrogate/model_io.hpp"

namespace dmle2e::cli {

using Json = nlohmann::json;
namespace fs = std::filesystem;

namespace layout {
fs::path dataset_dir(const ExperimentConfig& c, double rs) { return c.rate_dir(rs) / "dataset"; }
fs::path surrogate_model(const ExperimentConfig& c, double rs) { return c.rate_dir(rs) / "surrogate.bin"; }
fs::path surrogate_history(const ExperimentConfig& c, double rs) { return c.rate_dir(rs) / "surrogate_history.csv"; }
fs::path surrogate_report(const ExperimentConfig& c, double rs) { return c.rate_dir(rs) / "surrogate_report.json"; }
fs::path ae_params_json(const ExperimentConfig& c, double rs) { return c.rate_dir(rs) / "ae_params.json"; }
fs::path ae_params_bin(const ExperimentConfig& c, double rs) { return c.rate_dir(rs) / "ae_params.bin"; }
fs::path ae_report(const ExperimentConfig& c, double rs) { return c.rate_dir(rs) / "ae_report.json"; }
fs::path baseline(const ExperimentConfig& c, double rs, baselines::EqualizerKind kind) {
  return c.rate_dir(rs) / ("baseline_" + baselines::to_string(kind) + ".json");
}
fs::path sweep_csv(const ExperimentConfig& c, double rs) { return c.rate_dir(rs) / "sweep.csv"; }
fs::path sweep_json(const ExperimentConfig& c, double rs) { return c.rate_dir(rs) / "sweep.json"; }
fs::path eye(const ExperimentConfig& c, double rs, const std::string& system) {
  return c.rate_dir(rs) / ("eye_" + system + ".bin");
}
fs::path spectrum(const ExperimentConfig& c, double rs) { return c.rate_dir(rs) / "spectrum.json"; }
fs::path check_grads(const ExperimentConfig& c) { return c.output_dir / "check_grads.json"; }
fs::path report(const ExperimentConfig& c) { return c.output_dir / "report.json"; }
}  // namespace layout

std::ostream& CommandContext::log() const { return out ? *out : std::cout; }

namespace {

void require(const fs::path& path, const std::string& producer, const CommandContext& ctx) {
  if (!fs::exists(path)) {
    throw MissingArtifact("missing " + path.string() + "; produce it with `dmle2e " + producer + " --config " +
                          ctx.cfg.source.string() + "`");
  }
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

// Relative to the output root so report.json does not depend on where the tree lives.
std::string rel(const ExperimentConfig& c, const fs::path& p) { return p.lexically_relative(c.output_dir).generic_string(); }

bool dry(const CommandContext& ctx, const std::string& what) {
  if (ctx.dry_run) ctx.log() << "[dry-run] would " << what << "\n";
  return ctx.dry_run;
}

surrogate::SurrogateModel load_surrogate(const CommandContext& ctx, double rs) {
  const fs::path p = layout::surrogate_model(ctx.cfg, rs);
  require(p, "train-surrogate", ctx);
  return surrogate::read_model(p);
}

e2e::AeParams load_ae(const CommandContext& ctx, double rs) {
  const fs::path p = layout::ae_params_bin(ctx.cfg, rs);
  require(p, "train-ae", ctx);
  return e2e::read_params(p);
}

Json read_json(const fs::path& p) {
  try {
    return Json::parse(sigproc::read_file(p));
  } catch (const Json::parse_error& e) {
    throw FormatError("malformed JSON in " + p.string() + ": " + e.what());
  }
}

Json ser_json(const eval::SerResult& s) {
  return {{"ser", s.ser}, {"ci_low", s.ci_low}, {"ci_high", s.ci_high}, {"errors", s.errors}, {"n", s.n}};
}

Json row_json(const eval::SweepRow& r) {
  return {{"p_rf_dbm", r.p_rf_dbm}, {"i_bias_ma", r.i_bias_ma}, {"ser", r.ser},
          {"ci_low", r.ci_low},     {"ci_high", r.ci_high},     {"n", r.n_symbols}};
}

}  // namespace

void cmd_gen_dataset(const CommandContext& ctx) {
  for (double rs : ctx.active_rates()) {
    const fs::path dir = layout::dataset_dir(ctx.cfg, rs);
    if (dry(ctx, "write " + dir.string())) continue;
    surrogate::DatasetOptions opts = ctx.cfg.dataset;
    opts.symbol_rate = rs;
    opts.seed = ctx.cfg.stage_seed(rs, kStageDataset);
    const surrogate::SurrogateDataset ds = surrogate::gen_dataset(opts, ctx.cfg.channel);
    surrogate::save_dataset(dir, ds);
    ctx.log() << rate_tag(rs) << ": " << ds.entries.size() << " entries, SNR " << fmt("%.2f", ds.snr_db)
              << " dB (noise variance " << fmt("%.3e", ds.noise_variance) << " normalized), lag "
              << (ds.entries.empty() ? 0 : ds.entries.front().lag) << " samples -> " << dir.string() << "\n";
  }
}

void cmd_train_surrogate(const CommandContext& ctx) {
  std::vector<std::string> violations;
  for (double rs : ctx.active_rates()) {
    const fs::path dir = layout::dataset_dir(ctx.cfg, rs);
    if (dry(ctx, "train on " + dir.string() + " and write " + layout::surrogate_model(ctx.cfg, rs).string())) continue;
    require(dir / "meta.json", "gen-dataset", ctx);
    const surrogate::SurrogateDataset ds = surrogate::load_dataset(dir);
    surrogate::TrainOptions opts = ctx.cfg.surrogate;
    opts.seed = ctx.cfg.stage_seed(rs, kStageSurrogate);
    const surrogate::SurrogateFit fit = surrogate::train_surrogate(ds, opts);
    surrogate::write_model(layout::surrogate_model(ctx.cfg, rs), fit.model);

    std::string csv = "step,train_mse,test_mse\n";
    for (std::size_t k = 0; k < fit.history.step.size(); ++k) {
      csv += std::to_string(fit.history.step[k]) + "," + fmt("%.17g", fit.history.train_mse[k]) + "," +
             fmt("%.17g", fit.history.test_mse[k]) + "\n";
    }
    sigproc::write_file(layout::surrogate_history(ctx.cfg, rs), csv);

    const bool ok = fit.best_test_mse <= ctx.cfg.surrogate_mse_bound;
    const Json rep = {{"symbol_rate", rs},
                      {"best_test_mse", fit.best_test_mse},
                      {"test_variance", fit.test_variance},
                      {"mse_bound", ctx.cfg.surrogate_mse_bound},
                      {"within_bound", ok},
                      {"snr_db", fit.model.snr_db},
                      {"noise_variance", fit.model.noise_variance},
                      {"hidden_size", fit.model.hidden_size},
                      {"steps", opts.steps},
                      {"seed", opts.seed}};
    sigproc::write_file(layout::surrogate_report(ctx.cfg, rs), rep.dump(2) + "\n");
    ctx.log() << rate_tag(rs) << ": held-out MSE " << fmt("%.3e", fit.best_test_mse) << " (bound "
              << fmt("%.1e", ctx.cfg.surrogate_mse_bound) << ", mean predictor " << fmt("%.3e", fit.test_variance)
              << ")\n";
    if (!ok) violations.push_back(rate_tag(rs) + " MSE " + fmt("%.3e", fit.best_test_mse));
  }
  if (!violations.empty()) {
    std::string msg = "surrogate MSE above bound:";
    for (const auto& v : violations) msg += " " + v;
    throw BoundViolation(msg);
  }
}

void cmd_check_grads(const CommandContext& ctx) {
  if (dry(ctx, "run the gradient checks and write " + layout::check_grads(ctx.cfg).string())) return;
  bool ok = true;
  Json prim = Json::object();
  for (const grad::NamedCheck& c : grad::check_primitives(ctx.cfg.stage_seed(0.0, kStageGrads))) {
    const bool pass = c.result.max_rel_error < kPrimitiveTolerance;
    ok = ok && pass;
    prim[c.name] = {{"max_rel_error", c.result.max_rel_error}, {"pass", pass}};
    ctx.log() << (pass ? "ok   " : "FAIL ") << c.name << " " << fmt("%.3e", c.result.max_rel_error) << "\n";
  }
  Json loss = Json::object();
  for (double rs : ctx.active_rates()) {
    const fs::path mp = layout::surrogate_model(ctx.cfg, rs);
    const bool trained = fs::exists(mp);
    surrogate::SurrogateModel model;
    if (trained) {
      model = surrogate::read_model(mp);
    } else {
      model = surrogate::SurrogateModel::init(16, ctx.cfg.stage_seed(rs, kStageGrads));
      model.symbol_rate = rs;
      model.delay_samples = 4;
      model.noise_variance = 1e-3;
    }
    const grad::GradientCheck r =
        e2e::check_ae_gradient(model, ctx.cfg.channel.chain.awg_bw, ctx.cfg.stage_seed(rs, kStageGrads));
    const bool pass = r.max_rel_error < kAeLossTolerance;
    ok = ok && pass;
    loss[rate_tag(rs)] = {{"max_rel_error", r.max_rel_error},
                          {"pass", pass},
                          {"surrogate", trained ? "trained" : "random"}};
    ctx.log() << (pass ? "ok   " : "FAIL ") << "ae_loss[" << rate_tag(rs) << ", " << (trained ? "trained" : "random")
              << " surrogate] " << fmt("%.3e", r.max_rel_error) << "\n";
  }
  const Json rep = {{"primitive_tolerance", kPrimitiveTolerance},
                    {"ae_loss_tolerance", kAeLossTolerance},
                    {"primitives", prim},
                    {"ae_loss", loss},
                    {"pass", ok}};
  sigproc::write_file(layout::check_grads(ctx.cfg), rep.dump(2) + "\n");
  if (!ok) throw BoundViolation("gradient check failed");
}

void cmd_train_ae(const CommandContext& ctx) {
  for (double rs : ctx.active_rates()) {
    if (dry(ctx, "train the autoencoder and write " + layout::ae_params_json(ctx.cfg, rs).string())) continue;
    const surrogate::SurrogateModel model = load_surrogate(ctx, rs);
    e2e::AeTrainOptions opts = ctx.cfg.ae;
    opts.seed = ctx.cfg.stage_seed(rs, kStageAe);
    const e2e::AeFit fit = e2e::train_ae(model, opts, ctx.cfg.channel.chain.awg_bw);
    sigproc::write_file(layout::ae_params_json(ctx.cfg, rs), e2e::params_to_json(fit.params) + "\n");
    e2e::write_params(layout::ae_params_bin(ctx.cfg, rs), fit.params);
    sigproc::write_file(layout::ae_report(ctx.cfg, rs), e2e::report_to_json(fit.report) + "\n");
    const double final_ser = fit.report.surrogate_ser.empty() ? 0.0 : fit.report.surrogate_ser.back();
    ctx.log() << rate_tag(rs) << ": learned I_bias " << fmt("%.2f", fit.params.i_bias_ma()) << " mA, P_RF "
              << fmt("%.2f", fit.params.p_rf_dbm()) << " dBm (final batch SER " << fmt("%.3e", final_ser) << ", "
              << fmt("%.0f", fit.report.wall_seconds) << " s)\n";
  }
}

void cmd_baseline(const CommandContext& ctx, baselines::EqualizerKind kind) {
  const BaselineSettings& b = ctx.cfg.baseline;
  for (double rs : ctx.active_rates()) {
    const fs::path path = layout::baseline(ctx.cfg, rs, kind);
    if (dry(ctx, "fit " + baselines::to_string(kind) + " and write " + path.string())) continue;
    const baselines::BaselineResult r =
        baselines::run_baseline(kind, ctx.cfg.channel, rs, b.i_bias_ma, b.p_rf_dbm, b.n_train, b.n_test,
                                ctx.cfg.stage_seed(rs, kStageBaseline), b.support);
    const Json j = {{"kind", baselines::to_string(kind)},
                    {"symbol_rate", rs},
                    {"i_bias_ma", b.i_bias_ma},
                    {"p_rf_dbm", b.p_rf_dbm},
                    {"n_train", r.n_train},
                    {"result", ser_json(r.ser)},
                    {"model", Json::parse(baselines::equalizer_to_json(r.model))}};
    sigproc::write_file(path, j.dump(2) + "\n");
    ctx.log() << rate_tag(rs) << ": " << baselines::to_string(kind) << " SER " << fmt("%.3e", r.ser.ser) << " ["
              << fmt("%.3e", r.ser.ci_low) << ", " << fmt("%.3e", r.ser.ci_high) << "] at "
              << fmt("%.1f", b.i_bias_ma) << " mA / " << fmt("%.1f", b.p_rf_dbm) << " dBm\n";
  }
}

void cmd_sweep(const CommandContext& ctx) {
  for (double rs : ctx.active_rates()) {
    if (dry(ctx, "sweep P_RF and write " + layout::sweep_csv(ctx.cfg, rs).string() + " plus eye/spectrum files")) {
      continue;
    }
    require(layout::surrogate_model(ctx.cfg, rs), "train-surrogate", ctx);
    const e2e::AeParams ae = load_ae(ctx, rs);
    if (ae.symbol_rate != rs) throw FormatError(layout::ae_params_bin(ctx.cfg, rs).string() + " was trained at another rate");
    eval::SweepOptions opts = ctx.cfg.sweep;
    opts.seed = ctx.cfg.stage_seed(rs, kStageSweep);
    opts.jobs = ctx.jobs;
    eval::SweepArtifacts art;
    const eval::SweepResult res = eval::sweep_prf(ctx.cfg.channel, ae, opts, &art);
    sigproc::write_file(layout::sweep_csv(ctx.cfg, rs), eval::sweep_to_csv(res));
    sigproc::write_file(layout::sweep_json(ctx.cfg, rs), eval::sweep_to_json(res));

    const Json ae_hdr = {{"system", "ae"}, {"symbol_rate", rs}, {"p_rf_dbm", art.ae->tx.p_rf_dbm},
                         {"i_bias_ma", art.ae->tx.i_bias_ma}};
    const Json rrc_hdr = {{"system", "rrc"}, {"symbol_rate", rs}, {"p_rf_dbm", art.rrc->p_rf_dbm},
                          {"i_bias_ma", art.rrc->i_bias_ma}};
    sigproc::write_file(layout::eye(ctx.cfg, rs, "ae"),
                        eval::encode_eye(eval::capture_eye(art.ae->capture, art.ae->lag, ctx.cfg.eye_traces),
                                         ae_hdr.dump()));
    sigproc::write_file(layout::eye(ctx.cfg, rs, "rrc"),
                        eval::encode_eye(eval::capture_eye(art.rrc->capture, art.rrc->lag, ctx.cfg.eye_traces),
                                         rrc_hdr.dump()));
    const eval::SpectrumReport spec = eval::spectrum_report(art.ae->tx.waveform, art.rrc->tx);
    sigproc::write_file(layout::spectrum(ctx.cfg, rs), eval::spectrum_to_json(spec, rs) + "\n");

    ctx.log() << rate_tag(rs) << ":";
    for (const char* sys : {"ae", "vnle", "ffe"}) {
      const eval::SweepRow& r = res.best(sys);
      ctx.log() << " " << sys << " " << fmt("%.3e", r.ser) << " @" << fmt("%.0f", r.p_rf_dbm) << "dBm";
    }
    ctx.log() << "; -10 dB BW ae " << fmt("%.2f", spec.bw_ae / 1e9) << " GHz, rrc " << fmt("%.2f", spec.bw_rrc / 1e9)
              << " GHz (compression " << fmt("%.1f", 100.0 * spec.compression) << "%)\n";
  }
}

void cmd_report(const CommandContext& ctx) {
  const ExperimentConfig& c = ctx.cfg;
  if (dry(ctx, "collate artifacts into " + layout::report(c).string())) return;
  Json rates = Json::object();
  for (double rs : ctx.active_rates()) {
    const fs::path csv = layout::sweep_csv(c, rs), spec_path = layout::spectrum(c, rs);
    require(csv, "sweep", ctx);
    require(spec_path, "sweep", ctx);
    require(layout::eye(c, rs, "ae"), "sweep", ctx);
    require(layout::eye(c, rs, "rrc"), "sweep", ctx);
    const eval::SweepResult sweep = eval::sweep_from_csv(sigproc::read_file(csv));
    const Json spec = read_json(spec_path);

    Json entry = {{"symbol_rate", rs}};
    Json files = {{"sweep_csv", rel(c, csv)},
                  {"sweep_json", rel(c, layout::sweep_json(c, rs))},
                  {"eye_ae", rel(c, layout::eye(c, rs, "ae"))},
                  {"eye_rrc", rel(c, layout::eye(c, rs, "rrc"))},
                  {"spectrum", rel(c, spec_path)}};
    Json best = Json::object();
    for (const char* sys : {"ae", "vnle", "ffe"}) best[sys] = row_json(sweep.best(sys));
    const eval::SweepRow &ae = sweep.best("ae"), &vnle = sweep.best("vnle"), &ffe = sweep.best("ffe");
    entry["best"] = best;
    entry["ordering"] = {{"ae_le_vnle", ae.ser <= vnle.ser},
                         {"vnle_le_ffe", vnle.ser <= ffe.ser},
                         {"ae_ffe_ci_separated", ae.ci_high < ffe.ci_low}};
    entry["spectrum"] = {{"bw_ae_hz", spec.at("bw_ae_hz")},
                         {"bw_rrc_hz", spec.at("bw_rrc_hz")},
                         {"bw_ae_capped", spec.at("bw_ae_capped")},
                         {"bw_rrc_capped", spec.at("bw_rrc_capped")},
                         {"compression_pct", spec.at("compression_pct")},
                         {"level_db", spec.at("level_db")}};

    if (fs::exists(layout::surrogate_report(c, rs))) {
      const Json s = read_json(layout::surrogate_report(c, rs));
      entry["surrogate"] = {{"best_test_mse", s.at("best_test_mse")},
                            {"mse_bound", s.at("mse_bound")},
                            {"snr_db", s.at("snr_db")}};
      files["surrogate_history"] = rel(c, layout::surrogate_history(c, rs));
    }
    if (fs::exists(layout::ae_params_json(c, rs))) {
      const Json p = read_json(layout::ae_params_json(c, rs));
      entry["ae"] = {{"i_bias_ma", p.at("i_bias_ma")}, {"p_rf_dbm", p.at("p_rf_dbm")},
                     {"gcs_levels", p.at("gcs_levels")}};
      files["ae_params"] = rel(c, layout::ae_params_json(c, rs));
    }
    if (fs::exists(layout::ae_report(c, rs))) {
      const Json r = read_json(layout::ae_report(c, rs));  // wall time deliberately left out
      entry["ae_training"] = {{"steps", r.at("steps")},
                              {"final_loss", r.at("loss").empty() ? Json() : r.at("loss").back()},
                              {"noise_variance", r.at("noise_variance")}};
      files["ae_report"] = rel(c, layout::ae_report(c, rs));
    }
    for (auto kind : {baselines::EqualizerKind::kFfe, baselines::EqualizerKind::kVnle}) {
      const fs::path p = layout::baseline(c, rs, kind);
      if (!fs::exists(p)) continue;
      const Json b = read_json(p);
      entry["baseline_" + baselines::to_string(kind)] = {
          {"i_bias_ma", b.at("i_bias_ma")}, {"p_rf_dbm", b.at("p_rf_dbm")}, {"result", b.at("result")}};
      files["baseline_" + baselines::to_string(kind)] = rel(c, p);
    }
    entry["files"] = files;
    rates[rate_tag(rs)] = entry;
  }
  Json rep = {{"layout_version", kLayoutVersion},
              {"profile", c.profile},
              {"seed", c.seed},
              {"config", Json::parse(experiment_config_to_json(c))},
              {"rates", rates}};
  if (fs::exists(layout::check_grads(c))) {
    rep["check_grads"] = {{"file", rel(c, layout::check_grads(c))}, {"pass", read_json(layout::check_grads(c)).at("pass")}};
  }
  rep["config"].erase("output_dir");  // the report must not depend on where the tree lives
  sigproc::write_file(layout::report(c), rep.dump(2) + "\n");
  ctx.log() << "report -> " << layout::report(c).string() << "\n";
}

void cmd_run(const CommandContext& ctx) {
  cmd_gen_dataset(ctx);
  cmd_train_surrogate(ctx);
  cmd_check_grads(ctx);
  cmd_train_ae(ctx);
  cmd_baseline(ctx, baselines::EqualizerKind::kFfe);
  cmd_baseline(ctx, baselines::EqualizerKind::kVnle);
  cmd_sweep(ctx);
  cmd_report(ctx);
}

}  // namespace dmle2e::cli
