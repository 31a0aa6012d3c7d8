// Acceptance run: executes the default experiment end to end through the command layer and
// prints one PASS/FAIL line per acceptance criterion. Exit status is nonzero if any fails.
//
// Usage: acceptance [output_dir]    (DMLE2E_ACCEPT_REUSE=1 keeps existing artifacts)

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "dmle2e/baselines/equalizer.hpp"
#include "dmle2e/channel/laser.hpp"
#include "dmle2e/cli/commands.hpp"
#include "dmle2e/sigproc/analysis.hpp"
#include "dmle2e/sigproc/filters.hpp"
#include "dmle2e/sigproc/waveform_io.hpp"

using namespace dmle2e;
namespace fs = std::filesystem;
using Json = nlohmann::json;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Json read_json(const fs::path& p) { return Json::parse(sigproc::read_file(p)); }

// Runs a stage, turning any exception into a failure message.
std::string attempt(const std::function<void()>& stage) {
  try {
    stage();
    return "";
  } catch (const std::exception& e) {
    return e.what();
  }
}

Verdict laser_physics(const channel::LaserParams& p) {
  using namespace channel;
  const double ith = analytic_threshold_ma(p);
  // Numeric threshold: x-intercept of the L-I line just above threshold.
  const double i1 = 1.3 * ith, i2 = 1.6 * ith;
  const double p1 = steady_state(i1, p).power_mw, p2 = steady_state(i2, p).power_mw;
  const double knee = i1 - p1 * (i2 - i1) / (p2 - p1);
  const double th_err = std::abs(knee - ith) / ith;

  double worst_slope = 0.0;
  for (double i : {30.0, 50.0, 75.0, 100.0}) {
    const double slope = steady_state(i + 0.5, p).power_mw - steady_state(i - 0.5, p).power_mw;  // W/A
    worst_slope = std::max(worst_slope, std::abs(slope - 0.15) / 0.15);
  }

  // Relaxation oscillation: zero crossings of a small-step transient vs the linearization.
  double worst_ro = 0.0;
  bool ro_ok = true;
  for (double bias : {50.0, 75.0}) {
    const double rate = 2e12;
    Eigen::VectorXd d = Eigen::VectorXd::Constant(4000, bias);
    d.tail(3990).setConstant(bias + 0.2);
    const sigproc::Waveform out = dml_simulate(sigproc::Waveform(d, rate), p, 0.25e-12);
    const double final_p = steady_state(bias + 0.2, p).power_mw;
    std::vector<double> crossings;
    for (Eigen::Index i = 11; i < out.size(); ++i) {
      const double a = out[i - 1] - final_p, b = out[i] - final_p;
      if ((a < 0) != (b < 0)) crossings.push_back((static_cast<double>(i) - 1 + a / (a - b)) / rate);
    }
    if (crossings.size() < 5) {
      ro_ok = false;
      continue;
    }
    const double f_transient = 1.0 / (2.0 * (crossings[4] - crossings[1]) / 3.0);
    const double f_lin = small_signal(bias, p).damped_freq_hz;
    worst_ro = std::max(worst_ro, std::abs(f_transient - f_lin) / f_lin);
  }
  Verdict v;
  v.pass = th_err < 0.01 && worst_slope < 0.05 && ro_ok && worst_ro < 0.05;
  v.detail = "threshold error " + fmt("%.2f", 100 * th_err) + "% (<1%), relaxation-frequency error " +
             (ro_ok ? fmt("%.2f", 100 * worst_ro) + "%" : std::string("n/a")) + " (<5%), slope error " +
             fmt("%.2f", 100 * worst_slope) + "% (<5%)";
  return v;
}

Verdict oracle_equivalences() {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g;
  // Least squares vs the ridge normal equations solved by full-pivot LU.
  double ls_err = 0.0;
  for (int trial = 0; trial < 5; ++trial) {
    Eigen::MatrixXd a(2000, 31);
    Eigen::VectorXd b(2000);
    for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = g(rng);
    for (Eigen::Index i = 0; i < b.size(); ++i) b[i] = g(rng);
    const Eigen::VectorXd x = baselines::ridge_solve(a, b);
    const double lambda = 1e-6 * a.squaredNorm() / 31.0;
    const Eigen::MatrixXd normal = a.transpose() * a + lambda * Eigen::MatrixXd::Identity(31, 31);
    const Eigen::VectorXd oracle = Eigen::FullPivLU<Eigen::MatrixXd>(normal).solve(a.transpose() * b);
    ls_err = std::max(ls_err, (x - oracle).cwiseAbs().maxCoeff() / oracle.cwiseAbs().maxCoeff());
  }

  // SNR estimator on synthetic 25-copy sets.
  double snr_err = 0.0;
  for (double snr : {10.0, 15.0, 20.0, 25.0, 30.0}) {
    Eigen::VectorXd s(4000);
    for (auto& v : s) v = g(rng);
    s = (s.array() - s.mean()).matrix();
    s /= std::sqrt(s.squaredNorm() / static_cast<double>(s.size()));
    const double sigma = std::pow(10.0, -snr / 20.0);
    std::vector<sigproc::Waveform> copies;
    for (int c = 0; c < 25; ++c) {
      Eigen::VectorXd noisy = s;
      for (auto& v : noisy) v += sigma * g(rng);
      copies.emplace_back(std::move(noisy), 1.0);
    }
    snr_err = std::max(snr_err, std::abs(sigproc::estimate_snr(copies).snr_db - snr));
  }

  // RRC matched pair (17 taps, rolloff 0.1, 2 SpS): residual ISI at symbol spacing.
  const sigproc::FirFilter f = sigproc::design_rrc(17, 0.1, 2);
  Eigen::VectorXd full = Eigen::VectorXd::Zero(33);
  for (int i = 0; i < 17; ++i)
    for (int j = 0; j < 17; ++j) full[i + j] += f.taps[i] * f.taps[j];
  double isi = 0.0;
  for (int k = 0; k < 33; k += 2)
    if (k != 16) isi = std::max(isi, std::abs(full[k]) / full[16]);

  Verdict v;
  v.pass = ls_err < 1e-8 && snr_err <= 0.5 && isi <= 5e-2;
  v.detail = "least squares vs normal equations " + fmt("%.1e", ls_err) + " (<1e-8), SNR estimate error " +
             fmt("%.2f", snr_err) + " dB (<=0.5 dB), matched-pair ISI " + fmt("%.3f", isi) + " (<=0.05)";
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path out = argc > 1 ? fs::path(argv[1]) : fs::path(DMLE2E_ACCEPT_OUT);
  const bool reuse = std::getenv("DMLE2E_ACCEPT_REUSE") != nullptr;
  if (!reuse) fs::remove_all(out);

  cli::CommandContext ctx;
  ctx.cfg = cli::load_experiment_config(fs::path(DMLE2E_CONFIG_DIR) / "experiment.default.json", out.string());
  ctx.jobs = static_cast<int>(std::max(2U, std::thread::hardware_concurrency()));  // rerun uses 1
  ctx.out = &std::cerr;  // progress on stderr, verdicts on stdout
  const cli::ExperimentConfig& cfg = ctx.cfg;
  const std::vector<double>& rates = cfg.symbol_rates;
  const double low_rate = *std::min_element(rates.begin(), rates.end());
  const double high_rate = *std::max_element(rates.begin(), rates.end());
  std::vector<Verdict> verdicts(9);

  verdicts[2] = laser_physics(cfg.channel.laser);
  verdicts[7] = oracle_equivalences();

  // Surrogate per rate, timed separately.
  std::string sur_err;
  std::vector<double> sur_seconds;
  for (double rs : rates) {
    cli::CommandContext one = ctx;
    one.rates = {rs};
    const auto t0 = std::chrono::steady_clock::now();
    if (!(reuse && fs::exists(cli::layout::dataset_dir(cfg, rs) / "meta.json"))) {
      const std::string e = attempt([&] { cli::cmd_gen_dataset(one); });
      if (!e.empty()) sur_err += e + "; ";
    }
    if (!(reuse && fs::exists(cli::layout::surrogate_report(cfg, rs)))) {
      const std::string e = attempt([&] { cli::cmd_train_surrogate(one); });
      if (!e.empty()) sur_err += e + "; ";
      sur_seconds.push_back(seconds_since(t0));
    } else {
      sur_seconds.push_back(-1.0);
    }
  }
  {
    Verdict& v = verdicts[3];
    v.pass = true;
    for (std::size_t k = 0; k < rates.size(); ++k) {
      const fs::path rep = cli::layout::surrogate_report(cfg, rates[k]);
      if (!fs::exists(rep)) {
        v.pass = false;
        v.detail += cli::rate_tag(rates[k]) + " missing; ";
        continue;
      }
      const double mse = read_json(rep).at("best_test_mse");
      const bool fast = sur_seconds[k] < 0.0 || sur_seconds[k] <= 1800.0;
      v.pass = v.pass && mse <= 1e-3 && fast;
      v.detail += cli::rate_tag(rates[k]) + " held-out MSE " + fmt("%.2e", mse) + " (<=1e-3) in " +
                  (sur_seconds[k] < 0.0 ? std::string("reused") : fmt("%.0f", sur_seconds[k]) + " s") +
                  " (<=1800 s); ";
    }
    if (!sur_err.empty()) v.detail += "errors: " + sur_err;
  }

  // Gradient checks on the trained surrogates.
  {
    const auto t0 = std::chrono::steady_clock::now();
    const std::string e = attempt([&] { cli::cmd_check_grads(ctx); });
    const double secs = seconds_since(t0);
    Verdict& v = verdicts[1];
    if (!fs::exists(cli::layout::check_grads(cfg))) {
      v.detail = "no gradient report: " + e;
    } else {
      const Json r = read_json(cli::layout::check_grads(cfg));
      double prim = 0.0, loss = 0.0;
      for (const auto& item : r.at("primitives").items()) prim = std::max(prim, item.value().at("max_rel_error").get<double>());
      for (const auto& item : r.at("ae_loss").items()) loss = std::max(loss, item.value().at("max_rel_error").get<double>());
      v.pass = r.at("pass").get<bool>() && prim < 1e-5 && loss < 1e-4 && secs < 60.0;
      v.detail = "worst primitive " + fmt("%.1e", prim) + " (<1e-5), full AE loss " + fmt("%.1e", loss) +
                 " (<1e-4), " + fmt("%.1f", secs) + " s (<60 s)";
    }
  }

  // Autoencoder training, sweeps, determinism.
  std::string ae_err, sweep_err;
  for (double rs : rates) {
    cli::CommandContext one = ctx;
    one.rates = {rs};
    if (!(reuse && fs::exists(cli::layout::ae_params_bin(cfg, rs)))) {
      const std::string e = attempt([&] { cli::cmd_train_ae(one); });
      if (!e.empty()) ae_err += e + "; ";
    }
  }
  sweep_err = attempt([&] { cli::cmd_sweep(ctx); });
  {
    Verdict& v = verdicts[8];
    std::vector<std::pair<fs::path, std::string>> first;
    for (double rs : rates) {
      for (const fs::path& p : {cli::layout::sweep_csv(cfg, rs), cli::layout::sweep_json(cfg, rs)}) {
        if (fs::exists(p)) first.emplace_back(p, sigproc::read_file(p));
      }
    }
    cli::CommandContext again = ctx;
    again.jobs = 1;
    const std::string e = attempt([&] { cli::cmd_sweep(again); });
    std::size_t same = 0;
    for (const auto& [p, bytes] : first) same += fs::exists(p) && sigproc::read_file(p) == bytes;
    v.pass = e.empty() && sweep_err.empty() && !first.empty() && same == first.size() && first.size() == 2 * rates.size();
    v.detail = std::to_string(same) + "/" + std::to_string(first.size()) +
               " sweep CSV/JSON files byte-identical on rerun (worker count " + std::to_string(ctx.jobs) + " vs 1)";
    if (!e.empty() || !sweep_err.empty()) v.detail += "; errors: " + sweep_err + " " + e;
  }
  const std::string report_err = attempt([&] { cli::cmd_report(ctx); });

  // Ordering at each rate's best sweep points.
  {
    Verdict& v = verdicts[4];
    v.pass = sweep_err.empty();
    for (double rs : rates) {
      const fs::path csv = cli::layout::sweep_csv(cfg, rs);
      if (!fs::exists(csv)) {
        v.pass = false;
        v.detail += cli::rate_tag(rs) + " no sweep; ";
        continue;
      }
      const eval::SweepResult r = eval::sweep_from_csv(sigproc::read_file(csv));
      const eval::SweepRow &ae = r.best("ae"), &vnle = r.best("vnle"), &ffe = r.best("ffe");
      const bool enough = ae.n_symbols >= 100000 && vnle.n_symbols >= 100000 && ffe.n_symbols >= 100000;
      const bool order = ae.ser <= vnle.ser && vnle.ser <= ffe.ser;
      const bool separated = rs != high_rate || ae.ci_high < ffe.ci_low;
      v.pass = v.pass && enough && order && separated;
      v.detail += cli::rate_tag(rs) + " AE " + fmt("%.2e", ae.ser) + " / VNLE " + fmt("%.2e", vnle.ser) + " / FFE " +
                  fmt("%.2e", ffe.ser) + (order ? " ordered" : " NOT ordered");
      if (rs == high_rate) {
        v.detail += ", AE CI [" + fmt("%.2e", ae.ci_low) + ", " + fmt("%.2e", ae.ci_high) + "] vs FFE CI [" +
                    fmt("%.2e", ffe.ci_low) + ", " + fmt("%.2e", ffe.ci_high) + "]" +
                    (separated ? " separated" : " overlapping");
      }
      v.detail += "; ";
    }
    if (!ae_err.empty()) v.detail += "training errors: " + ae_err;
  }

  // Bandwidth at the lower rate.
  {
    Verdict& v = verdicts[5];
    const fs::path p = cli::layout::spectrum(cfg, low_rate);
    if (!fs::exists(p)) {
      v.detail = "no spectrum for " + cli::rate_tag(low_rate);
    } else {
      const Json s = read_json(p);
      const double ae = s.at("bw_ae_hz"), rrc = s.at("bw_rrc_hz");
      v.pass = ae < rrc && s.at("compression").get<double>() > 0.0;
      v.detail = cli::rate_tag(low_rate) + " -10 dB bandwidth AE " + fmt("%.2f", ae / 1e9) + " GHz vs RRC " +
                 fmt("%.2f", rrc / 1e9) + " GHz, compression " + fmt("%.1f", s.at("compression_pct").get<double>()) +
                 "% (must be > 0)";
      if (s.at("bw_ae_capped").get<bool>()) v.detail += " [AE PSD never fell 10 dB; Nyquist reported]";
    }
  }

  // Learned operating points.
  {
    Verdict& v = verdicts[6];
    v.pass = true;
    for (double rs : rates) {
      const fs::path p = cli::layout::ae_params_json(cfg, rs);
      if (!fs::exists(p)) {
        v.pass = false;
        v.detail += cli::rate_tag(rs) + " not trained; ";
        continue;
      }
      const Json j = read_json(p);
      const double ib = j.at("i_bias_ma"), prf = j.at("p_rf_dbm");
      const bool inside = ib > 50.0 && ib < 100.0 && prf > -4.0 && prf < 2.0;
      v.pass = v.pass && inside;
      v.detail += cli::rate_tag(rs) + " I_bias " + fmt("%.2f", ib) + " mA, P_RF " + fmt("%.3f", prf) + " dBm" +
                  (inside ? " interior" : " ON BOUNDARY") + "; ";
    }
  }

  const char* names[] = {"",
                         "gradient fidelity",
                         "laser physics",
                         "surrogate fidelity",
                         "end-to-end ordering",
                         "bandwidth compression",
                         "operating-point learning",
                         "oracle equivalences",
                         "determinism"};
  int failed = 0;
  for (int k = 1; k <= 8; ++k) {
    std::cout << (verdicts[k].pass ? "PASS" : "FAIL") << "  criterion " << k << " (" << names[k]
              << "): " << verdicts[k].detail << std::endl;
    failed += !verdicts[k].pass;
  }
  if (!report_err.empty()) std::cout << "note: report not written: " << report_err << std::endl;
  std::cout << (failed ? std::to_string(failed) + " criteria failed" : std::string("all criteria passed"))
            << "; artifacts in " << out.string() << std::endl;
  return failed ? 1 : 0;
}
