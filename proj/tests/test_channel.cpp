#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "dmle2e/channel/testbed.hpp"
#include "dmle2e/sigproc/analysis.hpp"
#include "dmle2e/sigproc/filters.hpp"

using namespace dmle2e;
using namespace dmle2e::channel;
using sigproc::Waveform;
using Eigen::VectorXd;

namespace {

const ChannelConfig& config() {
  static const ChannelConfig cfg = load_channel_config(DMLE2E_CHANNEL_CONFIG);
  return cfg;
}

Waveform random_pam(Eigen::Index n_symbols, double symbol_rate, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> u(0, 3);
  std::vector<double> levels(static_cast<std::size_t>(n_symbols));
  for (auto& v : levels) v = u(rng) / 3.0 - 0.5;
  const Waveform up = sigproc::upsample_insert<double>(levels, 2, symbol_rate);
  return sigproc::fir_apply(up, sigproc::design_rrc(17, 0.1, 2));
}

// Threshold from the numeric L-I curve: x-intercept of the line through two
// points just above threshold, where spontaneous emission is negligible.
double numeric_knee_ma(const LaserParams& p, double ith) {
  const double i1 = 1.3 * ith, i2 = 1.6 * ith;
  const double p1 = steady_state(i1, p).power_mw, p2 = steady_state(i2, p).power_mw;
  return i1 - p1 * (i2 - i1) / (p2 - p1);
}

}  // namespace

TEST(DbmToPeakVoltage, ReferenceValues) {
  EXPECT_NEAR(dbm_to_peak_voltage(0.0, 50.0), 0.3162, 1e-4);
  EXPECT_NEAR(dbm_to_peak_voltage(2.0, 50.0), 0.3981, 1e-4);
  EXPECT_NEAR(dbm_to_peak_voltage(-4.0, 50.0), 0.1995, 1e-4);
  EXPECT_THROW(dbm_to_peak_voltage(0.0, 0.0), InvalidArgument);
}

TEST(Config, DefaultLoadsAndRoundTrips) {
  const ChannelConfig& cfg = config();
  EXPECT_DOUBLE_EQ(cfg.laser.external_efficiency, 0.15);
  EXPECT_DOUBLE_EQ(cfg.chain.awg_rate, 65e9);
  EXPECT_DOUBLE_EQ(cfg.chain.amp_gain_db, 13.0);
  const ChannelConfig again = parse_channel_config(dump_channel_config(cfg));
  EXPECT_EQ(dump_channel_config(again), dump_channel_config(cfg));
}

TEST(Config, MissingKeyIsRejected) {
  EXPECT_THROW(parse_channel_config(R"({"laser": {}, "chain": {}})"), InvalidArgument);
  EXPECT_THROW(parse_channel_config("not json"), InvalidArgument);
}

TEST(SteadyState, ZeroBiasGivesNoLight) {
  const SteadyState s = steady_state(0.0, config().laser);
  EXPECT_NEAR(s.power_mw, 0.0, 1e-9);
  const SteadyState tiny = steady_state(0.5, config().laser);
  EXPECT_LT(tiny.power_mw, 1e-3);
}

TEST(SteadyState, ResidualsVanish) {
  const LaserParams& p = config().laser;
  for (double i : {5.0, 20.0, 50.0, 75.0, 100.0}) {
    const SteadyState s = steady_state(i, p);
    const LaserState f = rate_equations({s.carrier_density, s.photon_density}, i, p);
    EXPECT_LT(std::abs(f.carrier_density) * p.carrier_lifetime / s.carrier_density, 1e-10);
    EXPECT_LT(std::abs(f.photon_density) * p.photon_lifetime / s.photon_density, 1e-10);
  }
}

TEST(SteadyState, NumericKneeMatchesAnalyticThreshold) {
  const LaserParams& p = config().laser;
  const double ith = analytic_threshold_ma(p);
  EXPECT_NEAR(numeric_knee_ma(p, ith), ith, 0.01 * ith);
}

TEST(SteadyState, SlopeEfficiencyAboveThreshold) {
  const LaserParams& p = config().laser;
  for (double i : {30.0, 50.0, 75.0, 100.0}) {
    const double slope = (steady_state(i + 0.5, p).power_mw - steady_state(i - 0.5, p).power_mw) / 1.0;  // mW/mA
    EXPECT_NEAR(slope, 0.15, 0.05 * 0.15) << "at " << i << " mA";
  }
}

TEST(SteadyState, PowerStrictlyIncreasesWithBias) {
  double prev = 0.0;
  for (double i = 15.0; i <= 100.0; i += 5.0) {
    const double pw = steady_state(i, config().laser).power_mw;
    EXPECT_GT(pw, prev);
    prev = pw;
  }
}

TEST(DmlSimulate, ConstantDriveStaysAtSteadyState) {
  const LaserParams& p = config().laser;
  const Waveform drive(VectorXd::Constant(13000, 75.0), 130e9);  // 100 ns
  const Waveform out = dml_simulate(drive, p, 1.0 / (8 * 65e9));
  const double ref = steady_state(75.0, p).power_mw;
  EXPECT_LT((out.samples().array() - ref).abs().maxCoeff() / ref, 1e-6);
}

TEST(DmlSimulate, SettlesFromStepWithinFiveNs) {
  const LaserParams& p = config().laser;
  VectorXd d = VectorXd::Constant(1300, 70.0);
  d.tail(1290).setConstant(80.0);
  const Waveform out = dml_simulate(Waveform(d, 130e9), p, 1.0 / (8 * 65e9));
  const double ref = steady_state(80.0, p).power_mw;
  EXPECT_LT(std::abs(out[10 + 650] - ref) / ref, 1e-3);  // 5 ns after the step
}

TEST(DmlSimulate, RelaxationOscillationMatchesLinearization) {
  const LaserParams& p = config().laser;
  for (double bias : {50.0, 75.0}) {
    const double rate = 2e12;
    VectorXd d = VectorXd::Constant(4000, bias);
    d.tail(3990).setConstant(bias + 0.2);
    const Waveform out = dml_simulate(Waveform(d, rate), p, 0.25e-12);
    const double final_p = steady_state(bias + 0.2, p).power_mw;
    std::vector<double> crossings;
    for (Eigen::Index i = 11; i < out.size(); ++i) {
      const double a = out[i - 1] - final_p, b = out[i] - final_p;
      if ((a < 0) != (b < 0)) crossings.push_back((static_cast<double>(i) - 1 + a / (a - b)) / rate);
    }
    // The default laser is heavily damped, so only a few crossings rise above rounding.
    ASSERT_GE(crossings.size(), 5u);
    // Skip the first crossing (step onset); average half-periods after it.
    const double half_period = (crossings[4] - crossings[1]) / 3.0;
    const double f_transient = 1.0 / (2 * half_period);
    const double f_lin = small_signal(bias, p).damped_freq_hz;
    EXPECT_NEAR(f_transient, f_lin, 0.05 * f_lin) << "bias " << bias;
  }
}

TEST(DmlSimulate, RejectsCoarseStep) {
  const Waveform drive(VectorXd::Constant(10, 75.0), 10e9);
  EXPECT_THROW(dml_simulate(drive, config().laser, 1e-10), InvalidArgument);
}

TEST(SmallSignal, OperatingRangeIsBandwidthLimiting) {
  const double fr = small_signal(75.0, config().laser).undamped_freq_hz;
  EXPECT_GT(fr, 8e9);
  EXPECT_LT(fr, 12e9);
}

TEST(Testbed, AveragingGainExceedsThirteenDb) {
  const Waveform digital = random_pam(1000, 20e9, 1);
  constexpr int kGroups = 8;
  const auto copies = testbed_propagate(digital, 75.0, 2.0, 25 * kGroups, 7, config());
  ASSERT_EQ(copies.size(), 25u * kGroups);
  std::vector<Waveform> singles(copies.begin(), copies.begin() + 25);
  std::vector<Waveform> averages;
  for (int g = 0; g < kGroups; ++g) {
    averages.push_back(sigproc::average_copies(
        std::vector<Waveform>(copies.begin() + 25 * g, copies.begin() + 25 * (g + 1))));
  }
  const double single = sigproc::estimate_snr(singles).snr_db;
  const double averaged = sigproc::estimate_snr(averages).snr_db;
  EXPECT_GE(averaged - single, 13.0) << "single " << single << " averaged " << averaged;
}

TEST(Testbed, FlatInputGivesConstantOutput) {
  ChannelConfig cfg = config();
  cfg.chain.noise_sigma = 0.0;
  const Waveform flat(VectorXd::Constant(800, 0.25), 40e9);
  const auto out = testbed_propagate(flat, 75.0, 0.0, 1, 3, cfg);
  const double ref = steady_state(75.0, cfg.laser).power_mw;
  const VectorXd mid = out[0].samples().segment(100, 600);
  EXPECT_LT((mid.array() - ref).abs().maxCoeff() / ref, 1e-6);
}

TEST(Testbed, SameSeedIsBitIdentical) {
  const Waveform digital = random_pam(300, 30e9, 2);
  const auto a = testbed_propagate(digital, 60.0, -1.0, 3, 42, config());
  const auto b = testbed_propagate(digital, 60.0, -1.0, 3, 42, config());
  const auto c = testbed_propagate(digital, 60.0, -1.0, 3, 43, config());
  ASSERT_EQ(a.size(), 3u);
  for (int k = 0; k < 3; ++k) EXPECT_EQ(a[k], b[k]);
  EXPECT_FALSE(a[0] == c[0]);
  EXPECT_FALSE(a[0] == a[1]);
  EXPECT_EQ(a[0].size(), digital.size());
  EXPECT_EQ(a[0].sample_rate(), digital.sample_rate());
}

TEST(Testbed, SlowDriveFollowsLinearLightCurrent) {
  ChannelConfig cfg = config();
  cfg.chain.filters_enabled = false;
  cfg.chain.noise_sigma = 0.0;
  const double rate = 40e9;
  const Eigen::Index n = 4000;
  VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = std::sin(2 * std::numbers::pi * 0.2e9 * static_cast<double>(i) / rate);
  const Waveform digital(v, rate);
  const Waveform drive = drive_current(digital, 75.0, 0.0, cfg);
  const Waveform light = dml_simulate(drive, cfg.laser, cfg.chain.integration_step());
  const double ith = analytic_threshold_ma(cfg.laser);
  const VectorXd ideal = 0.15 * (drive.samples().array() - ith);
  const Eigen::Index skip = drive.size() / 10;
  const double dev = (light.samples() - ideal).segment(skip, drive.size() - 2 * skip).cwiseAbs().maxCoeff();
  EXPECT_LT(dev, 0.05 * ideal.maxCoeff());
}

TEST(Testbed, SecondHarmonicWitnessesNonlinearity) {
  ChannelConfig cfg = config();
  cfg.chain.noise_sigma = 0.0;
  const double rate = 40e9, f0 = 2.5e9;
  const Eigen::Index n = 4096;
  VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = std::sin(2 * std::numbers::pi * f0 * static_cast<double>(i) / rate);
  const Waveform out = testbed_propagate(Waveform(v, rate), 50.0, 2.0, 1, 1, cfg)[0];
  const sigproc::Spectrum s = sigproc::psd(out, 1024, 0.5);
  auto power_near = [&](double f) {
    const auto k = static_cast<Eigen::Index>(std::lround(f / s.resolution_bw));
    return s.psd.segment(k - 2, 5).sum();
  };
  const double hd2_dbc = 10 * std::log10(power_near(2 * f0) / power_near(f0));
  EXPECT_GT(hd2_dbc, -30.0);
}
