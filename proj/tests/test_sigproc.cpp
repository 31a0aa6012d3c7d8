#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <filesystem>
#include <numbers>
#include <random>

#include "dmle2e/sigproc/analysis.hpp"
#include "dmle2e/sigproc/filters.hpp"
#include "dmle2e/sigproc/resample.hpp"
#include "dmle2e/sigproc/waveform_io.hpp"

using namespace dmle2e;
using namespace dmle2e::sigproc;
using Eigen::VectorXd;

namespace {

constexpr double kPi = std::numbers::pi;

VectorXd gaussian_noise(Eigen::Index n, double sigma, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, sigma);
  VectorXd v(n);
  for (auto& x : v) x = g(rng);
  return v;
}

Waveform sine(double f, double rate, Eigen::Index n, double phase = 0.0) {
  VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = std::sin(2 * kPi * f * static_cast<double>(i) / rate + phase);
  return Waveform(v, rate);
}

double dtft_mag(const VectorXd& taps, double f, double rate, Eigen::Index center) {
  std::complex<double> acc = 0.0;
  for (Eigen::Index k = 0; k < taps.size(); ++k) {
    acc += taps[k] * std::polar(1.0, -2 * kPi * f * static_cast<double>(k - center) / rate);
  }
  return std::abs(acc);
}

}  // namespace

// ---------------------------------------------------------------- filters

TEST(DesignRrc, SeventeenTapsSymmetricPeakAtCenter) {
  const FirFilter f = design_rrc(17, 0.1, 2);
  ASSERT_EQ(f.size(), 17);
  Eigen::Index argmax = 0;
  f.taps.maxCoeff(&argmax);
  EXPECT_EQ(argmax, 8);
  for (Eigen::Index i = 0; i < 17; ++i) EXPECT_EQ(f.taps[i], f.taps[16 - i]);
  EXPECT_NEAR(f.taps.squaredNorm(), 1.0, 1e-12);
  EXPECT_EQ(f.design, FilterDesign::kRrc);
  EXPECT_DOUBLE_EQ(f.rolloff, 0.1);
}

TEST(DesignRrc, ZeroRolloffIsSincWithZeroCrossings) {
  const int sps = 4;
  const FirFilter f = design_rrc(81, 0.0, sps);
  const Eigen::Index c = f.center();
  for (int k = 1; k * sps <= c; ++k) {
    EXPECT_NEAR(f.taps[c + k * sps], 0.0, 1e-9);
    EXPECT_NEAR(f.taps[c - k * sps], 0.0, 1e-9);
  }
}

TEST(DesignRrc, SingularPointsUseAnalyticLimits) {
  // alpha = 0.25 at 2 SpS puts t = T/(4 alpha) = T exactly on a tap.
  const FirFilter f = design_rrc(33, 0.25, 2);
  EXPECT_TRUE(f.taps.allFinite());
  const FirFilter g = design_rrc(33, 0.5, 2);  // t = T/2 lands on a tap
  EXPECT_TRUE(g.taps.allFinite());
  EXPECT_NEAR(g.taps.squaredNorm(), 1.0, 1e-12);
}

TEST(DesignRrc, MatchedPairNyquistIsi) {
  const FirFilter f = design_rrc(17, 0.1, 2);
  VectorXd full = VectorXd::Zero(33);
  for (int i = 0; i < 17; ++i)
    for (int j = 0; j < 17; ++j) full[i + j] += f.taps[i] * f.taps[j];
  const double peak = full[16];
  double worst = 0.0;
  for (int k = 16 % 2; k < 33; k += 2) {
    if (k != 16) worst = std::max(worst, std::abs(full[k]));
  }
  EXPECT_LE(worst, 5e-2 * peak);
}

TEST(DesignRrc, RejectsBadArguments) {
  EXPECT_THROW(design_rrc(16, 0.1, 2), InvalidArgument);
  EXPECT_THROW(design_rrc(17, -0.1, 2), InvalidArgument);
  EXPECT_THROW(design_rrc(17, 1.1, 2), InvalidArgument);
  EXPECT_THROW(design_rrc(17, 0.1, 0), InvalidArgument);
}

TEST(DesignSuperGaussian, UnitDcGain) {
  for (int order : {1, 2, 4}) {
    const FirFilter f = design_supergaussian(9, order, 25e9, 65e9);
    EXPECT_NEAR(f.taps.sum(), 1.0, 1e-12);
    for (Eigen::Index i = 0; i < 9; ++i) EXPECT_NEAR(f.taps[i], f.taps[8 - i], 1e-15);
  }
}

TEST(DesignSuperGaussian, AwgFilterGainAtCutoff) {
  const FirFilter f = design_supergaussian(9, 2, 25e9, 65e9);
  const double gain = dtft_mag(f.taps, 25e9, 65e9, f.center());
  EXPECT_NEAR(gain, std::exp(-0.5), 0.1 * std::exp(-0.5));
}

TEST(DesignSuperGaussian, LongFilterApproachesPrototype) {
  const FirFilter f = design_supergaussian(201, 2, 10e9, 65e9);
  EXPECT_NEAR(dtft_mag(f.taps, 10e9, 65e9, f.center()), std::exp(-0.5), 2e-3);
}

TEST(DesignSuperGaussian, RejectsCutoffAboveNyquist) {
  EXPECT_THROW(design_supergaussian(9, 2, 40e9, 65e9), InvalidArgument);
  EXPECT_THROW(design_supergaussian(8, 2, 10e9, 65e9), InvalidArgument);
  EXPECT_THROW(design_supergaussian(9, 0, 10e9, 65e9), InvalidArgument);
}

TEST(FirApply, SingleUnitTapIsIdentity) {
  std::mt19937_64 rng(1);
  const Waveform w(gaussian_noise(50, 1.0, rng), 10.0);
  EXPECT_EQ(fir_apply(w, FirFilter::raw(VectorXd::Ones(1))), w);
}

TEST(FirApply, TwoTapAverageAlignment) {
  const Waveform w(VectorXd{{0.0, 1.0, 0.0, 0.0}}, 1.0);
  const Waveform y = fir_apply(w, FirFilter::raw(VectorXd{{0.5, 0.5}}));
  EXPECT_EQ(y.samples(), (VectorXd{{0.0, 0.5, 0.5, 0.0}}));
  EXPECT_EQ(y.sample_rate(), 1.0);
}

TEST(FirApply, Linearity) {
  std::mt19937_64 rng(2);
  const FirFilter f = FirFilter::raw(gaussian_noise(7, 1.0, rng));
  const VectorXd a = gaussian_noise(200, 1.0, rng), b = gaussian_noise(200, 1.0, rng);
  const VectorXd lhs = fir_apply(Waveform(a + b, 1.0), f).samples();
  const VectorXd rhs = fir_apply(Waveform(a, 1.0), f).samples() + fir_apply(Waveform(b, 1.0), f).samples();
  EXPECT_LE((lhs - rhs).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(FirApply, ShiftEquivariantOnInterior) {
  std::mt19937_64 rng(3);
  const FirFilter f = FirFilter::raw(gaussian_noise(9, 1.0, rng));
  const VectorXd x = gaussian_noise(300, 1.0, rng);
  VectorXd shifted = VectorXd::Zero(300);
  shifted.tail(295) = x.head(295);
  const VectorXd y = fir_apply(Waveform(x, 1.0), f).samples();
  const VectorXd ys = fir_apply(Waveform(shifted, 1.0), f).samples();
  EXPECT_LE((ys.segment(20, 260) - y.segment(15, 260)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(UpsampleInsert, Definition) {
  const std::vector<double> v{1.0, 2.0};
  EXPECT_EQ(upsample_insert<double>(v, 1, 1.0).samples(), (VectorXd{{1.0, 2.0}}));
  const Waveform up = upsample_insert<double>(v, 2, 10.0);
  EXPECT_EQ(up.samples(), (VectorXd{{1.0, 0.0, 2.0, 0.0}}));
  EXPECT_EQ(up.sample_rate(), 20.0);
}

TEST(UpsampleInsert, PreservesEnergy) {
  std::mt19937_64 rng(4);
  const VectorXd v = gaussian_noise(64, 1.0, rng);
  const Waveform up = upsample_insert<double>(std::span<const double>(v.data(), 64), 3, 1.0);
  EXPECT_NEAR(up.samples().squaredNorm(), v.squaredNorm(), 1e-12);
}

// ---------------------------------------------------------------- resample

TEST(Resample, SameRateIsIdentity) {
  std::mt19937_64 rng(5);
  const Waveform w(gaussian_noise(100, 1.0, rng), 40e9);
  EXPECT_EQ(resample(w, 40e9), w);
}

TEST(Resample, SineAmplitudeAt65GSa) {
  const Waveform w = sine(5e9, 40e9, 2000);
  const Waveform y = resample(w, 65e9);
  EXPECT_EQ(y.size(), 3250);
  EXPECT_EQ(y.sample_rate(), 65e9);
  double worst = 0.0;
  for (Eigen::Index i = 200; i < y.size() - 200; ++i) {
    const double ref = std::sin(2 * kPi * 5e9 * static_cast<double>(i) / 65e9);
    worst = std::max(worst, std::abs(y[i] - ref));
  }
  EXPECT_LT(worst, 1e-2);
}

TEST(Resample, RoundTripBandLimited) {
  // Sum of tones below 80% of the 20 GHz Nyquist of a 40 GSa/s stream.
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> uf(0.1e9, 16e9), up(0.0, 2 * kPi);
  const Eigen::Index n = 4000;
  VectorXd v = VectorXd::Zero(n);
  for (int k = 0; k < 20; ++k) v += sine(uf(rng), 40e9, n, up(rng)).samples() / 20.0;
  const Waveform w(v, 40e9);
  const Waveform back = resample(resample(w, 65e9), 40e9);
  ASSERT_EQ(back.size(), n);
  const double err = (back.samples() - v).segment(200, n - 400).cwiseAbs().maxCoeff();
  EXPECT_LT(err, 1e-3);
}

TEST(Resample, RationalRatio) {
  EXPECT_EQ(rational_ratio(65.0 / 40.0, 4000), (std::pair<long, long>{13, 8}));
  EXPECT_EQ(rational_ratio(80.0 / 130.0, 4000), (std::pair<long, long>{8, 13}));
  EXPECT_THROW(rational_ratio(std::numbers::pi, 10), InvalidArgument);
}

// ---------------------------------------------------------------- analysis

TEST(Synchronize, ZeroLagForIdenticalInputs) {
  std::mt19937_64 rng(7);
  const Waveform w(gaussian_noise(500, 1.0, rng), 1.0);
  EXPECT_EQ(synchronize(w, w), 0);
}

TEST(Synchronize, RecoversConstructedDelay) {
  std::mt19937_64 rng(8);
  const VectorXd x = gaussian_noise(520, 1.0, rng);
  const Waveform ref(x.head(500), 1.0);
  VectorXd d = VectorXd::Zero(520);
  d.tail(513) = x.head(513);
  EXPECT_EQ(synchronize(ref, Waveform(d, 1.0)), 7);
  const Waveform aligned = apply_lag(Waveform(d, 1.0), 7, 500);
  EXPECT_LE((aligned.samples() - ref.samples()).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Synchronize, RobustAtTenDbSnr) {
  std::mt19937_64 rng(9);
  int ok = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const VectorXd x = gaussian_noise(520, 1.0, rng);
    VectorXd d = VectorXd::Zero(520);
    d.tail(513) = x.head(513);
    d += gaussian_noise(520, std::sqrt(0.1), rng);
    ok += synchronize(Waveform(x.head(500), 1.0), Waveform(d, 1.0)) == 7;
  }
  EXPECT_GE(ok, 99);
}

TEST(Synchronize, ErrorPaths) {
  const Waveform zeros(VectorXd::Zero(100), 1.0);
  std::mt19937_64 rng(10);
  const Waveform w(gaussian_noise(100, 1.0, rng), 1.0);
  EXPECT_THROW(synchronize(zeros, w), DegenerateInput);
  EXPECT_THROW(synchronize(w, zeros), DegenerateInput);
  EXPECT_THROW(synchronize(w, Waveform(w.samples(), 2.0)), InvalidArgument);
  EXPECT_THROW(synchronize(w, Waveform(w.samples().head(50), 1.0)), InvalidArgument);
}

TEST(AverageCopies, Definitions) {
  std::mt19937_64 rng(11);
  const VectorXd x = gaussian_noise(64, 1.0, rng), e = gaussian_noise(64, 0.1, rng);
  const Waveform w(x, 1.0);
  EXPECT_EQ(average_copies({w, w, w}), w);
  EXPECT_LE((average_copies({Waveform(x + e, 1.0), Waveform(x - e, 1.0)}).samples() - x).cwiseAbs().maxCoeff(),
            1e-15);
  EXPECT_THROW(average_copies({w}), InvalidArgument);
  EXPECT_THROW(average_copies({w, Waveform(x.head(10), 1.0)}), InvalidArgument);
}

TEST(AverageCopies, NoiseVarianceDropsByCopyCount) {
  std::mt19937_64 rng(12);
  const Eigen::Index n = 20000;
  std::vector<Waveform> copies;
  for (int c = 0; c < 25; ++c) copies.emplace_back(gaussian_noise(n, 1.0, rng), 1.0);
  const VectorXd avg = average_copies(copies).samples();
  const double var = (avg.array() - avg.mean()).square().sum() / static_cast<double>(n - 1);
  EXPECT_NEAR(var, 1.0 / 25.0, 0.2 / 25.0);
}

TEST(Normalize01, Definitions) {
  const Normalized n = normalize01(Waveform(VectorXd{{2.0, 4.0, 6.0}}, 1.0));
  EXPECT_EQ(n.waveform.samples(), (VectorXd{{0.0, 0.5, 1.0}}));
  EXPECT_EQ(n.scale, 4.0);
  EXPECT_EQ(n.offset, 2.0);
  const Waveform unit(VectorXd{{0.0, 0.25, 1.0}}, 1.0);
  const Normalized u = normalize01(unit);
  EXPECT_EQ(u.waveform, unit);
  EXPECT_EQ(u.scale, 1.0);
  EXPECT_EQ(u.offset, 0.0);
  EXPECT_THROW(normalize01(Waveform(VectorXd::Constant(5, 3.0), 1.0)), DegenerateInput);
}

TEST(Normalize01, RoundTrip) {
  std::mt19937_64 rng(13);
  const Waveform w(gaussian_noise(500, 3.0, rng), 1.0);
  const Normalized n = normalize01(w);
  EXPECT_LE((denormalize(n.waveform, n.scale, n.offset).samples() - w.samples()).cwiseAbs().maxCoeff(), 1e-12);
}

namespace {

std::vector<Waveform> synthetic_copies(double snr_db, double amplitude, double offset, std::uint64_t seed,
                                       Eigen::Index n = 4000, int count = 25) {
  std::mt19937_64 rng(seed);
  // Signal of unit power scaled by amplitude; noise sized for the requested SNR at amplitude 1.
  const VectorXd s = gaussian_noise(n, 1.0, rng);
  const VectorXd sig = amplitude * (s.array() - s.mean()) / std::sqrt((s.array() - s.mean()).square().mean());
  const double sigma = std::pow(10.0, -snr_db / 20.0);
  std::vector<Waveform> copies;
  for (int c = 0; c < count; ++c) copies.emplace_back((sig + gaussian_noise(n, sigma, rng)).array() + offset, 1.0);
  return copies;
}

}  // namespace

TEST(EstimateSnr, RecoversConstructedSnr) {
  for (double snr : {10.0, 20.0, 30.0}) {
    const SnrEstimate e = estimate_snr(synthetic_copies(snr, 1.0, 0.0, 14));
    EXPECT_FALSE(e.infinite);
    EXPECT_NEAR(e.snr_db, snr, 0.5) << "target " << snr;
  }
}

TEST(EstimateSnr, NoiselessIsInfinite) {
  const Waveform w(VectorXd::LinSpaced(100, 0.0, 1.0), 1.0);
  const SnrEstimate e = estimate_snr({w, w, w});
  EXPECT_TRUE(e.infinite);
  EXPECT_TRUE(std::isinf(e.snr_db));
}

TEST(EstimateSnr, DoublingAmplitudeAddsSixDb) {
  const double a = estimate_snr(synthetic_copies(15.0, 1.0, 0.0, 15)).snr_db;
  const double b = estimate_snr(synthetic_copies(15.0, 2.0, 0.0, 15)).snr_db;
  EXPECT_NEAR(b - a, 6.02, 0.3);
}

TEST(EstimateSnr, InvariantToCommonOffset) {
  const double a = estimate_snr(synthetic_copies(15.0, 1.0, 0.0, 16)).snr_db;
  const double b = estimate_snr(synthetic_copies(15.0, 1.0, 7.5, 16)).snr_db;
  EXPECT_NEAR(a, b, 1e-6);
}

TEST(Psd, WhiteNoiseIsFlat) {
  std::mt19937_64 rng(17);
  const Waveform w(gaussian_noise(64 * 256, 1.0, rng), 1.0);
  const Spectrum s = psd(w, 256, 0.5);
  ASSERT_GE((w.size() - 256) / 128 + 1, 100);
  const double mean_db = 10 * std::log10(s.psd.segment(1, s.psd.size() - 2).mean());
  const VectorXd db = s.psd_db();
  for (Eigen::Index k = 1; k < s.psd.size() - 1; ++k) EXPECT_NEAR(db[k], mean_db, 3.0) << "bin " << k;
}

TEST(Psd, SinePeakAtItsFrequency) {
  const double rate = 64e9, f0 = 10e9;  // bin-centred for 256-point segments
  const Spectrum s = psd(sine(f0, rate, 8192), 256);
  Eigen::Index k = 0;
  s.psd.maxCoeff(&k);
  EXPECT_DOUBLE_EQ(s.freqs[k], f0);
}

TEST(Psd, ParsevalWithinFivePercent) {
  std::mt19937_64 rng(18);
  const Waveform w(gaussian_noise(8192, 2.0, rng).array() + 0.0, 10e9);
  const Spectrum s = psd(w, 512);
  const double integrated = s.psd.sum() * s.resolution_bw;
  EXPECT_NEAR(integrated, w.samples().squaredNorm() / 8192.0, 0.05 * w.samples().squaredNorm() / 8192.0);
}

TEST(Psd, ErrorPaths) {
  const Waveform w(VectorXd::Ones(100), 1.0);
  EXPECT_THROW(psd(w, 200), InvalidArgument);
  EXPECT_THROW(psd(w, 50, 1.0), InvalidArgument);
}

TEST(BwAtLevel, Brickwall) {
  Spectrum s;
  s.freqs = VectorXd::LinSpaced(101, 0.0, 100.0);
  s.psd = (s.freqs.array() <= 40.0).cast<double>() + 1e-9;
  s.resolution_bw = 1.0;
  EXPECT_NEAR(bw_at_level(s, -10.0), 40.0, 1.0);
}

TEST(BwAtLevel, GaussianInversion) {
  const double sigma = 10.0;
  Spectrum s;
  s.freqs = VectorXd::LinSpaced(2001, 0.0, 100.0);
  s.psd = (-s.freqs.array().square() / (2 * sigma * sigma)).exp();
  s.resolution_bw = 0.05;
  const double expected = sigma * std::sqrt(2 * std::log(10.0));
  EXPECT_NEAR(bw_at_level(s, -10.0), expected, 0.02 * expected);
}

TEST(BwAtLevel, WideningNeverShrinks) {
  Spectrum s;
  s.freqs = VectorXd::LinSpaced(1001, 0.0, 100.0);
  s.resolution_bw = 0.1;
  double prev = 0.0;
  for (double sigma = 2.0; sigma <= 20.0; sigma += 1.0) {
    s.psd = (-s.freqs.array().square() / (2 * sigma * sigma)).exp();
    const double bw = bw_at_level(s, -10.0);
    EXPECT_GE(bw, prev);
    prev = bw;
  }
}

TEST(BwAtLevel, NeverCrossedIsOutOfRange) {
  Spectrum s;
  s.freqs = VectorXd::LinSpaced(11, 0.0, 10.0);
  s.psd = VectorXd::Ones(11);
  s.resolution_bw = 1.0;
  EXPECT_THROW(bw_at_level(s, -10.0), OutOfRange);
}

// ---------------------------------------------------------------- io

TEST(WaveformIo, BinaryRoundTrip) {
  std::mt19937_64 rng(19);
  const Waveform w(gaussian_noise(333, 1.0, rng), 80e9);
  const std::string bytes = encode_waveform(w);
  EXPECT_EQ(bytes.substr(0, 8), "WAVE0001");
  EXPECT_EQ(bytes.size(), 16u + 8u * 333u);
  EXPECT_EQ(decode_waveform(bytes), w);
  EXPECT_THROW(decode_waveform(bytes.substr(0, bytes.size() - 3)), FormatError);
  EXPECT_THROW(decode_waveform("WAVE0002" + bytes.substr(8)), FormatError);
}

TEST(WaveformIo, FileRoundTrips) {
  std::mt19937_64 rng(20);
  const Waveform w(gaussian_noise(50, 1.0, rng), 40e9);
  const auto dir = std::filesystem::temp_directory_path() / "dmle2e_test_io";
  std::filesystem::create_directories(dir);
  write_waveform_binary(dir / "w.bin", w);
  EXPECT_EQ(read_waveform_binary(dir / "w.bin"), w);
  write_waveform_csv(dir / "w.csv", w);
  EXPECT_EQ(read_waveform_csv(dir / "w.csv"), w);
  std::filesystem::remove_all(dir);
}
