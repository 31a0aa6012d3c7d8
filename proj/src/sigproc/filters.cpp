#include "dmle2e/sigproc/filters.hpp"

#include <cmath>
#include <numbers>

namespace dmle2e::sigproc {

namespace {

// Continuous RRC pulse at time t (symbol periods).
double rrc_pulse(double t, double alpha) {
  constexpr double pi = std::numbers::pi;
  if (std::abs(t) < 1e-12) return 1.0 - alpha + 4.0 * alpha / pi;
  if (alpha > 0.0 && std::abs(std::abs(t) - 1.0 / (4.0 * alpha)) < 1e-12) {
    const double a = pi / (4.0 * alpha);
    return alpha / std::numbers::sqrt2 *
           ((1.0 + 2.0 / pi) * std::sin(a) + (1.0 - 2.0 / pi) * std::cos(a));
  }
  const double num = std::sin(pi * t * (1.0 - alpha)) + 4.0 * alpha * t * std::cos(pi * t * (1.0 + alpha));
  const double den = pi * t * (1.0 - (4.0 * alpha * t) * (4.0 * alpha * t));
  return num / den;
}

}  // namespace

FirFilter design_rrc(int n_taps, double rolloff, int sps) {
  if (n_taps < 3 || n_taps % 2 == 0) throw InvalidArgument("RRC tap count must be odd and >= 3");
  if (!(rolloff >= 0.0 && rolloff <= 1.0)) throw InvalidArgument("RRC rolloff must lie in [0, 1]");
  if (sps < 1) throw InvalidArgument("RRC samples per symbol must be >= 1");

  const int center = n_taps / 2;
  Eigen::VectorXd taps(n_taps);
  for (int i = 0; i <= center; ++i) {
    const double v = rrc_pulse(static_cast<double>(i - center) / sps, rolloff);
    taps[i] = v;
    taps[n_taps - 1 - i] = v;
  }
  taps /= taps.norm();
  return FirFilter{std::move(taps), FilterDesign::kRrc, rolloff, 0.0};
}

FirFilter design_supergaussian(int n_taps, int order, double cutoff_hz, double rate_hz) {
  if (n_taps < 1 || n_taps % 2 == 0) throw InvalidArgument("super-Gaussian tap count must be odd");
  if (order < 1) throw InvalidArgument("super-Gaussian order must be >= 1");
  if (!(rate_hz > 0.0)) throw InvalidArgument("sample rate must be positive");
  if (!(cutoff_hz > 0.0 && cutoff_hz < rate_hz / 2.0)) {
    throw InvalidArgument("super-Gaussian cutoff must lie in (0, Nyquist)");
  }

  // Dense frequency grid; the prototype is real and even, so the inverse DFT is a cosine sum.
  constexpr int kGrid = 8192;
  Eigen::VectorXd mag(kGrid);
  for (int k = 0; k < kGrid; ++k) {
    const int kf = k <= kGrid / 2 ? k : kGrid - k;
    const double f = rate_hz * kf / kGrid;
    mag[k] = std::exp(-0.5 * std::pow(f / cutoff_hz, 2.0 * order));
  }
  const int half = n_taps / 2;
  Eigen::VectorXd taps(n_taps);
  for (int n = -half; n <= half; ++n) {
    double acc = 0.0;
    for (int k = 0; k < kGrid; ++k) {
      acc += mag[k] * std::cos(2.0 * std::numbers::pi * k * n / kGrid);
    }
    taps[n + half] = acc / kGrid;
  }
  taps /= taps.sum();
  return FirFilter{std::move(taps), FilterDesign::kSuperGaussian, 0.0, cutoff_hz};
}

}  // namespace dmle2e::sigproc
