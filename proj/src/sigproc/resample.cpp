#include "dmle2e/sigproc/resample.hpp"

#include <cmath>
#include <numbers>
#include <numeric>

namespace dmle2e::sigproc {

std::pair<long, long> rational_ratio(double ratio, long max_denominator) {
  if (!(ratio > 0.0) || !std::isfinite(ratio)) throw InvalidArgument("resampling ratio must be positive");
  // Continued-fraction convergents.
  long p0 = 0, q0 = 1, p1 = 1, q1 = 0;
  double x = ratio;
  for (int iter = 0; iter < 64; ++iter) {
    const double a = std::floor(x);
    const long ai = static_cast<long>(a);
    const long p2 = ai * p1 + p0;
    const long q2 = ai * q1 + q0;
    if (q2 > max_denominator) break;
    p0 = p1; q0 = q1; p1 = p2; q1 = q2;
    if (std::abs(static_cast<double>(p1) / q1 - ratio) <= 1e-9 * ratio) {
      const long g = std::gcd(p1, q1);
      return {p1 / g, q1 / g};
    }
    const double frac = x - a;
    if (frac < 1e-15) break;
    x = 1.0 / frac;
  }
  throw InvalidArgument("resampling ratio " + std::to_string(ratio) +
                        " has no rational form with denominator <= " + std::to_string(max_denominator));
}

Waveform resample(const Waveform& w, double new_rate_hz, const ResampleOptions& opts) {
  if (!(new_rate_hz > 0.0)) throw InvalidArgument("target sample rate must be positive");
  if (new_rate_hz == w.sample_rate()) return w;

  const auto [p, q] = rational_ratio(new_rate_hz / w.sample_rate(), opts.max_denominator);
  const double slow = std::min(1.0, static_cast<double>(p) / q);  // slower rate in input-sample units
  const double fc = opts.passband * 0.5 * slow;                      // cycles per input sample
  const double half = opts.half_width / slow;                        // half-width in input samples
  const long reach = static_cast<long>(std::ceil(half));
  const long width = 2 * reach;
  const double i0_beta = std::cyl_bessel_i(0.0, opts.kaiser_beta);

  // table(phase, j): weight of input n0 - reach + 1 + j for output at n0 + phase/p
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> table(p, width);
  for (long ph = 0; ph < p; ++ph) {
    const double frac = static_cast<double>(ph) / p;
    for (long j = 0; j < width; ++j) {
      const double d = static_cast<double>(j - reach + 1) - frac;
      double v = 0.0;
      if (std::abs(d) < half) {
        const double arg = 2.0 * fc * d;
        const double sinc = std::abs(arg) < 1e-12 ? 1.0 : std::sin(std::numbers::pi * arg) / (std::numbers::pi * arg);
        const double r = d / half;
        v = 2.0 * fc * sinc * std::cyl_bessel_i(0.0, opts.kaiser_beta * std::sqrt(1.0 - r * r)) / i0_beta;
      }
      table(ph, j) = v;
    }
    table.row(ph) /= table.row(ph).sum();
  }

  const Eigen::VectorXd& x = w.samples();
  const long n_in = static_cast<long>(x.size());
  const long n_out = static_cast<long>((static_cast<__int128>(n_in) * p + q - 1) / q);
  Eigen::VectorXd y(n_out);
  for (long m = 0; m < n_out; ++m) {
    const __int128 num = static_cast<__int128>(m) * q;
    const long n0 = static_cast<long>(num / p);
    const long ph = static_cast<long>(num % p);
    const long start = n0 - reach + 1;
    const long lo = std::max(0L, -start);
    const long hi = std::min(width, n_in - start);
    double acc = 0.0;
    if (hi > lo) acc = table.row(ph).segment(lo, hi - lo).dot(x.segment(start + lo, hi - lo));
    y[m] = acc;
  }
  return Waveform(std::move(y), new_rate_hz);
}

}  // namespace dmle2e::sigproc
