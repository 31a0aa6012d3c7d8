#include "dmle2e/sigproc/analysis.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <complex>
#include <numbers>

namespace dmle2e::sigproc {

long synchronize(const Waveform& reference, const Waveform& measured, long max_lag) {
  if (reference.sample_rate() != measured.sample_rate()) {
    throw InvalidArgument("synchronize: sample rates differ");
  }
  if (measured.size() < reference.size()) {
    throw InvalidArgument("synchronize: measured waveform shorter than reference");
  }
  if (max_lag < 0) throw InvalidArgument("synchronize: max_lag must be >= 0");

  const Eigen::VectorXd& r = reference.samples();
  const Eigen::VectorXd& m = measured.samples();
  const long nr = static_cast<long>(r.size());
  const long nm = static_cast<long>(m.size());

  auto centered_energy = [](const Eigen::VectorXd& v) { return (v.array() - v.mean()).square().sum(); };
  if (centered_energy(r) <= 0.0 || centered_energy(m) <= 0.0) {
    throw DegenerateInput("synchronize: input has no variation");
  }

  // Prefix sums for per-overlap means and energies.
  auto prefix = [](const Eigen::VectorXd& v, bool squared) {
    Eigen::VectorXd p(v.size() + 1);
    p[0] = 0.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) p[i + 1] = p[i] + (squared ? v[i] * v[i] : v[i]);
    return p;
  };
  const Eigen::VectorXd r1 = prefix(r, false), r2 = prefix(r, true);
  const Eigen::VectorXd m1 = prefix(m, false), m2 = prefix(m, true);

  const long min_overlap = std::max(2L, nr / 2);
  long best_lag = 0;
  double best = -std::numeric_limits<double>::infinity();
  for (long lag = -max_lag; lag <= max_lag; ++lag) {
    const long t0 = std::max(0L, -lag);
    const long t1 = std::min(nr, nm - lag);
    const long n = t1 - t0;
    if (n < min_overlap) continue;
    const double sr = r1[t1] - r1[t0];
    const double srr = r2[t1] - r2[t0];
    const double sm = m1[t1 + lag] - m1[t0 + lag];
    const double smm = m2[t1 + lag] - m2[t0 + lag];
    const double cross = r.segment(t0, n).dot(m.segment(t0 + lag, n));
    const double cov = cross - sr * sm / n;
    const double vr = srr - sr * sr / n;
    const double vm = smm - sm * sm / n;
    if (vr <= 0.0 || vm <= 0.0) continue;
    const double rho = cov / std::sqrt(vr * vm);
    if (rho > best) {
      best = rho;
      best_lag = lag;
    }
  }
  if (!std::isfinite(best)) throw DegenerateInput("synchronize: no valid overlap");
  return best_lag;
}

Waveform apply_lag(const Waveform& measured, long lag, Eigen::Index length) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(length);
  const Eigen::VectorXd& m = measured.samples();
  for (Eigen::Index t = 0; t < length; ++t) {
    const Eigen::Index j = t + lag;
    if (j >= 0 && j < m.size()) out[t] = m[j];
  }
  return Waveform(std::move(out), measured.sample_rate());
}

namespace {

// Incremental mean: exact when all copies are identical, unlike sum-then-divide.
Eigen::VectorXd running_mean(const std::vector<Waveform>& copies) {
  Eigen::VectorXd mean = copies.front().samples();
  for (std::size_t k = 1; k < copies.size(); ++k) {
    mean += (copies[k].samples() - mean) / static_cast<double>(k + 1);
  }
  return mean;
}

}  // namespace

Waveform average_copies(const std::vector<Waveform>& copies) {
  if (copies.size() < 2) throw InvalidArgument("average_copies: need at least two copies");
  const auto n = copies.front().size();
  const double rate = copies.front().sample_rate();
  for (const auto& c : copies) {
    if (c.size() != n || c.sample_rate() != rate) {
      throw InvalidArgument("average_copies: copies differ in length or rate");
    }
  }
  return Waveform(running_mean(copies), rate);
}

Normalized normalize01(const Waveform& w) {
  const double lo = w.samples().minCoeff();
  const double hi = w.samples().maxCoeff();
  if (!(hi > lo)) throw DegenerateInput("normalize01: constant waveform");
  const double scale = hi - lo;
  Eigen::VectorXd y = (w.samples().array() - lo) / scale;
  return {Waveform(std::move(y), w.sample_rate()), scale, lo};
}

Waveform denormalize(const Waveform& w, double scale, double offset) {
  return Waveform((w.samples().array() * scale + offset).matrix(), w.sample_rate());
}

SnrEstimate estimate_snr(const std::vector<Waveform>& copies) {
  if (copies.size() < 2) throw InvalidArgument("estimate_snr: need at least two copies");
  const Eigen::Index n = copies.front().size();
  const auto k = static_cast<Eigen::Index>(copies.size());
  Eigen::MatrixXd stack(n, k);
  for (Eigen::Index c = 0; c < k; ++c) {
    if (copies[c].size() != n) throw InvalidArgument("estimate_snr: copies differ in length");
    stack.col(c) = copies[c].samples();
  }
  const Eigen::VectorXd mean = running_mean(copies);
  const double signal = (mean.array() - mean.mean()).square().mean();
  const Eigen::VectorXd var =
      (stack.colwise() - mean).array().square().rowwise().sum() / static_cast<double>(k - 1);
  const double noise = var.mean();

  SnrEstimate out{0.0, signal, noise, false};
  if (noise <= 0.0) {
    out.infinite = true;
    out.snr_db = std::numeric_limits<double>::infinity();
  } else {
    out.snr_db = 10.0 * std::log10(signal / noise);
  }
  return out;
}

Spectrum psd(const Waveform& w, int segment_len, double overlap) {
  if (segment_len < 2) throw InvalidArgument("psd: segment length must be >= 2");
  if (segment_len > w.size()) throw InvalidArgument("psd: segment longer than signal");
  if (!(overlap >= 0.0 && overlap < 1.0)) throw InvalidArgument("psd: overlap must lie in [0, 1)");

  const int len = segment_len;
  const Eigen::Index step = std::max<Eigen::Index>(1, static_cast<Eigen::Index>(std::floor(len * (1.0 - overlap))));
  const Eigen::Index n_seg = (w.size() - len) / step + 1;
  const double fs = w.sample_rate();

  Eigen::VectorXd window(len);
  for (int i = 0; i < len; ++i) window[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / len);
  const double win_energy = window.squaredNorm();

  const int n_bins = len / 2 + 1;
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(n_bins);
  Eigen::FFT<double> fft;
  std::vector<double> seg(len);
  std::vector<std::complex<double>> spec;
  for (Eigen::Index s = 0; s < n_seg; ++s) {
    for (int i = 0; i < len; ++i) seg[i] = w.samples()[s * step + i] * window[i];
    fft.fwd(spec, seg);
    for (int k = 0; k < n_bins; ++k) acc[k] += std::norm(spec[k]);
  }
  acc /= static_cast<double>(n_seg) * fs * win_energy;
  for (int k = 1; k < n_bins; ++k) {
    if (!(len % 2 == 0 && k == len / 2)) acc[k] *= 2.0;
  }

  Spectrum out;
  out.freqs = Eigen::VectorXd::LinSpaced(n_bins, 0.0, fs * (n_bins - 1) / len);
  out.psd = std::move(acc);
  out.resolution_bw = fs / len;
  return out;
}

double bw_at_level(const Spectrum& s, double level_db) {
  if (s.psd.size() < 2 || s.psd.size() != s.freqs.size()) throw InvalidArgument("bw_at_level: malformed spectrum");
  Eigen::Index peak_idx = 0;
  const double peak = s.psd.maxCoeff(&peak_idx);
  if (!(peak > 0.0)) throw InvalidArgument("bw_at_level: spectrum has no peak");
  const double thr = peak * std::pow(10.0, -std::abs(level_db) / 10.0);

  Eigen::Index last = -1;
  for (Eigen::Index i = s.psd.size() - 1; i >= 0; --i) {
    if (s.psd[i] >= thr) {
      last = i;
      break;
    }
  }
  if (last == s.psd.size() - 1) throw OutOfRange("bw_at_level: level never crossed");
  const double p0 = s.psd[last], p1 = s.psd[last + 1];
  const double frac = (p0 - thr) / (p0 - p1);
  return s.freqs[last] + frac * (s.freqs[last + 1] - s.freqs[last]);
}

}  // namespace dmle2e::sigproc
