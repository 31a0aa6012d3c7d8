#include "dmle2e/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

namespace dmle2e::eval {

SerResult wilson_interval(std::size_t errors, std::size_t n) {
  if (n == 0) throw InvalidArgument("SER needs at least one symbol");
  if (errors > n) throw InvalidArgument("error count exceeds symbol count");
  constexpr double z = 1.959963984540054;
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(errors) / nn;
  const double denom = 1.0 + z * z / nn;
  const double center = (p + z * z / (2.0 * nn)) / denom;
  const double half = z / denom * std::sqrt(p * (1.0 - p) / nn + z * z / (4.0 * nn * nn));
  SerResult r;
  r.ser = p;
  r.errors = errors;
  r.n = n;
  r.ci_low = std::max(0.0, std::min(p, center - half));
  r.ci_high = std::min(1.0, std::max(p, center + half));
  return r;
}

SerResult compute_ser(const sigproc::SymbolFrame& detected, const sigproc::SymbolFrame& truth) {
  if (detected.size() != truth.size()) throw InvalidArgument("compute_ser: frame lengths differ");
  std::size_t errors = 0;
  for (std::size_t k = 0; k < truth.size(); ++k) errors += detected.indices[k] != truth.indices[k];
  return wilson_interval(errors, truth.size());
}

sigproc::SymbolFrame trim_symbols(const sigproc::SymbolFrame& frame, std::size_t count) {
  if (frame.size() <= 2 * count) throw InvalidArgument("frame too short to trim transients");
  return sigproc::SymbolFrame(
      std::vector<int>(frame.indices.begin() + static_cast<long>(count), frame.indices.end() - static_cast<long>(count)),
      frame.symbol_rate);
}

EyeData eye_data(const sigproc::Waveform& w, int sps, int n_traces, Eigen::Index offset) {
  if (sps < 1 || n_traces < 1 || offset < 0) throw InvalidArgument("eye_data: invalid shape");
  const Eigen::Index span = 2 * sps;
  if (offset + static_cast<Eigen::Index>(n_traces) * span > w.size()) {
    throw InvalidArgument("eye_data: waveform too short for the requested traces");
  }
  EyeData eye;
  eye.sps = sps;
  eye.sample_rate = w.sample_rate();
  eye.traces.resize(n_traces, span);
  for (Eigen::Index i = 0; i < n_traces; ++i) eye.traces.row(i) = w.samples().segment(offset + i * span, span).transpose();
  return eye;
}

double eye_opening(const EyeData& eye, Eigen::Index column, int n_levels) {
  if (column < 0 || column >= eye.traces.cols() || n_levels < 2 || eye.traces.rows() < n_levels) {
    throw InvalidArgument("eye_opening: invalid column or level count");
  }
  std::vector<double> v(eye.traces.col(column).data(), eye.traces.col(column).data() + eye.traces.rows());
  std::sort(v.begin(), v.end());
  std::vector<double> gaps(v.size() - 1);
  for (std::size_t i = 0; i + 1 < v.size(); ++i) gaps[i] = v[i + 1] - v[i];
  std::partial_sort(gaps.begin(), gaps.begin() + (n_levels - 1), gaps.end(), std::greater<>());
  return gaps[static_cast<std::size_t>(n_levels - 2)];
}

SpectrumReport spectrum_report(const sigproc::Waveform& ae_wave, const sigproc::Waveform& rrc_wave, int segment_len,
                               double level_db) {
  if (ae_wave.sample_rate() != rrc_wave.sample_rate()) {
    throw InvalidArgument("spectrum_report: waveforms must share a sample rate");
  }
  SpectrumReport r;
  r.ae = sigproc::psd(ae_wave, segment_len);
  r.rrc = sigproc::psd(rrc_wave, segment_len);
  const auto bw_or_nyquist = [&](const sigproc::Spectrum& s, bool& capped) {
    try {
      return sigproc::bw_at_level(s, level_db);
    } catch (const OutOfRange&) {
      capped = true;
      return s.freqs[s.freqs.size() - 1];
    }
  };
  r.bw_ae = bw_or_nyquist(r.ae, r.ae_capped);
  r.bw_rrc = bw_or_nyquist(r.rrc, r.rrc_capped);
  r.compression = (r.bw_rrc - r.bw_ae) / r.bw_rrc;
  return r;
}

}  // namespace dmle2e::eval
