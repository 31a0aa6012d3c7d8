#ifndef DMLE2E_EVAL_EXPORT_HPP
#define DMLE2E_EVAL_EXPORT_HPP

#include <filesystem>
#include <string>
#include <string_view>

#include "dmle2e/eval/metrics.hpp"

namespace dmle2e::eval {

/// Oversampling used for plotted eye diagrams.
inline constexpr int kEyeSps = 16;

/// Eye of a 2-SpS capture: band-limited interpolation to kEyeSps, traces anchored so the
/// symbol instants of the synchronized capture sit at the trace centre.
EyeData capture_eye(const sigproc::Waveform& capture_2sps, long sync_lag, int n_traces);

// Eye layout: "EYEMAT01" | u64 header length | JSON header {rows, cols, sps, sample_rate,
// span_symbols, ...extra} | float64 traces, row-major, little-endian.
std::string encode_eye(const EyeData& eye, const std::string& extra_json = "{}");
EyeData decode_eye(std::string_view bytes);

std::string spectrum_to_json(const SpectrumReport& s, double symbol_rate, double level_db = -10.0);

}  // namespace dmle2e::eval

#endif  // DMLE2E_EVAL_EXPORT_HPP
