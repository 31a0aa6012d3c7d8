#include "dmle2e/eval/export.hpp"

#include <json.hpp>

#include "dmle2e/sigproc/resample.hpp"
#include "dmle2e/sigproc/waveform_io.hpp"

namespace dmle2e::eval {

using Json = nlohmann::json;

namespace {

constexpr std::string_view kMagic = "EYEMAT01";

std::vector<double> vec(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

EyeData capture_eye(const sigproc::Waveform& capture_2sps, long sync_lag, int n_traces) {
  constexpr int up = kEyeSps / 2;
  const sigproc::Waveform fine = sigproc::resample(capture_2sps, capture_2sps.sample_rate() * up);
  // Symbol k sits at 2-SpS sample 2k + lag; start each trace half a symbol early so that
  // a symbol instant is centred. Skip the edge-trimmed symbols.
  const Eigen::Index first_symbol = static_cast<Eigen::Index>(kTrimSymbols) + 1;
  const Eigen::Index offset = (2 * first_symbol + sync_lag) * up - kEyeSps;
  return eye_data(fine, kEyeSps, n_traces, offset);
}

std::string encode_eye(const EyeData& eye, const std::string& extra_json) {
  Json header = Json::parse(extra_json);
  if (!header.is_object()) throw InvalidArgument("encode_eye: extra header must be a JSON object");
  header["format"] = "dmle2e-eye";
  header["version"] = 1;
  header["rows"] = eye.traces.rows();
  header["cols"] = eye.traces.cols();
  header["sps"] = eye.sps;
  header["sample_rate"] = eye.sample_rate;
  header["span_symbols"] = 2;
  const std::string text = header.dump();
  std::string out(kMagic);
  sigproc::append_u64(out, text.size());
  out += text;
  for (Eigen::Index r = 0; r < eye.traces.rows(); ++r)
    for (Eigen::Index c = 0; c < eye.traces.cols(); ++c) sigproc::append_f64(out, eye.traces(r, c));
  return out;
}

EyeData decode_eye(std::string_view bytes) {
  if (bytes.size() < 16 || bytes.substr(0, 8) != kMagic) throw FormatError("not an EYEMAT01 eye file");
  const std::uint64_t len = sigproc::read_u64(bytes, 8);
  if (len > bytes.size() - 16) throw FormatError("eye header is truncated");
  EyeData eye;
  Eigen::Index rows = 0, cols = 0;
  try {
    const Json h = Json::parse(bytes.substr(16, len));
    rows = h.at("rows");
    cols = h.at("cols");
    eye.sps = h.at("sps");
    eye.sample_rate = h.at("sample_rate");
  } catch (const Json::exception& e) {
    throw FormatError(std::string("malformed eye header: ") + e.what());
  }
  if (rows < 0 || cols < 0 || bytes.size() != 16 + len + 8 * static_cast<std::size_t>(rows * cols)) {
    throw FormatError("eye matrix is truncated or oversized");
  }
  eye.traces.resize(rows, cols);
  std::size_t offset = 16 + len;
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c, offset += 8) eye.traces(r, c) = sigproc::read_f64(bytes, offset);
  return eye;
}

std::string spectrum_to_json(const SpectrumReport& s, double symbol_rate, double level_db) {
  const Json j = {{"format", "dmle2e-spectrum"},
                  {"version", 1},
                  {"symbol_rate", symbol_rate},
                  {"level_db", level_db},
                  {"freqs_hz", vec(s.ae.freqs)},
                  {"psd_ae_db", vec(s.ae.psd_db())},
                  {"psd_rrc_db", vec(s.rrc.psd_db())},
                  {"bw_ae_hz", s.bw_ae},
                  {"bw_rrc_hz", s.bw_rrc},
                  {"bw_ae_capped", s.ae_capped},
                  {"bw_rrc_capped", s.rrc_capped},
                  {"compression", s.compression},
                  {"compression_pct", 100.0 * s.compression}};
  return j.dump(2);
}

}  // namespace dmle2e::eval
