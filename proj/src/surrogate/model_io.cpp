#include "dmle2e/surrogate/model_io.hpp"

#include <json.hpp>

#include "dmle2e/sigproc/waveform_io.hpp"

namespace dmle2e::surrogate {

using Json = nlohmann::json;

namespace {

constexpr std::string_view kMagic = "DMLSUR01";

Eigen::MatrixXd take(std::string_view bytes, std::size_t& offset, Eigen::Index rows, Eigen::Index cols) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i, offset += 8) m.data()[i] = sigproc::read_f64(bytes, offset);
  return m;
}

}  // namespace

std::string save_model(const SurrogateModel& m) {
  m.validate();
  const Json header = {{"format", "dmle2e-surrogate"},
                       {"version", 1},
                       {"hidden_size", m.hidden_size},
                       {"features", kFeatureCount},
                       {"gate_order", "ifgo"},
                       {"bias_range_ma", {m.bias_low_ma, m.bias_high_ma}},
                       {"prf_range_dbm", {m.prf_low_dbm, m.prf_high_dbm}},
                       {"output_scale", m.output_scale},
                       {"output_offset", m.output_offset},
                       {"delay_samples", m.delay_samples},
                       {"symbol_rate", m.symbol_rate},
                       {"sps", m.sps},
                       {"snr_db", m.snr_db},
                       {"noise_variance", m.noise_variance}};
  const std::string text = header.dump();
  std::string out(kMagic);
  sigproc::append_u64(out, text.size());
  out += text;
  for (const Eigen::MatrixXd* w : {&m.w_input, &m.w_hidden, &m.bias, &m.w_out, &m.b_out}) {
    for (Eigen::Index i = 0; i < w->size(); ++i) sigproc::append_f64(out, w->data()[i]);
  }
  return out;
}

SurrogateModel load_model(std::string_view bytes) {
  if (bytes.size() < 16 || bytes.substr(0, 8) != kMagic) throw FormatError("not a DMLSUR01 surrogate model");
  const std::uint64_t len = sigproc::read_u64(bytes, 8);
  if (len > bytes.size() - 16) throw FormatError("surrogate model header is truncated");
  SurrogateModel m;
  try {
    const Json h = Json::parse(bytes.substr(16, len));
    if (h.at("format") != "dmle2e-surrogate" || h.at("version") != 1) {
      throw FormatError("unsupported surrogate model version");
    }
    if (h.at("features") != kFeatureCount) throw FormatError("surrogate feature layout mismatch");
    m.hidden_size = h.at("hidden_size");
    m.bias_low_ma = h.at("bias_range_ma").at(0);
    m.bias_high_ma = h.at("bias_range_ma").at(1);
    m.prf_low_dbm = h.at("prf_range_dbm").at(0);
    m.prf_high_dbm = h.at("prf_range_dbm").at(1);
    m.output_scale = h.at("output_scale");
    m.output_offset = h.at("output_offset");
    m.delay_samples = h.at("delay_samples");
    m.symbol_rate = h.at("symbol_rate");
    m.sps = h.at("sps");
    m.snr_db = h.at("snr_db");
    m.noise_variance = h.at("noise_variance");
  } catch (const Json::exception& e) {
    throw FormatError(std::string("malformed surrogate header: ") + e.what());
  }
  if (m.hidden_size < 1 || m.hidden_size > 1 << 16) throw FormatError("surrogate hidden size out of range");
  const Eigen::Index h = m.hidden_size;
  const std::size_t expected = 16 + len + 8 * static_cast<std::size_t>(4 * h * kFeatureCount + 4 * h * h + 4 * h + h + 1);
  if (bytes.size() != expected) throw FormatError("surrogate weight blob is truncated or oversized");
  std::size_t offset = 16 + len;
  m.w_input = take(bytes, offset, 4 * h, kFeatureCount);
  m.w_hidden = take(bytes, offset, 4 * h, h);
  m.bias = take(bytes, offset, 4 * h, 1);
  m.w_out = take(bytes, offset, 1, h);
  m.b_out = take(bytes, offset, 1, 1);
  try {
    m.validate();
  } catch (const InvalidArgument& e) {
    throw FormatError(std::string("invalid surrogate weights: ") + e.what());
  }
  return m;
}

void write_model(const std::filesystem::path& path, const SurrogateModel& m) { sigproc::write_file(path, save_model(m)); }

SurrogateModel read_model(const std::filesystem::path& path) { return load_model(sigproc::read_file(path)); }

}  // namespace dmle2e::surrogate
