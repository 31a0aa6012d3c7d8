#include "dmle2e/e2e/params_io.hpp"

#include <json.hpp>

#include "dmle2e/sigproc/waveform_io.hpp"

namespace dmle2e::e2e {

using Json = nlohmann::json;
using Eigen::VectorXd;

namespace {

constexpr std::string_view kMagic = "DMLAEP01";

std::vector<double> vec(const VectorXd& v) { return {v.data(), v.data() + v.size()}; }

VectorXd from(const Json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Json fixed_settings(const AeParams& p) {
  return {{"rx_phase", p.rx_phase}, {"rx_scale", p.rx_scale}, {"rx_offset", p.rx_offset},
          {"symbol_rate", p.symbol_rate}, {"awg_bw", p.awg_bw}};
}

void read_fixed(const Json& j, AeParams& p) {
  p.rx_phase = j.at("rx_phase");
  p.rx_scale = j.at("rx_scale");
  p.rx_offset = j.at("rx_offset");
  p.symbol_rate = j.at("symbol_rate");
  p.awg_bw = j.at("awg_bw");
}

std::vector<VectorXd*> blocks(AeParams& p) {
  return {&p.gcs_levels, &p.ps_taps, &p.dpd_taps, &p.rx_ffe_taps, &p.readout_w, &p.readout_b};
}

}  // namespace

std::string params_to_json(const AeParams& p) {
  p.validate();
  Json j = {{"format", "dmle2e-ae-params"},
            {"version", 1},
            {"gcs_levels", vec(p.gcs_levels)},
            {"ps_taps", vec(p.ps_taps)},
            {"dpd_taps", vec(p.dpd_taps)},
            {"theta_bias", p.theta_bias},
            {"theta_prf", p.theta_prf},
            {"i_bias_ma", p.i_bias_ma()},
            {"p_rf_dbm", p.p_rf_dbm()},
            {"rx_ffe_taps", vec(p.rx_ffe_taps)},
            {"readout_w", vec(p.readout_w)},
            {"readout_b", vec(p.readout_b)},
            {"fixed", fixed_settings(p)}};
  return j.dump(2);
}

AeParams params_from_json(std::string_view text) {
  AeParams p;
  try {
    const Json j = Json::parse(text);
    if (j.at("format") != "dmle2e-ae-params" || j.at("version") != 1) throw FormatError("unsupported AE params version");
    p.gcs_levels = from(j.at("gcs_levels"));
    p.ps_taps = from(j.at("ps_taps"));
    p.dpd_taps = from(j.at("dpd_taps"));
    p.theta_bias = j.at("theta_bias");
    p.theta_prf = j.at("theta_prf");
    p.rx_ffe_taps = from(j.at("rx_ffe_taps"));
    p.readout_w = from(j.at("readout_w"));
    p.readout_b = from(j.at("readout_b"));
    read_fixed(j.at("fixed"), p);
  } catch (const Json::exception& e) {
    throw FormatError(std::string("malformed AE params JSON: ") + e.what());
  }
  try {
    p.validate();
  } catch (const InvalidArgument& e) {
    throw FormatError(std::string("invalid AE params: ") + e.what());
  }
  return p;
}

std::string save_params(const AeParams& p) {
  p.validate();
  Json header = {{"format", "dmle2e-ae-params"},
                 {"version", 1},
                 {"sizes", {p.gcs_levels.size(), p.ps_taps.size(), p.dpd_taps.size(), p.rx_ffe_taps.size(),
                            p.readout_w.size(), p.readout_b.size()}},
                 {"order", "gcs_levels ps_taps dpd_taps rx_ffe_taps readout_w readout_b theta_bias theta_prf"},
                 {"fixed", fixed_settings(p)}};
  const std::string text = header.dump();
  std::string out(kMagic);
  sigproc::append_u64(out, text.size());
  out += text;
  AeParams copy = p;
  for (const VectorXd* b : blocks(copy))
    for (Eigen::Index i = 0; i < b->size(); ++i) sigproc::append_f64(out, (*b)[i]);
  sigproc::append_f64(out, p.theta_bias);
  sigproc::append_f64(out, p.theta_prf);
  return out;
}

AeParams load_params(std::string_view bytes) {
  if (bytes.size() < 16 || bytes.substr(0, 8) != kMagic) throw FormatError("not a DMLAEP01 parameter file");
  const std::uint64_t len = sigproc::read_u64(bytes, 8);
  if (len > bytes.size() - 16) throw FormatError("AE parameter header is truncated");
  AeParams p;
  std::vector<std::size_t> sizes;
  try {
    const Json h = Json::parse(bytes.substr(16, len));
    if (h.at("format") != "dmle2e-ae-params" || h.at("version") != 1) throw FormatError("unsupported AE params version");
    sizes = h.at("sizes").get<std::vector<std::size_t>>();
    read_fixed(h.at("fixed"), p);
  } catch (const Json::exception& e) {
    throw FormatError(std::string("malformed AE params header: ") + e.what());
  }
  if (sizes.size() != 6) throw FormatError("AE params header lists the wrong number of blocks");
  std::size_t total = 2;
  for (std::size_t s : sizes) {
    if (s > 1 << 20) throw FormatError("AE params block size out of range");
    total += s;
  }
  if (bytes.size() != 16 + len + 8 * total) throw FormatError("AE params blob is truncated or oversized");
  std::size_t offset = 16 + len;
  auto bl = blocks(p);
  for (std::size_t k = 0; k < bl.size(); ++k) {
    bl[k]->resize(static_cast<Eigen::Index>(sizes[k]));
    for (Eigen::Index i = 0; i < bl[k]->size(); ++i, offset += 8) (*bl[k])[i] = sigproc::read_f64(bytes, offset);
  }
  p.theta_bias = sigproc::read_f64(bytes, offset);
  p.theta_prf = sigproc::read_f64(bytes, offset + 8);
  try {
    p.validate();
  } catch (const InvalidArgument& e) {
    throw FormatError(std::string("invalid AE params: ") + e.what());
  }
  return p;
}

void write_params(const std::filesystem::path& path, const AeParams& p) { sigproc::write_file(path, save_params(p)); }

AeParams read_params(const std::filesystem::path& path) { return load_params(sigproc::read_file(path)); }

std::string report_to_json(const TrainReport& r) {
  Json j = {{"loss", r.loss},
            {"surrogate_ser", r.surrogate_ser},
            {"i_bias_ma", r.i_bias_ma},
            {"p_rf_dbm", r.p_rf_dbm},
            {"noise_variance", r.noise_variance},
            {"steps", r.steps},
            {"wall_seconds", r.wall_seconds},
            {"seed", r.seed}};
  return j.dump(2);
}

}  // namespace dmle2e::e2e
