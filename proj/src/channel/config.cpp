#include <json.hpp>

#include "dmle2e/channel/testbed.hpp"
#include "dmle2e/sigproc/waveform_io.hpp"

namespace dmle2e::channel {

using nlohmann::json;

namespace {

template <typename T>
T required(const json& obj, const char* section, const char* key) {
  if (!obj.contains(key)) {
    throw InvalidArgument(std::string("channel config: missing ") + section + "." + key);
  }
  return obj.at(key).get<T>();
}

}  // namespace

ChannelConfig parse_channel_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw InvalidArgument(std::string("channel config: ") + e.what());
  }
  if (!j.contains("laser") || !j.contains("chain")) throw InvalidArgument("channel config needs 'laser' and 'chain'");
  const json& l = j.at("laser");
  const json& c = j.at("chain");

  ChannelConfig cfg;
  cfg.laser.active_volume = required<double>(l, "laser", "active_volume_cm3");
  cfg.laser.confinement = required<double>(l, "laser", "confinement");
  cfg.laser.gain_coeff = required<double>(l, "laser", "gain_coeff_cm3_per_s");
  cfg.laser.transparency_density = required<double>(l, "laser", "transparency_density_cm3");
  cfg.laser.gain_compression = required<double>(l, "laser", "gain_compression_cm3");
  cfg.laser.carrier_lifetime = required<double>(l, "laser", "carrier_lifetime_s");
  cfg.laser.photon_lifetime = required<double>(l, "laser", "photon_lifetime_s");
  cfg.laser.spont_fraction = required<double>(l, "laser", "spont_fraction");
  cfg.laser.external_efficiency = required<double>(l, "laser", "external_efficiency_w_per_a");
  cfg.laser.electron_charge = required<double>(l, "laser", "electron_charge_c");

  cfg.chain.awg_rate = required<double>(c, "chain", "awg_rate");
  cfg.chain.awg_bw = required<double>(c, "chain", "awg_bw");
  cfg.chain.awg_taps = required<int>(c, "chain", "awg_taps");
  cfg.chain.awg_order = required<int>(c, "chain", "awg_order");
  cfg.chain.amp_gain_db = required<double>(c, "chain", "amp_gain_db");
  cfg.chain.amp_bw = required<double>(c, "chain", "amp_bw");
  cfg.chain.pd_bw = required<double>(c, "chain", "pd_bw");
  cfg.chain.pd_responsivity = required<double>(c, "chain", "pd_responsivity");
  cfg.chain.dso_bw = required<double>(c, "chain", "dso_bw");
  cfg.chain.dso_rate = required<double>(c, "chain", "dso_rate");
  cfg.chain.analog_rate = required<double>(c, "chain", "analog_rate");
  cfg.chain.analog_taps = required<int>(c, "chain", "analog_taps");
  cfg.chain.load_ohms = required<double>(c, "chain", "load_ohms");
  cfg.chain.mod_transconductance = required<double>(c, "chain", "mod_transconductance_a_per_v");
  cfg.chain.noise_sigma = required<double>(c, "chain", "noise_sigma");
  cfg.chain.rk4_dt = required<double>(c, "chain", "rk4_dt");
  cfg.chain.filters_enabled = c.value("filters_enabled", true);

  cfg.laser.validate();
  cfg.chain.validate();
  return cfg;
}

ChannelConfig load_channel_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = sigproc::read_file(path);
  } catch (const FormatError&) {
    throw InvalidArgument("channel config not found: " + path.string());
  }
  return parse_channel_config(text);
}

std::string dump_channel_config(const ChannelConfig& cfg) {
  const LaserParams& l = cfg.laser;
  const AnalogChainParams& c = cfg.chain;
  json j;
  j["laser"] = {{"active_volume_cm3", l.active_volume},
                {"confinement", l.confinement},
                {"gain_coeff_cm3_per_s", l.gain_coeff},
                {"transparency_density_cm3", l.transparency_density},
                {"gain_compression_cm3", l.gain_compression},
                {"carrier_lifetime_s", l.carrier_lifetime},
                {"photon_lifetime_s", l.photon_lifetime},
                {"spont_fraction", l.spont_fraction},
                {"external_efficiency_w_per_a", l.external_efficiency},
                {"electron_charge_c", l.electron_charge}};
  j["chain"] = {{"awg_rate", c.awg_rate},
                {"awg_bw", c.awg_bw},
                {"awg_taps", c.awg_taps},
                {"awg_order", c.awg_order},
                {"amp_gain_db", c.amp_gain_db},
                {"amp_bw", c.amp_bw},
                {"pd_bw", c.pd_bw},
                {"pd_responsivity", c.pd_responsivity},
                {"dso_bw", c.dso_bw},
                {"dso_rate", c.dso_rate},
                {"analog_rate", c.analog_rate},
                {"analog_taps", c.analog_taps},
                {"load_ohms", c.load_ohms},
                {"mod_transconductance_a_per_v", c.mod_transconductance},
                {"noise_sigma", c.noise_sigma},
                {"rk4_dt", c.rk4_dt},
                {"filters_enabled", c.filters_enabled}};
  return j.dump(2);
}

}  // namespace dmle2e::channel
