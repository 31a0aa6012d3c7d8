#include "dmle2e/surrogate/dataset.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>
#include <random>

#include <json.hpp>

#include "dmle2e/sigproc/analysis.hpp"
#include "dmle2e/sigproc/filters.hpp"
#include "dmle2e/sigproc/waveform_io.hpp"

namespace dmle2e::surrogate {

using sigproc::Waveform;
using Json = nlohmann::json;

namespace {

constexpr int kSps = 2;

Waveform unit_rms(const Waveform& w) {
  Eigen::VectorXd v = w.samples().array() - w.samples().mean();
  const double rms = std::sqrt(v.squaredNorm() / static_cast<double>(v.size()));
  if (!(rms > 0.0)) throw DegenerateInput("drive has no variation");
  return Waveform(v / rms, w.sample_rate());
}

std::uint64_t substream(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  std::mt19937_64 rng(seq);
  return rng();
}

std::string entry_name(std::size_t k, const char* suffix) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "entry_%04zu_%s.bin", k, suffix);
  return buf;
}

}  // namespace

Waveform random_drive(int n_symbols, double symbol_rate, std::uint64_t seed) {
  if (n_symbols < 1) throw InvalidArgument("random_drive: need at least one symbol");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> symbol(0, 3);
  std::uniform_real_distribution<double> rolloff(0.1, 1.0), eps(-0.2, 0.2);
  std::uniform_int_distribution<int> half_taps(4, 16);

  std::vector<double> levels(static_cast<std::size_t>(n_symbols));
  for (auto& v : levels) v = symbol(rng) / 3.0;
  const sigproc::FirFilter rrc = sigproc::design_rrc(2 * half_taps(rng) + 1, rolloff(rng), kSps);
  const double e1 = eps(rng), e2 = eps(rng);
  const auto perturb = sigproc::FirFilter::raw(Eigen::Vector3d(e1, 1.0, e2));

  Waveform w = sigproc::upsample_insert<double>(levels, kSps, symbol_rate);
  w = sigproc::fir_apply(sigproc::fir_apply(w, rrc), perturb);
  return unit_rms(w);
}

SurrogateDataset gen_dataset(const DatasetOptions& opts, const channel::ChannelConfig& cfg) {
  if (opts.n_sequences < 1) throw InvalidArgument("gen_dataset: n_sequences must be >= 1");
  if (opts.n_copies < 2) throw InvalidArgument("gen_dataset: need at least two copies to average");
  const long length = static_cast<long>(opts.symbols_per_seq) * kSps;
  if (length <= 2L * opts.edge_trim + 64) throw InvalidArgument("gen_dataset: sequences too short for the edge trim");

  // Reference capture at the calibration operating point. Its averaged copy fixes one
  // synchronization lag for the whole dataset: per-sequence lags would jump by a sample
  // wherever the bias-dependent laser delay crosses half a sample, which the model cannot
  // explain from its inputs. Its individual copies calibrate the noise.
  const double calib_i_bias = SurrogateDataset{}.calib_i_bias_ma, calib_p_rf = SurrogateDataset{}.calib_p_rf_dbm;
  const Waveform calib = random_drive(opts.symbols_per_seq, opts.symbol_rate, substream(opts.seed, 1ULL << 40));
  auto copies = channel::testbed_propagate(calib, calib_i_bias, calib_p_rf, opts.n_copies,
                                           substream(opts.seed, (1ULL << 40) + 1), cfg);
  const long lag = sigproc::synchronize(calib, sigproc::average_copies(copies), opts.max_lag);
  for (auto& c : copies) {
    c = Waveform(c.samples().segment(opts.edge_trim, c.size() - 2 * opts.edge_trim), c.sample_rate());
  }
  const sigproc::SnrEstimate snr = sigproc::estimate_snr(copies);

  using Range = channel::OperatingRange;
  struct Raw {
    Waveform input, capture;
    double i_bias, p_rf;
    long lag;
  };
  std::vector<Raw> raw;
  raw.reserve(static_cast<std::size_t>(opts.n_sequences));
  for (int k = 0; k < opts.n_sequences; ++k) {
    std::mt19937_64 rng(substream(opts.seed, static_cast<std::uint64_t>(k)));
    std::uniform_real_distribution<double> bias(Range::kBiasLowMa, Range::kBiasHighMa);
    std::uniform_real_distribution<double> prf(Range::kPrfLowDbm, Range::kPrfHighDbm);
    const double i_bias = bias(rng), p_rf = prf(rng);
    const Waveform drive = random_drive(opts.symbols_per_seq, opts.symbol_rate, rng());
    const auto copies = channel::testbed_propagate(drive, i_bias, p_rf, opts.n_copies, rng(), cfg);
    const Waveform avg = sigproc::average_copies(copies);
    const Waveform aligned = sigproc::apply_lag(avg, lag, drive.size());
    const Eigen::Index keep = drive.size() - 2 * opts.edge_trim;
    raw.push_back({Waveform(drive.samples().segment(opts.edge_trim, keep), drive.sample_rate()),
                   Waveform(aligned.samples().segment(opts.edge_trim, keep), drive.sample_rate()), i_bias, p_rf,
                   lag});
  }

  // One affine map for the whole dataset keeps absolute level differences between
  // operating points visible to the model.
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& r : raw) {
    lo = std::min(lo, r.capture.samples().minCoeff());
    hi = std::max(hi, r.capture.samples().maxCoeff());
  }
  if (!(hi > lo)) throw DegenerateInput("gen_dataset: captures carry no variation");
  const double scale = hi - lo;

  SurrogateDataset ds;
  ds.symbol_rate = opts.symbol_rate;
  ds.sps = kSps;
  ds.n_copies = opts.n_copies;
  ds.seed = opts.seed;
  for (auto& r : raw) {
    Waveform out = sigproc::Waveform((r.capture.samples().array() - lo) / scale, r.capture.sample_rate());
    ds.entries.push_back({std::move(r.input), std::move(out), r.i_bias, r.p_rf, scale, lo, r.lag});
  }

  ds.snr_db = snr.snr_db;
  ds.noise_variance = snr.noise_power / (scale * scale);
  return ds;
}

void save_dataset(const std::filesystem::path& dir, const SurrogateDataset& ds) {
  std::filesystem::create_directories(dir);
  Json meta;
  meta["format"] = "dmle2e-dataset";
  meta["version"] = 1;
  meta["symbol_rate"] = ds.symbol_rate;
  meta["sps"] = ds.sps;
  meta["n_copies"] = ds.n_copies;
  meta["seed"] = ds.seed;
  meta["calibration"] = {{"i_bias_ma", ds.calib_i_bias_ma},
                         {"p_rf_dbm", ds.calib_p_rf_dbm},
                         {"snr_db", ds.snr_db},
                         {"noise_variance", ds.noise_variance}};
  Json entries = Json::array();
  for (std::size_t k = 0; k < ds.entries.size(); ++k) {
    const DatasetEntry& e = ds.entries[k];
    entries.push_back({{"input", entry_name(k, "in")},
                       {"output", entry_name(k, "out")},
                       {"i_bias_ma", e.i_bias_ma},
                       {"p_rf_dbm", e.p_rf_dbm},
                       {"norm_scale", e.norm_scale},
                       {"norm_offset", e.norm_offset},
                       {"lag", e.lag}});
    sigproc::write_waveform_binary(dir / entry_name(k, "in"), e.input);
    sigproc::write_waveform_binary(dir / entry_name(k, "out"), e.output);
  }
  meta["entries"] = std::move(entries);
  sigproc::write_file(dir / "meta.json", meta.dump(2) + "\n");
}

SurrogateDataset load_dataset(const std::filesystem::path& dir) {
  if (!std::filesystem::exists(dir / "meta.json")) {
    throw FormatError("no dataset at " + dir.string() + " (run gen-dataset first)");
  }
  try {
    const Json meta = Json::parse(sigproc::read_file(dir / "meta.json"));
    if (meta.at("format") != "dmle2e-dataset" || meta.at("version") != 1) {
      throw FormatError("unsupported dataset format in " + dir.string());
    }
    SurrogateDataset ds;
    ds.symbol_rate = meta.at("symbol_rate");
    ds.sps = meta.at("sps");
    ds.n_copies = meta.at("n_copies");
    ds.seed = meta.at("seed");
    const Json& cal = meta.at("calibration");
    ds.calib_i_bias_ma = cal.at("i_bias_ma");
    ds.calib_p_rf_dbm = cal.at("p_rf_dbm");
    ds.snr_db = cal.at("snr_db");
    ds.noise_variance = cal.at("noise_variance");
    for (const Json& e : meta.at("entries")) {
      ds.entries.push_back({sigproc::read_waveform_binary(dir / e.at("input").get<std::string>()),
                            sigproc::read_waveform_binary(dir / e.at("output").get<std::string>()),
                            e.at("i_bias_ma"), e.at("p_rf_dbm"), e.at("norm_scale"), e.at("norm_offset"),
                            e.at("lag")});
      if (ds.entries.back().input.size() != ds.entries.back().output.size()) {
        throw FormatError("dataset entry input/output lengths differ");
      }
    }
    return ds;
  } catch (const Json::exception& e) {
    throw FormatError(std::string("malformed dataset metadata: ") + e.what());
  }
}

}  // namespace dmle2e::surrogate
