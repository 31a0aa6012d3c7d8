#ifndef DMLE2E_SURROGATE_DATASET_HPP
#define DMLE2E_SURROGATE_DATASET_HPP

#include <cstdint>
#include <filesystem>
#include <vector>

#include "dmle2e/channel/testbed.hpp"
#include "dmle2e/sigproc/types.hpp"

namespace dmle2e::surrogate {

struct DatasetEntry {
  sigproc::Waveform input;   // 2 SpS drive, zero mean and unit RMS
  sigproc::Waveform output;  // averaged capture, synchronized and normalized into [0, 1]
  double i_bias_ma = 0.0;
  double p_rf_dbm = 0.0;
  double norm_scale = 1.0;  // capture = output * norm_scale + norm_offset
  double norm_offset = 0.0;
  long lag = 0;  // synchronization lag, shared by all entries (found at the calibration point)

  bool operator==(const DatasetEntry&) const = default;
};

struct SurrogateDataset {
  std::vector<DatasetEntry> entries;
  double symbol_rate = 0.0;
  int sps = 2;
  int n_copies = 25;
  std::uint64_t seed = 0;
  // Noise calibration from repeated captures at the reference operating point.
  double calib_i_bias_ma = 75.0;
  double calib_p_rf_dbm = 2.0;
  double snr_db = 0.0;
  double noise_variance = 0.0;  // per-sample, in normalized output units

  bool operator==(const SurrogateDataset&) const = default;
};

struct DatasetOptions {
  int n_sequences = 64;
  int symbols_per_seq = 2048;
  double symbol_rate = 20e9;
  int n_copies = 25;
  std::uint64_t seed = 1;
  /// Samples dropped at each end after synchronization (filter and resampler transients).
  int edge_trim = 32;
  long max_lag = 64;
};

/// Randomized 4PAM drive: uniform symbols, random RRC (rolloff U[0.1, 1], odd taps 9..33)
/// followed by a 3-tap perturbation [e1, 1, e2], e ~ U[-0.2, 0.2]; zero mean, unit RMS.
sigproc::Waveform random_drive(int n_symbols, double symbol_rate, std::uint64_t seed);

/// Propagates random drives through the testbed at random operating points, averages
/// the copies, aligns them with one lag measured at the calibration point and normalizes all
/// outputs with one dataset-wide min/max.
SurrogateDataset gen_dataset(const DatasetOptions& opts, const channel::ChannelConfig& cfg);

void save_dataset(const std::filesystem::path& dir, const SurrogateDataset& ds);
SurrogateDataset load_dataset(const std::filesystem::path& dir);

}  // namespace dmle2e::surrogate

#endif  // DMLE2E_SURROGATE_DATASET_HPP
