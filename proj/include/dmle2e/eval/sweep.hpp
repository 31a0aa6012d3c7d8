#ifndef DMLE2E_EVAL_SWEEP_HPP
#define DMLE2E_EVAL_SWEEP_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dmle2e/baselines/pipeline.hpp"
#include "dmle2e/e2e/autoencoder.hpp"

namespace dmle2e::eval {

struct SweepRow {
  std::string system;  // "ae", "ffe" or "vnle"
  double r_s = 0.0;
  double p_rf_dbm = 0.0;
  double i_bias_ma = 0.0;
  double ser = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::size_t n_symbols = 0;
  bool operator==(const SweepRow&) const = default;
};

struct SweepResult {
  std::vector<SweepRow> rows;  // sorted by (system, p_rf)

  /// Row with the lowest SER for a system (ties: lowest P_RF).
  const SweepRow& best(const std::string& system) const;
};

struct SweepOptions {
  std::vector<double> grid{-4.0, -3.0, -2.0, -1.0, 0.0, 1.0, 2.0};
  std::size_t n_symbols = 100000;  // scored symbols per system and point
  baselines::SecondOrderSupport support = baselines::SecondOrderSupport::kDiagonal;
  std::uint64_t seed = 1;
  int jobs = 1;
};

/// Waveforms retained for the eye and spectrum exports.
struct SweepArtifacts {
  std::optional<e2e::AeTest> ae;
  std::optional<baselines::RrcCapture> rrc;  // capture at the best VNLE point
};

/// FFE and VNLE at every grid point at the AE-learned bias (the two equalizers share each
/// capture), plus the AE once at its learned operating point.
SweepResult sweep_prf(const channel::ChannelConfig& cfg, const e2e::AeParams& ae, const SweepOptions& opts,
                      SweepArtifacts* artifacts = nullptr);

/// CSV with header `system,r_s,p_rf_dbm,i_bias_ma,ser,ci_low,ci_high,n`.
std::string sweep_to_csv(const SweepResult& r);
std::string sweep_to_json(const SweepResult& r);
SweepResult sweep_from_csv(const std::string& text);

}  // namespace dmle2e::eval

#endif  // DMLE2E_EVAL_SWEEP_HPP
