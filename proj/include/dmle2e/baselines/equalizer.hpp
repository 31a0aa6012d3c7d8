#ifndef DMLE2E_BASELINES_EQUALIZER_HPP
#define DMLE2E_BASELINES_EQUALIZER_HPP

#include <array>
#include <string>

#include "dmle2e/sigproc/types.hpp"

namespace dmle2e::baselines {

enum class EqualizerKind { kFfe, kVnle };
/// Support of the 10 second-order VNLE terms.
enum class SecondOrderSupport {
  kDiagonal,    // squares of the 10 central window samples
  kCrossTerms,  // all products x_i x_j, i <= j, of the 4 central samples
};

inline constexpr int kWindow = 20;       // 2 SpS samples per symbol decision
inline constexpr int kSecondOrder = 10;  // VNLE second-order terms

EqualizerKind parse_kind(const std::string& s);
std::string to_string(EqualizerKind k);

/// Per-class Gaussian statistics for ML detection.
struct ClassStats {
  std::array<double, 4> mean{};
  std::array<double, 4> variance{};
};

struct EqualizerModel {
  EqualizerKind kind = EqualizerKind::kFfe;
  SecondOrderSupport support = SecondOrderSupport::kDiagonal;
  Eigen::VectorXd linear_taps;        // kWindow
  Eigen::VectorXd second_order_taps;  // kSecondOrder for VNLE, empty for FFE
  double bias_term = 0.0;
  ClassStats stats;
};

/// Target level of each symbol: equispaced {0, 1/3, 2/3, 1}, mean removed.
double symbol_level(int index);

/// Regressor matrix, one row per symbol k: window rx[2k - 9 .. 2k + 10] (zero outside),
/// then second-order terms (VNLE), then a constant 1. `rx` must already be aligned.
Eigen::MatrixXd equalizer_features(const sigproc::Waveform& rx, std::size_t first_symbol, std::size_t n_symbols,
                                   EqualizerKind kind, SecondOrderSupport support);

/// Ridge least squares with lambda = 1e-6 * trace(A^T A) / n_features, solved by
/// column-pivoted QR on the augmented system.
Eigen::VectorXd ridge_solve(const Eigen::MatrixXd& a, const Eigen::VectorXd& b);

/// Fits taps on symbols [first, first + count) of the aligned capture, then class statistics
/// of the equalized training output.
EqualizerModel fit_equalizer(EqualizerKind kind, const sigproc::Waveform& rx, const sigproc::SymbolFrame& symbols,
                             std::size_t first, std::size_t count,
                             SecondOrderSupport support = SecondOrderSupport::kDiagonal);

/// Equalized symbol-rate outputs for symbols [first, first + count).
Eigen::VectorXd apply_equalizer(const EqualizerModel& m, const sigproc::Waveform& rx, std::size_t first,
                                std::size_t count);

/// Gaussian ML decision per sample; ties go to the lowest class index.
sigproc::SymbolFrame ml_detect(const Eigen::VectorXd& equalized, const ClassStats& stats, double symbol_rate);

std::string equalizer_to_json(const EqualizerModel& m);

}  // namespace dmle2e::baselines

#endif  // DMLE2E_BASELINES_EQUALIZER_HPP
