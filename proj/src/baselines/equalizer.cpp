#include "dmle2e/baselines/equalizer.hpp"

#include <cmath>
#include <limits>

#include <json.hpp>

namespace dmle2e::baselines {

namespace {

constexpr int kCenter = (kWindow - 1) / 2;  // window sample aligned with the symbol instant

int feature_count(EqualizerKind kind) { return kWindow + (kind == EqualizerKind::kVnle ? kSecondOrder : 0) + 1; }

}  // namespace

EqualizerKind parse_kind(const std::string& s) {
  if (s == "ffe") return EqualizerKind::kFfe;
  if (s == "vnle") return EqualizerKind::kVnle;
  throw InvalidArgument("unknown equalizer kind '" + s + "' (expected ffe or vnle)");
}

std::string to_string(EqualizerKind k) { return k == EqualizerKind::kFfe ? "ffe" : "vnle"; }

double symbol_level(int index) { return index / 3.0 - 0.5; }

Eigen::MatrixXd equalizer_features(const sigproc::Waveform& rx, std::size_t first_symbol, std::size_t n_symbols,
                                   EqualizerKind kind, SecondOrderSupport support) {
  const int nf = feature_count(kind);
  Eigen::MatrixXd a(static_cast<Eigen::Index>(n_symbols), nf);
  const Eigen::VectorXd& x = rx.samples();
  const Eigen::Index n = x.size();
  for (std::size_t r = 0; r < n_symbols; ++r) {
    const auto row = static_cast<Eigen::Index>(r);
    const Eigen::Index base = 2 * static_cast<Eigen::Index>(first_symbol + r) - kCenter;
    double win[kWindow];
    for (int j = 0; j < kWindow; ++j) {
      const Eigen::Index i = base + j;
      win[j] = (i >= 0 && i < n) ? x[i] : 0.0;
      a(row, j) = win[j];
    }
    if (kind == EqualizerKind::kVnle) {
      if (support == SecondOrderSupport::kDiagonal) {
        for (int j = 0; j < kSecondOrder; ++j) a(row, kWindow + j) = win[5 + j] * win[5 + j];
      } else {
        int col = kWindow;
        for (int i = kCenter - 1; i <= kCenter + 2; ++i)
          for (int j = i; j <= kCenter + 2; ++j) a(row, col++) = win[i] * win[j];
      }
    }
    a(row, nf - 1) = 1.0;
  }
  return a;
}

Eigen::VectorXd ridge_solve(const Eigen::MatrixXd& a, const Eigen::VectorXd& b) {
  const Eigen::Index nf = a.cols();
  const double lambda = 1e-6 * a.squaredNorm() / static_cast<double>(nf);
  Eigen::MatrixXd aug(a.rows() + nf, nf);
  aug.topRows(a.rows()) = a;
  aug.bottomRows(nf) = std::sqrt(lambda) * Eigen::MatrixXd::Identity(nf, nf);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(a.rows() + nf);
  rhs.head(a.rows()) = b;
  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(aug);
  if (qr.rank() < nf) throw NumericError("equalizer normal equations are singular even with regularization");
  Eigen::VectorXd x = qr.solve(rhs);
  if (!x.allFinite()) throw NumericError("equalizer least squares produced non-finite taps");
  return x;
}

EqualizerModel fit_equalizer(EqualizerKind kind, const sigproc::Waveform& rx, const sigproc::SymbolFrame& symbols,
                             std::size_t first, std::size_t count, SecondOrderSupport support) {
  if (first + count > symbols.size()) throw InvalidArgument("fit_equalizer: training range exceeds the frame");
  const int nf = feature_count(kind);
  if (count < 50u * static_cast<std::size_t>(nf)) {
    throw InvalidArgument("fit_equalizer: need at least 50 training symbols per coefficient");
  }
  const Eigen::MatrixXd a = equalizer_features(rx, first, count, kind, support);
  Eigen::VectorXd b(static_cast<Eigen::Index>(count));
  for (std::size_t k = 0; k < count; ++k) b[static_cast<Eigen::Index>(k)] = symbol_level(symbols.indices[first + k]);
  const Eigen::VectorXd x = ridge_solve(a, b);

  EqualizerModel m;
  m.kind = kind;
  m.support = support;
  m.linear_taps = x.head(kWindow);
  if (kind == EqualizerKind::kVnle) m.second_order_taps = x.segment(kWindow, kSecondOrder);
  m.bias_term = x[nf - 1];

  const Eigen::VectorXd y = a * x;
  std::array<double, 4> sum{}, sum2{};
  std::array<std::size_t, 4> n{};
  for (std::size_t k = 0; k < count; ++k) {
    const int c = symbols.indices[first + k];
    const double v = y[static_cast<Eigen::Index>(k)];
    sum[c] += v;
    ++n[c];
  }
  for (int c = 0; c < 4; ++c) {
    if (n[c] < 2) throw DegenerateInput("fit_equalizer: every class needs at least two training symbols");
    m.stats.mean[c] = sum[c] / static_cast<double>(n[c]);
  }
  for (std::size_t k = 0; k < count; ++k) {
    const int c = symbols.indices[first + k];
    const double d = y[static_cast<Eigen::Index>(k)] - m.stats.mean[c];
    sum2[c] += d * d;
  }
  for (int c = 0; c < 4; ++c) {
    m.stats.variance[c] = std::max(sum2[c] / static_cast<double>(n[c] - 1), 1e-300);
  }
  return m;
}

Eigen::VectorXd apply_equalizer(const EqualizerModel& m, const sigproc::Waveform& rx, std::size_t first,
                                std::size_t count) {
  const Eigen::MatrixXd a = equalizer_features(rx, first, count, m.kind, m.support);
  Eigen::VectorXd x(a.cols());
  x.head(kWindow) = m.linear_taps;
  if (m.kind == EqualizerKind::kVnle) x.segment(kWindow, kSecondOrder) = m.second_order_taps;
  x[a.cols() - 1] = m.bias_term;
  return a * x;
}

sigproc::SymbolFrame ml_detect(const Eigen::VectorXd& equalized, const ClassStats& stats, double symbol_rate) {
  for (double v : stats.variance) {
    if (!(v > 0.0)) throw InvalidArgument("ml_detect: class variances must be positive");
  }
  std::array<double, 4> log_norm{};
  for (int c = 0; c < 4; ++c) log_norm[c] = 0.5 * std::log(stats.variance[c]);
  std::vector<int> out(static_cast<std::size_t>(equalized.size()));
  for (Eigen::Index k = 0; k < equalized.size(); ++k) {
    int best = 0;
    double best_ll = -std::numeric_limits<double>::infinity();
    for (int c = 0; c < 4; ++c) {
      const double d = equalized[k] - stats.mean[c];
      const double ll = -d * d / (2.0 * stats.variance[c]) - log_norm[c];
      if (ll > best_ll) best_ll = ll, best = c;
    }
    out[static_cast<std::size_t>(k)] = best;
  }
  return sigproc::SymbolFrame(std::move(out), symbol_rate);
}

std::string equalizer_to_json(const EqualizerModel& m) {
  auto vec = [](const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  nlohmann::json j = {{"kind", to_string(m.kind)},
                      {"second_order_support", m.support == SecondOrderSupport::kDiagonal ? "diagonal" : "cross"},
                      {"linear_taps", vec(m.linear_taps)},
                      {"second_order_taps", vec(m.second_order_taps)},
                      {"bias_term", m.bias_term},
                      {"class_mean", m.stats.mean},
                      {"class_variance", m.stats.variance}};
  return j.dump(2);
}

}  // namespace dmle2e::baselines
