#include "dmle2e/eval/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace dmle2e::eval {

namespace {

std::uint64_t point_seed(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), 0x5EEDu};
  std::mt19937_64 rng(seq);
  return rng();
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

SweepRow make_row(const std::string& system, double r_s, double p_rf, double i_bias, const SerResult& s) {
  return {system, r_s, p_rf, i_bias, s.ser, s.ci_low, s.ci_high, s.n};
}

}  // namespace

const SweepRow& SweepResult::best(const std::string& system) const {
  const SweepRow* out = nullptr;
  for (const auto& r : rows) {
    if (r.system == system && (!out || r.ser < out->ser)) out = &r;
  }
  if (!out) throw InvalidArgument("sweep has no rows for system '" + system + "'");
  return *out;
}

SweepResult sweep_prf(const channel::ChannelConfig& cfg, const e2e::AeParams& ae, const SweepOptions& opts,
                      SweepArtifacts* artifacts) {
  using Range = channel::OperatingRange;
  if (opts.grid.empty()) throw InvalidArgument("sweep_prf: empty P_RF grid");
  for (double p : opts.grid) {
    if (p < Range::kPrfLowDbm || p > Range::kPrfHighDbm) throw InvalidArgument("sweep_prf: grid outside [-4, 2] dBm");
  }
  constexpr std::size_t kMinTrain = 50 * (baselines::kWindow + baselines::kSecondOrder + 1);
  if (opts.n_symbols / 4 < kMinTrain) {
    throw InvalidArgument("sweep_prf: need at least " + std::to_string(4 * kMinTrain) +
                          " scored symbols so the 20% training split can fit the VNLE");
  }
  if (opts.jobs < 1) throw InvalidArgument("sweep_prf: jobs must be >= 1");
  ae.validate();

  const double i_bias = ae.i_bias_ma();
  const double r_s = ae.symbol_rate;
  const std::size_t trim = kTrimSymbols;
  const std::size_t n_train = opts.n_symbols / 4;  // 20% / 80% split
  const std::size_t n_total = opts.n_symbols + n_train + 2 * trim;
  const double train_fraction = static_cast<double>(n_train) / static_cast<double>(n_train + opts.n_symbols);

  struct Point {
    SweepRow ffe, vnle;
    std::optional<baselines::RrcCapture> capture;
  };
  std::vector<Point> points(opts.grid.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t k = next++; k < points.size(); k = next++) {
      try {
        const double p_rf = opts.grid[k];
        baselines::RrcCapture cap = baselines::capture_rrc(cfg, r_s, i_bias, p_rf, n_total, point_seed(opts.seed, k));
        const auto f = baselines::evaluate_equalizer(baselines::EqualizerKind::kFfe, cap, train_fraction, opts.support);
        const auto v = baselines::evaluate_equalizer(baselines::EqualizerKind::kVnle, cap, train_fraction, opts.support);
        points[k].ffe = make_row("ffe", r_s, p_rf, i_bias, f.ser);
        points[k].vnle = make_row("vnle", r_s, p_rf, i_bias, v.ser);
        if (artifacts) points[k].capture = std::move(cap);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const int n_threads = std::min<int>(opts.jobs, static_cast<int>(points.size()));
  std::vector<std::thread> pool;
  for (int t = 1; t < n_threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);

  e2e::AeTest ae_test = e2e::test_ae(ae, cfg, opts.n_symbols + 2 * trim, point_seed(opts.seed, 1u << 20));

  SweepResult result;
  result.rows.push_back(make_row("ae", r_s, ae_test.tx.p_rf_dbm, ae_test.tx.i_bias_ma, ae_test.ser));
  for (const auto& p : points) {
    result.rows.push_back(p.ffe);
    result.rows.push_back(p.vnle);
  }
  std::sort(result.rows.begin(), result.rows.end(), [](const SweepRow& a, const SweepRow& b) {
    return a.system != b.system ? a.system < b.system : a.p_rf_dbm < b.p_rf_dbm;
  });

  if (artifacts) {
    const SweepRow& best = result.best("vnle");
    for (auto& p : points) {
      if (p.capture && p.capture->p_rf_dbm == best.p_rf_dbm) artifacts->rrc = std::move(p.capture);
    }
    artifacts->ae = std::move(ae_test);
  }
  return result;
}

std::string sweep_to_csv(const SweepResult& r) {
  std::ostringstream os;
  os << "system,r_s,p_rf_dbm,i_bias_ma,ser,ci_low,ci_high,n\n";
  for (const auto& row : r.rows) {
    os << row.system << ',' << fmt(row.r_s) << ',' << fmt(row.p_rf_dbm) << ',' << fmt(row.i_bias_ma) << ','
       << fmt(row.ser) << ',' << fmt(row.ci_low) << ',' << fmt(row.ci_high) << ',' << row.n_symbols << '\n';
  }
  return os.str();
}

std::string sweep_to_json(const SweepResult& r) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : r.rows) {
    rows.push_back({{"system", row.system},
                    {"r_s", row.r_s},
                    {"p_rf_dbm", row.p_rf_dbm},
                    {"i_bias_ma", row.i_bias_ma},
                    {"ser", row.ser},
                    {"ci_low", row.ci_low},
                    {"ci_high", row.ci_high},
                    {"n", row.n_symbols}});
  }
  return nlohmann::json{{"rows", rows}}.dump(2);
}

SweepResult sweep_from_csv(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line) || line != "system,r_s,p_rf_dbm,i_bias_ma,ser,ci_low,ci_high,n") {
    throw FormatError("sweep CSV header mismatch");
  }
  SweepResult r;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::vector<std::string> f;
    for (std::string cell; std::getline(ls, cell, ',');) f.push_back(cell);
    if (f.size() != 8) throw FormatError("sweep CSV row has " + std::to_string(f.size()) + " fields");
    try {
      r.rows.push_back({f[0], std::stod(f[1]), std::stod(f[2]), std::stod(f[3]), std::stod(f[4]), std::stod(f[5]),
                        std::stod(f[6]), static_cast<std::size_t>(std::stoull(f[7]))});
    } catch (const std::logic_error&) {
      throw FormatError("sweep CSV row is not numeric: " + line);
    }
  }
  return r;
}

}  // namespace dmle2e::eval
