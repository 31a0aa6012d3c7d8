#include "dmle2e/surrogate/lstm.hpp"

#include <memory>
#include <random>

namespace dmle2e::surrogate {

using Eigen::MatrixXd;

namespace {

struct Trace {
  std::vector<MatrixXd> gates;   // activated (i, f, g, o), 4H x B
  std::vector<MatrixXd> cells;   // c_t, H x B
  std::vector<MatrixXd> hidden;  // h_t, H x B
};

struct Weights {
  const MatrixXd& w_input;
  const MatrixXd& w_hidden;
  const MatrixXd& bias;
  const MatrixXd& w_out;
  const MatrixXd& b_out;
};

MatrixXd broadcast_cond(const MatrixXd& cond, Eigen::Index batch) {
  if (cond.rows() != 2 || (cond.cols() != 1 && cond.cols() != batch)) {
    throw InvalidArgument("LSTM conditioning must be 2 x 1 or 2 x batch");
  }
  return cond.cols() == batch ? cond : cond.replicate(1, batch);
}

MatrixXd run(const Weights& w, const MatrixXd& drive, const MatrixXd& cond, Trace* trace) {
  const Eigen::Index hs = w.w_hidden.cols();
  const Eigen::Index steps = drive.rows(), batch = drive.cols();
  const MatrixXd c_full = broadcast_cond(cond, batch);
  // Time-invariant part of the pre-activation: conditioning and bias.
  const MatrixXd z_const = (w.w_input.rightCols(2) * c_full).colwise() + w.bias.col(0);
  const Eigen::VectorXd w_drive = w.w_input.col(0);

  MatrixXd h = MatrixXd::Zero(hs, batch), c = MatrixXd::Zero(hs, batch);
  MatrixXd z(4 * hs, batch);
  MatrixXd y(steps, batch);
  if (trace) {
    trace->gates.resize(steps);
    trace->cells.resize(steps);
    trace->hidden.resize(steps);
  }
  for (Eigen::Index t = 0; t < steps; ++t) {
    z.noalias() = w.w_hidden * h;
    z += z_const;
    z.noalias() += w_drive * drive.row(t);
    auto zi = z.topRows(hs).array();
    auto zf = z.middleRows(hs, hs).array();
    auto zg = z.middleRows(2 * hs, hs).array();
    auto zo = z.bottomRows(hs).array();
    zi = 1.0 / (1.0 + (-zi).exp());
    zf = 1.0 / (1.0 + (-zf).exp());
    zg = zg.tanh();
    zo = 1.0 / (1.0 + (-zo).exp());
    c.array() = zf * c.array() + zi * zg;
    h.array() = zo * c.array().tanh();
    y.row(t).noalias() = w.w_out * h;
    if (trace) {
      trace->gates[t] = z;
      trace->cells[t] = c;
      trace->hidden[t] = h;
    }
  }
  y.array() += w.b_out(0, 0);
  return y;
}

}  // namespace

SurrogateModel SurrogateModel::init(int hidden_size, std::uint64_t seed) {
  if (hidden_size < 1) throw InvalidArgument("hidden_size must be >= 1");
  std::mt19937_64 rng(seed);
  const double bound = 1.0 / std::sqrt(static_cast<double>(hidden_size));
  std::uniform_real_distribution<double> u(-bound, bound);
  auto fill = [&](Eigen::Index r, Eigen::Index c) {
    MatrixXd m(r, c);
    for (Eigen::Index j = 0; j < c; ++j)
      for (Eigen::Index i = 0; i < r; ++i) m(i, j) = u(rng);
    return m;
  };
  SurrogateModel m;
  m.hidden_size = hidden_size;
  m.w_input = fill(4 * hidden_size, kFeatureCount);
  m.w_hidden = fill(4 * hidden_size, hidden_size);
  m.bias = fill(4 * hidden_size, 1);
  m.bias.middleRows(hidden_size, hidden_size).array() += 1.0;  // forget-gate bias
  m.w_out = fill(1, hidden_size);
  m.b_out = MatrixXd::Zero(1, 1);
  return m;
}

void SurrogateModel::validate() const {
  const Eigen::Index h = hidden_size;
  if (h < 1 || w_input.rows() != 4 * h || w_input.cols() != kFeatureCount || w_hidden.rows() != 4 * h ||
      w_hidden.cols() != h || bias.rows() != 4 * h || bias.cols() != 1 || w_out.rows() != 1 || w_out.cols() != h ||
      b_out.rows() != 1 || b_out.cols() != 1) {
    throw InvalidArgument("surrogate weights have inconsistent shapes");
  }
  if (!w_input.allFinite() || !w_hidden.allFinite() || !bias.allFinite() || !w_out.allFinite() || !b_out.allFinite()) {
    throw InvalidArgument("surrogate weights must be finite");
  }
}

Eigen::Vector2d SurrogateModel::conditioning(double i_bias_ma, double p_rf_dbm) const {
  return {(i_bias_ma - bias_low_ma) / (bias_high_ma - bias_low_ma), (p_rf_dbm - prf_low_dbm) / (prf_high_dbm - prf_low_dbm)};
}

MatrixXd lstm_run(const SurrogateModel& m, const MatrixXd& drive, const MatrixXd& cond) {
  return run({m.w_input, m.w_hidden, m.bias, m.w_out, m.b_out}, drive, cond, nullptr);
}

sigproc::Waveform lstm_forward(const SurrogateModel& m, const sigproc::Waveform& input, double i_bias_ma,
                               double p_rf_dbm) {
  const MatrixXd y = lstm_run(m, input.samples(), m.conditioning(i_bias_ma, p_rf_dbm));
  return sigproc::Waveform(y.col(0), input.sample_rate());
}

LstmVars lstm_constants(grad::Tape<double>& tape, const SurrogateModel& m) {
  return {tape.constant(m.w_input), tape.constant(m.w_hidden), tape.constant(m.bias), tape.constant(m.w_out),
          tape.constant(m.b_out)};
}

LstmVars lstm_parameters(grad::Tape<double>& tape, const SurrogateModel& m) {
  return {tape.parameter("lstm.w_input", m.w_input), tape.parameter("lstm.w_hidden", m.w_hidden),
          tape.parameter("lstm.bias", m.bias), tape.parameter("lstm.w_out", m.w_out),
          tape.parameter("lstm.b_out", m.b_out)};
}

grad::Var<double> lstm_sequence(const LstmVars& w, const grad::Var<double>& drive, const grad::Var<double>& cond) {
  grad::Tape<double>& tape = *drive.tape();
  auto trace = std::make_shared<Trace>();
  const Weights weights{w.w_input.value(), w.w_hidden.value(), w.bias.value(), w.w_out.value(), w.b_out.value()};
  const bool needs_trace = tape.requires_grad(drive.id()) || tape.requires_grad(cond.id()) ||
                           tape.requires_grad(w.w_input.id()) || tape.requires_grad(w.w_hidden.id()) ||
                           tape.requires_grad(w.bias.id()) || tape.requires_grad(w.w_out.id()) ||
                           tape.requires_grad(w.b_out.id());
  MatrixXd y = run(weights, drive.value(), cond.value(), needs_trace ? trace.get() : nullptr);

  // parents: 0 w_input, 1 w_hidden, 2 bias, 3 w_out, 4 b_out, 5 drive, 6 cond
  return tape.record(
      std::move(y), {w.w_input, w.w_hidden, w.bias, w.w_out, w.b_out, drive, cond}, "lstm",
      [trace](grad::Tape<double>& tp, std::size_t s) {
        const MatrixXd& wi = tp.value(tp.parent(s, 0));
        const MatrixXd& wh = tp.value(tp.parent(s, 1));
        const MatrixXd& wo = tp.value(tp.parent(s, 3));
        const MatrixXd& x = tp.value(tp.parent(s, 5));
        const MatrixXd& dy = tp.grad(s);
        const Eigen::Index hs = wh.cols();
        const Eigen::Index steps = x.rows(), batch = x.cols();
        const MatrixXd cond = broadcast_cond(tp.value(tp.parent(s, 6)), batch);

        const bool want_wi = tp.requires_grad(tp.parent(s, 0));
        const bool want_wh = tp.requires_grad(tp.parent(s, 1));
        const bool want_b = tp.requires_grad(tp.parent(s, 2));
        const bool want_wo = tp.requires_grad(tp.parent(s, 3));
        const bool want_bo = tp.requires_grad(tp.parent(s, 4));
        const bool want_x = tp.requires_grad(tp.parent(s, 5));
        const bool want_c = tp.requires_grad(tp.parent(s, 6));

        MatrixXd d_wh = MatrixXd::Zero(4 * hs, hs);
        MatrixXd d_wo = MatrixXd::Zero(1, hs);
        MatrixXd dz_sum = MatrixXd::Zero(4 * hs, batch);
        Eigen::VectorXd d_wdrive = Eigen::VectorXd::Zero(4 * hs);
        MatrixXd dx = MatrixXd::Zero(steps, batch);

        MatrixXd dh_next = MatrixXd::Zero(hs, batch), dc_next = MatrixXd::Zero(hs, batch);
        MatrixXd dz(4 * hs, batch), dh(hs, batch);
        const MatrixXd zero_state = MatrixXd::Zero(hs, batch);
        const Eigen::VectorXd w_drive = wi.col(0);
        for (Eigen::Index t = steps; t-- > 0;) {
          const MatrixXd& gates = trace->gates[t];
          const auto gi = gates.topRows(hs).array();
          const auto gf = gates.middleRows(hs, hs).array();
          const auto gg = gates.middleRows(2 * hs, hs).array();
          const auto go = gates.bottomRows(hs).array();
          const MatrixXd& c_prev = t > 0 ? trace->cells[t - 1] : zero_state;
          const MatrixXd& h_prev = t > 0 ? trace->hidden[t - 1] : zero_state;
          const Eigen::ArrayXXd tanh_c = trace->cells[t].array().tanh();

          dh.noalias() = wo.transpose() * dy.row(t);
          dh += dh_next;
          if (want_wo) d_wo.noalias() += dy.row(t) * trace->hidden[t].transpose();
          const Eigen::ArrayXXd dc = dh.array() * go * (1.0 - tanh_c.square()) + dc_next.array();
          dz.topRows(hs).array() = dc * gg * gi * (1.0 - gi);
          dz.middleRows(hs, hs).array() = dc * c_prev.array() * gf * (1.0 - gf);
          dz.middleRows(2 * hs, hs).array() = dc * gi * (1.0 - gg.square());
          dz.bottomRows(hs).array() = dh.array() * tanh_c * go * (1.0 - go);
          dc_next.array() = dc * gf;
          dh_next.noalias() = wh.transpose() * dz;

          if (want_wh) d_wh.noalias() += dz * h_prev.transpose();
          if (want_wi || want_b || want_c) dz_sum += dz;
          if (want_wi) d_wdrive.noalias() += dz * x.row(t).transpose();
          if (want_x) dx.row(t).noalias() = w_drive.transpose() * dz;
        }

        if (want_wi) {
          MatrixXd d_wi(4 * hs, kFeatureCount);
          d_wi.col(0) = d_wdrive;
          d_wi.rightCols(2) = dz_sum * cond.transpose();
          tp.accumulate(tp.parent(s, 0), d_wi);
        }
        if (want_wh) tp.accumulate(tp.parent(s, 1), d_wh);
        if (want_b) tp.accumulate(tp.parent(s, 2), dz_sum.rowwise().sum());
        if (want_wo) tp.accumulate(tp.parent(s, 3), d_wo);
        if (want_bo) tp.accumulate(tp.parent(s, 4), MatrixXd::Constant(1, 1, dy.sum()));
        if (want_x) tp.accumulate(tp.parent(s, 5), dx);
        if (want_c) tp.accumulate(tp.parent(s, 6), wi.rightCols(2).transpose() * dz_sum);
      });
}

}  // namespace dmle2e::surrogate
