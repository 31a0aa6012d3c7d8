#include "dmle2e/grad/suite.hpp"

#include <random>

#include "dmle2e/grad/ops.hpp"

namespace dmle2e::grad {

using Eigen::MatrixXd;

namespace {

class PointSampler {
 public:
  explicit PointSampler(std::uint64_t seed) : rng_(seed) {}
  MatrixXd normal(Eigen::Index r, Eigen::Index c) {
    std::normal_distribution<double> g(0.0, 1.0);
    MatrixXd m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng_);
    return m;
  }
  MatrixXd positive(Eigen::Index r, Eigen::Index c) {
    std::uniform_real_distribution<double> u(0.5, 2.0);
    MatrixXd m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng_);
    return m;
  }

 private:
  std::mt19937_64 rng_;
};

// sum(w .* y): a generic scalar projection exercising every output entry.
Var<double> project(const Var<double>& y, const MatrixXd& w) {
  return sum(mul(y, y.tape()->constant(w)));
}

}  // namespace

std::vector<NamedCheck> check_primitives(std::uint64_t seed, double h) {
  PointSampler s(seed);
  std::vector<NamedCheck> out;
  auto run = [&](std::string name, const MultiFunction& f, std::vector<MatrixXd> point) {
    out.push_back({std::move(name), check_gradient(f, point, h)});
  };

  const MatrixXd w34 = s.normal(3, 4), w12 = s.normal(12, 2), w11 = s.normal(1, 1);
  run("add", [&](Tape<double>&, const auto& x) { return project(x[0] + x[1], w34); }, {s.normal(3, 4), s.normal(3, 4)});
  run("add_broadcast", [&](Tape<double>&, const auto& x) { return project(x[0] + x[1], w34); },
      {s.normal(3, 4), s.normal(3, 1)});
  run("sub", [&](Tape<double>&, const auto& x) { return project(x[0] - x[1], w34); }, {s.normal(3, 4), s.normal(1, 4)});
  run("mul", [&](Tape<double>&, const auto& x) { return project(x[0] * x[1], w34); }, {s.normal(3, 4), s.normal(3, 4)});
  run("div", [&](Tape<double>&, const auto& x) { return project(x[0] / x[1], w34); },
      {s.normal(3, 4), s.positive(3, 4)});
  run("scale", [&](Tape<double>&, const auto& x) { return project(scale(x[0], 2.5), w34); }, {s.normal(3, 4)});
  run("matmul", [&](Tape<double>&, const auto& x) { return project(matmul(x[0], x[1]), w34); },
      {s.normal(3, 5), s.normal(5, 4)});
  run("conv1d", [&](Tape<double>&, const auto& x) { return project(conv1d(x[0], x[1], 2), w12); },
      {s.normal(12, 2), s.normal(5, 1)});
  const MatrixXd w8 = s.normal(8, 2), w3 = s.normal(3, 2);
  run("upsample", [&](Tape<double>&, const auto& x) { return project(upsample(x[0], 2), w8); }, {s.normal(4, 2)});
  run("downsample", [&](Tape<double>&, const auto& x) { return project(downsample(x[0], 2, 1, 3), w3); },
      {s.normal(8, 2)});
  run("sigmoid", [&](Tape<double>&, const auto& x) { return project(sigmoid(x[0]), w34); }, {s.normal(3, 4)});
  run("tanh", [&](Tape<double>&, const auto& x) { return project(tanh(x[0]), w34); }, {s.normal(3, 4)});
  run("exp", [&](Tape<double>&, const auto& x) { return project(exp(x[0]), w34); }, {s.normal(3, 4)});
  run("log", [&](Tape<double>&, const auto& x) { return project(log(x[0]), w34); }, {s.positive(3, 4)});
  run("square", [&](Tape<double>&, const auto& x) { return project(square(x[0]), w34); }, {s.normal(3, 4)});
  run("sqrt", [&](Tape<double>&, const auto& x) { return project(sqrt(x[0]), w34); }, {s.positive(3, 4)});
  run("mean", [&](Tape<double>&, const auto& x) { return project(mean(square(x[0])), w11); }, {s.normal(3, 4)});
  run("sum", [&](Tape<double>&, const auto& x) { return project(sum(square(x[0])), w11); }, {s.normal(3, 4)});
  const MatrixXd w14 = s.normal(1, 4);
  run("col_mean", [&](Tape<double>&, const auto& x) { return project(col_mean(x[0]), w14); }, {s.normal(3, 4)});
  const std::vector<int> labels{0, 3, 1, 2, 2};
  run("softmax_xent", [&](Tape<double>&, const auto& x) { return softmax_xent(x[0], std::span<const int>(labels)); },
      {s.normal(5, 4)});
  const MatrixXd w21 = s.normal(2, 1);
  run("range_map", [&](Tape<double>&, const auto& x) { return project(range_map(x[0], 50.0, 100.0), w21); },
      {s.normal(2, 1)});
  const MatrixXd noise = s.normal(3, 4);
  run("add_noise", [&](Tape<double>&, const auto& x) { return project(square(add_noise(x[0], noise)), w34); },
      {s.normal(3, 4)});
  Eigen::MatrixXi index(3, 4);
  index << 0, 1, 2, 3, 3, 2, 1, 0, 1, 1, 3, 3;
  run("gather", [&](Tape<double>&, const auto& x) { return project(square(gather(x[0], index)), w34); },
      {s.normal(4, 1)});
  const MatrixXd w62 = s.normal(6, 2);
  run("reshape", [&](Tape<double>&, const auto& x) { return project(square(reshape(x[0], 6, 2)), w62); },
      {s.normal(3, 4)});
  const MatrixXd w24 = s.normal(2, 4);
  run("slice_rows", [&](Tape<double>&, const auto& x) { return project(square(slice_rows(x[0], 1, 2)), w24); },
      {s.normal(3, 4)});
  const MatrixXd w54 = s.normal(5, 4);
  run("vstack", [&](Tape<double>&, const auto& x) { return project(square(vstack<double>({x[0], x[1]})), w54); },
      {s.normal(3, 4), s.normal(2, 4)});
  return out;
}

}  // namespace dmle2e::grad
