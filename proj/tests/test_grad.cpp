#include <gtest/gtest.h>

#include <random>

#include "dmle2e/grad/adam.hpp"
#include "dmle2e/grad/check.hpp"
#include "dmle2e/grad/ops.hpp"
#include "dmle2e/grad/suite.hpp"

using namespace dmle2e;
using namespace dmle2e::grad;
using Eigen::MatrixXd;

TEST(Backward, SquareAtThree) {
  Tape<double> t;
  const auto x = t.parameter("x", MatrixXd::Constant(1, 1, 3.0));
  const auto g = t.backward(square(x));
  EXPECT_DOUBLE_EQ(g["x"](0, 0), 6.0);
}

TEST(Backward, ProductPlusOperand) {
  Tape<double> t;
  const auto x = t.parameter("x", MatrixXd::Constant(1, 1, 2.0));
  const auto y = t.parameter("y", MatrixXd::Constant(1, 1, 5.0));
  const auto g = t.backward(x * y + y);
  EXPECT_DOUBLE_EQ(g[x](0, 0), 5.0);
  EXPECT_DOUBLE_EQ(g[y](0, 0), 3.0);
}

TEST(Backward, FanOutAccumulates) {
  Tape<double> t;
  const auto x = t.parameter("x", MatrixXd::Constant(1, 1, 1.5));
  const auto g = t.backward(x + x + x * x);  // 2 + 2x
  EXPECT_DOUBLE_EQ(g[x](0, 0), 5.0);
}

TEST(Backward, UnusedParameterGetsExactZero) {
  Tape<double> t;
  const auto x = t.parameter("x", MatrixXd::Constant(2, 2, 1.0));
  const auto unused = t.parameter("unused", MatrixXd::Constant(3, 1, 1.0));
  const auto g = t.backward(sum(square(x)));
  ASSERT_EQ(g[unused].rows(), 3);
  EXPECT_TRUE((g[unused].array() == 0.0).all());
}

TEST(Backward, NonScalarLossRejected) {
  Tape<double> t;
  const auto x = t.parameter("x", MatrixXd::Ones(2, 1));
  EXPECT_THROW(t.backward(square(x)), InvalidArgument);
}

TEST(Backward, NanNamesTheNode) {
  Tape<double> t;
  const auto x = t.parameter("x", MatrixXd::Constant(1, 1, -1.0));
  const auto loss = sum(sqrt(x));
  try {
    t.backward(loss);
    FAIL() << "expected a numeric error";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("sqrt"), std::string::npos) << e.what();
  }
}

TEST(Backward, DuplicateParameterRejected) {
  Tape<double> t;
  t.parameter("w", MatrixXd::Ones(1, 1));
  EXPECT_THROW(t.parameter("w", MatrixXd::Ones(1, 1)), InvalidArgument);
}

TEST(Backward, StaleTapeIsAUsageError) {
  Tape<double> t;
  const auto x = t.parameter("x", MatrixXd::Ones(1, 1));
  const auto loss = square(x);
  t.reset();
  EXPECT_THROW(t.backward(loss), UsageError);
  EXPECT_THROW((void)x.value(), UsageError);
}

TEST(Backward, SecondBackwardIsAUsageError) {
  Tape<double> t;
  const auto x = t.parameter("x", MatrixXd::Ones(1, 1));
  const auto loss = square(x);
  t.backward(loss);
  EXPECT_THROW(t.backward(loss), UsageError);
}

TEST(Backward, GradientOfSumIsSumOfGradients) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  MatrixXd a(4, 3), b(4, 3);
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = g(rng), b.data()[i] = g(rng);
  auto grad_of = [&](int which) {
    Tape<double> t;
    const auto w = t.parameter("w", MatrixXd::Constant(4, 3, 0.3));
    const auto ta = sum(tanh(w * t.constant(a)));
    const auto tb = sum(tanh(w * t.constant(b)));
    const auto loss = which == 0 ? ta : which == 1 ? tb : ta + tb;
    return MatrixXd(t.backward(loss)["w"]);
  };
  EXPECT_LE((grad_of(2) - grad_of(0) - grad_of(1)).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Backward, DumpListsNodes) {
  Tape<double> t;
  const auto x = t.parameter("x", MatrixXd::Ones(2, 1));
  (void)sum(square(x));
  const std::string d = t.dump();
  EXPECT_NE(d.find("param[x] 2x1"), std::string::npos) << d;
  EXPECT_NE(d.find("square"), std::string::npos);
  EXPECT_NE(d.find("sum 1x1 <- 1"), std::string::npos);
}

TEST(CheckGradient, LinearFunctionIsExact) {
  MatrixXd w(3, 1);
  w << 1.0, -2.0, 0.5;
  const auto r = check_gradient(
      [&](Tape<double>& t, const Var<double>& x) { return sum(x * t.constant(w)); }, MatrixXd::Constant(3, 1, 0.7));
  EXPECT_LT(r.max_rel_error, 1e-10);
}

TEST(CheckGradient, EveryPrimitiveBelowTolerance) {
  for (const auto& c : check_primitives(11)) {
    EXPECT_LT(c.result.max_rel_error, 1e-5) << c.name << " analytic " << c.result.analytic << " numeric "
                                            << c.result.numeric;
  }
}

TEST(CheckGradient, SoftmaxCrossEntropyFused) {
  std::vector<int> labels{2, 0, 3};
  MatrixXd z(3, 4);
  z << 0.1, -0.3, 1.2, 0.0, 2.0, 0.5, -1.0, 0.3, -0.2, 0.4, 0.9, 1.1;
  const auto r = check_gradient(
      [&](Tape<double>&, const Var<double>& x) { return softmax_xent(x, std::span<const int>(labels)); }, z);
  EXPECT_LT(r.max_rel_error, 1e-6);
}

TEST(SoftmaxXent, UniformLogitsGiveLnFour) {
  Tape<double> t;
  std::vector<int> labels{0, 1, 2, 3, 3};
  const auto z = t.constant(MatrixXd::Constant(5, 4, 0.7));
  EXPECT_NEAR(softmax_xent(z, std::span<const int>(labels)).scalar(), std::log(4.0), 1e-15);
}

TEST(RangeMap, SaturatesWithoutOverflow) {
  Tape<double> t;
  MatrixXd th(3, 1);
  th << -1e6, 0.0, 1e6;
  const MatrixXd y = range_map(t.constant(th), 50.0, 100.0).value();
  EXPECT_EQ(y(0, 0), 50.0);
  EXPECT_EQ(y(1, 0), 75.0);
  EXPECT_EQ(y(2, 0), 100.0);
}

TEST(Conv1d, AdjointIdentity) {
  // <conv(x), g> = <x, conv^T(g)> checked through the tape.
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n;
  MatrixXd x(20, 1), g(20, 1), h(5, 1);
  for (auto* m : {&x, &g, &h})
    for (Eigen::Index i = 0; i < m->size(); ++i) m->data()[i] = n(rng);
  Tape<double> t;
  const auto xv = t.parameter("x", x);
  const auto y = conv1d(xv, t.constant(h), 1);
  const auto grads = t.backward(sum(y * t.constant(g)));
  EXPECT_NEAR((y.value().array() * g.array()).sum(), (x.array() * grads["x"].array()).sum(), 1e-12);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  MatrixXd p = MatrixXd::Constant(2, 1, 1.0);
  Adam<double> opt(0.1);
  opt.step({&p}, {MatrixXd::Constant(2, 1, 3.0)});
  EXPECT_NEAR(p(0, 0), 0.9, 1e-8);
}

TEST(Adam, MinimizesQuadratic) {
  MatrixXd p = MatrixXd::Constant(1, 1, 5.0);
  Adam<double> opt(0.05);
  for (int i = 0; i < 2000; ++i) opt.step({&p}, {2.0 * (p.array() - 1.0).matrix()});
  EXPECT_NEAR(p(0, 0), 1.0, 1e-3);
}
