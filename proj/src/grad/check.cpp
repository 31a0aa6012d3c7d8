#include "dmle2e/grad/check.hpp"

#include <cmath>
#include <string>

namespace dmle2e::grad {

namespace {

double evaluate(const MultiFunction& f, const std::vector<Eigen::MatrixXd>& point) {
  Tape<double> tape;
  std::vector<Var<double>> inputs;
  for (std::size_t k = 0; k < point.size(); ++k) inputs.push_back(tape.constant(point[k]));
  return f(tape, inputs).scalar();
}

}  // namespace

GradientCheck check_gradient(const MultiFunction& f, const std::vector<Eigen::MatrixXd>& point, double h) {
  Tape<double> tape;
  std::vector<Var<double>> inputs;
  for (std::size_t k = 0; k < point.size(); ++k) inputs.push_back(tape.parameter("x" + std::to_string(k), point[k]));
  const Var<double> out = f(tape, inputs);
  const Gradients<double> grads = tape.backward(out);

  GradientCheck result;
  std::vector<Eigen::MatrixXd> probe = point;
  for (std::size_t k = 0; k < point.size(); ++k) {
    const Eigen::MatrixXd& g = grads["x" + std::to_string(k)];
    for (Eigen::Index i = 0; i < point[k].size(); ++i) {
      const double x0 = point[k].data()[i];
      probe[k].data()[i] = x0 + h;
      const double up = evaluate(f, probe);
      probe[k].data()[i] = x0 - h;
      const double down = evaluate(f, probe);
      probe[k].data()[i] = x0;
      const double numeric = (up - down) / (2.0 * h);
      const double analytic = g.data()[i];
      const double err = std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-8});
      if (err > result.max_rel_error || !std::isfinite(err)) {
        result = {std::isfinite(err) ? err : std::numeric_limits<double>::infinity(), k, i, analytic, numeric};
      }
    }
  }
  return result;
}

GradientCheck check_gradient(const UnaryFunction& f, const Eigen::MatrixXd& point, double h) {
  return check_gradient([&f](Tape<double>& t, const std::vector<Var<double>>& in) { return f(t, in[0]); },
                        std::vector<Eigen::MatrixXd>{point}, h);
}

}  // namespace dmle2e::grad
