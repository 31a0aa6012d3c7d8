#ifndef DMLE2E_GRAD_CHECK_HPP
#define DMLE2E_GRAD_CHECK_HPP

#include <functional>
#include <vector>

#include "dmle2e/grad/tape.hpp"

namespace dmle2e::grad {

struct GradientCheck {
  double max_rel_error = 0.0;
  std::size_t worst_input = 0;
  Eigen::Index worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
};

/// Scalar function of several inputs, recorded on the given tape.
using MultiFunction = std::function<Var<double>(Tape<double>&, const std::vector<Var<double>>&)>;
using UnaryFunction = std::function<Var<double>(Tape<double>&, const Var<double>&)>;

/// Compares backward() with central differences, coordinate by coordinate.
/// Relative error uses a max(|a|, |b|, 1e-8) denominator.
GradientCheck check_gradient(const MultiFunction& f, const std::vector<Eigen::MatrixXd>& point, double h = 1e-5);
GradientCheck check_gradient(const UnaryFunction& f, const Eigen::MatrixXd& point, double h = 1e-5);

}  // namespace dmle2e::grad

#endif  // DMLE2E_GRAD_CHECK_HPP
