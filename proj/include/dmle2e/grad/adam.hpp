#ifndef DMLE2E_GRAD_ADAM_HPP
#define DMLE2E_GRAD_ADAM_HPP

#include <cmath>
#include <vector>

#include "dmle2e/sigproc/types.hpp"

namespace dmle2e::grad {

/// Adam with bias correction over a fixed list of parameter blocks.
template <typename Scalar>
class Adam {
 public:
  explicit Adam(Scalar lr, Scalar beta1 = Scalar(0.9), Scalar beta2 = Scalar(0.999), Scalar eps = Scalar(1e-8))
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(const std::vector<MatrixX<Scalar>*>& params, const std::vector<MatrixX<Scalar>>& grads) {
    if (params.size() != grads.size()) throw InvalidArgument("Adam: parameter/gradient count mismatch");
    if (m_.empty()) {
      for (auto* p : params) {
        m_.push_back(MatrixX<Scalar>::Zero(p->rows(), p->cols()));
        v_.push_back(MatrixX<Scalar>::Zero(p->rows(), p->cols()));
      }
    }
    if (m_.size() != params.size()) throw InvalidArgument("Adam: parameter list changed between steps");
    ++t_;
    const Scalar c1 = Scalar(1) - std::pow(beta1_, static_cast<Scalar>(t_));
    const Scalar c2 = Scalar(1) - std::pow(beta2_, static_cast<Scalar>(t_));
    for (std::size_t k = 0; k < params.size(); ++k) {
      m_[k] = beta1_ * m_[k] + (Scalar(1) - beta1_) * grads[k];
      v_[k] = beta2_ * v_[k] + (Scalar(1) - beta2_) * grads[k].cwiseAbs2();
      params[k]->array() -= lr_ * (m_[k].array() / c1) / ((v_[k].array() / c2).sqrt() + eps_);
    }
  }

  void set_lr(Scalar lr) { lr_ = lr; }
  Scalar lr() const { return lr_; }
  long steps() const { return t_; }

 private:
  Scalar lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  std::vector<MatrixX<Scalar>> m_, v_;
};

}  // namespace dmle2e::grad

#endif  // DMLE2E_GRAD_ADAM_HPP
