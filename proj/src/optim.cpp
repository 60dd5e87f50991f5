#include "otkit/optim.hpp"

#include <cmath>

namespace otkit {
namespace {

void check_shapes(const OptimizerState& state, const Matrix& theta,
                  const Matrix& grad) {
  if (theta.rows() != grad.rows() || theta.cols() != grad.cols() ||
      theta.rows() != state.m.rows() || theta.cols() != state.m.cols())
    fail(ErrorCode::ShapeMismatch,
         "optimizer step: parameter, gradient and state shapes disagree");
}

}  // namespace

OptimizerState make_optimizer(OptimizerKind kind, const OptimizerHyper& hyper,
                              Eigen::Index rows, Eigen::Index cols) {
  OptimizerState state;
  state.kind = kind;
  state.hyper = hyper;
  state.m = Matrix::Zero(rows, cols);
  state.v = Matrix::Zero(rows, cols);
  return state;
}

Matrix minibatch_average(const std::vector<Matrix>& per_sample_grads) {
  if (per_sample_grads.empty())
    fail(ErrorCode::EmptyBatch, "minibatch_average of an empty batch");
  Matrix sum = per_sample_grads.front();
  for (std::size_t i = 1; i < per_sample_grads.size(); ++i) {
    const Matrix& g = per_sample_grads[i];
    if (g.rows() != sum.rows() || g.cols() != sum.cols())
      fail(ErrorCode::ShapeMismatch,
           "minibatch_average: gradient shapes disagree");
    sum += g;
  }
  return sum / static_cast<double>(per_sample_grads.size());
}

Matrix sgd_step(OptimizerState& state, const Matrix& theta,
                const Matrix& grad) {
  check_shapes(state, theta, grad);
  ++state.t;
  return theta - state.hyper.lr * grad;
}

Matrix adam_step(OptimizerState& state, const Matrix& theta,
                 const Matrix& grad) {
  check_shapes(state, theta, grad);
  const OptimizerHyper& h = state.hyper;
  ++state.t;
  state.m = h.beta1 * state.m + (1.0 - h.beta1) * grad;
  state.v = h.beta2 * state.v + (1.0 - h.beta2) * grad.cwiseProduct(grad);
  const double mc = 1.0 - std::pow(h.beta1, static_cast<double>(state.t));
  const double vc = 1.0 - std::pow(h.beta2, static_cast<double>(state.t));
  const Matrix m_hat = state.m / mc;
  const Matrix v_hat = state.v / vc;
  return theta -
         h.lr * m_hat.cwiseQuotient(
                    (v_hat.array().sqrt() + h.eps_hat).matrix());
}

Matrix adamw_step(OptimizerState& state, const Matrix& theta,
                  const Matrix& grad) {
  check_shapes(state, theta, grad);
  const OptimizerHyper& h = state.hyper;
  ++state.t;
  state.m = h.beta1 * state.m + (1.0 - h.beta1) * grad;
  state.v = h.beta2 * state.v + (1.0 - h.beta2) * grad.cwiseProduct(grad);
  const double mc = 1.0 - std::pow(h.beta1, static_cast<double>(state.t));
  const double vc = 1.0 - std::pow(h.beta2, static_cast<double>(state.t));
  const Matrix m_hat = state.m / mc;
  const Matrix v_hat = state.v / vc;
  return (1.0 - h.lr * h.weight_decay) * theta -
         h.lr * m_hat.cwiseQuotient(
                    (v_hat.array().sqrt() + h.eps_hat).matrix());
}

Matrix optimizer_step(OptimizerState& state, const Matrix& theta,
                      const Matrix& grad) {
  switch (state.kind) {
    case OptimizerKind::Sgd:
      return sgd_step(state, theta, grad);
    case OptimizerKind::Adam:
      return adam_step(state, theta, grad);
    case OptimizerKind::AdamW:
      return adamw_step(state, theta, grad);
  }
  fail(ErrorCode::InvalidConfig, "unknown optimizer kind");
}

}  // namespace otkit
