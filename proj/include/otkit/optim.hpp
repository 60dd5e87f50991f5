#pragma once

#include "otkit/types.hpp"

#include <vector>

namespace otkit {

enum class OptimizerKind { Sgd, Adam, AdamW };

struct OptimizerHyper {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps_hat = 1e-8;      // Adam fuzz, added outside the square root
  double weight_decay = 0.01;  // AdamW gamma
};

/// Single-owner mutable optimizer state; one state must not be stepped
/// concurrently.
struct OptimizerState {
  OptimizerKind kind = OptimizerKind::Sgd;
  OptimizerHyper hyper;
  Matrix m, v;  // first/second moment buffers, shaped like the parameters
  long t = 0;
};

OptimizerState make_optimizer(OptimizerKind kind, const OptimizerHyper& hyper,
                              Eigen::Index rows, Eigen::Index cols);

/// Arithmetic mean over the batch, summed in index order.
Matrix minibatch_average(const std::vector<Matrix>& per_sample_grads);

Matrix sgd_step(OptimizerState& state, const Matrix& theta, const Matrix& grad);
Matrix adam_step(OptimizerState& state, const Matrix& theta,
                 const Matrix& grad);
Matrix adamw_step(OptimizerState& state, const Matrix& theta,
                  const Matrix& grad);

/// Dispatch on state.kind.
Matrix optimizer_step(OptimizerState& state, const Matrix& theta,
                      const Matrix& grad);

}  // namespace otkit
