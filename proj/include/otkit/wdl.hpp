#pragma once

#include "otkit/optim.hpp"
#include "otkit/rng.hpp"
#include "otkit/types.hpp"

#include <cstdint>
#include <vector>

namespace otkit {

/// Unconstrained logits; the trained quantities are their softmax images
/// A = softmax(alpha) (atoms, N x S) and W = softmax(lambda) (weights, S x M).
struct WdlParams {
  Matrix alpha;   // N x S
  Matrix lambda;  // S x M
};

enum class WdlInit { Zeros, Gaussian };

struct WdlConfig {
  int topics = 2;          // S
  double epsilon = 0.1;    // OT regularization
  int inner_iters = 50;    // L for the barycenter gradient solver
  SolveMode mode = SolveMode::Parallel;  // Parallel or Log
  OptimizerKind optimizer = OptimizerKind::Adam;
  OptimizerHyper hyper;
  int batch_size = 1;
  int steps = 1;
  std::uint64_t seed = 0;
  WdlInit init = WdlInit::Zeros;
  double init_sigma = 0.1;
  // Reproduce the broadcast update rule that applies one averaged S-vector
  // gradient to every weight column; default is per-document columns.
  bool lambda_broadcast = false;
};

struct WdlResult {
  HistogramBatch atoms;    // N x S
  HistogramBatch weights;  // S x M
  std::vector<double> loss_history;
  WdlParams params;
};

/// Zeros give uniform atom/weight columns; Gaussian(sigma) is deterministic
/// under the seed.
WdlParams init_params(Eigen::Index n, Eigen::Index s, Eigen::Index m,
                      std::uint64_t seed, WdlInit scheme = WdlInit::Zeros,
                      double sigma = 0.1);

/// Column m is the barycenter of atoms A under weights W(:,m).
HistogramBatch reconstruct(const HistogramBatch& atoms,
                           const HistogramBatch& weights,
                           const CostKernelPair& ck, int inner_iters,
                           SolveMode mode);

/// Owns the training state: parameters, optimizer buffers and the epoch
/// sampler. Batches walk a seeded shuffle without replacement; per-document
/// work is reduced in ascending document order.
class WdlTrainer {
 public:
  WdlTrainer(const Matrix& data, const CostKernelPair& ck,
             const WdlConfig& cfg);

  /// One mini-batch step; returns the batch mean of ||b_hat - y||^2
  /// evaluated before the parameter update.
  double step();

  const WdlParams& params() const { return params_; }
  const WdlConfig& config() const { return cfg_; }

  WdlResult train();

 private:
  std::vector<Eigen::Index> next_batch();

  Matrix data_;  // N x M, columns validated
  CostKernelPair ck_;
  WdlConfig cfg_;
  WdlParams params_;
  OptimizerState alpha_state_;
  std::vector<OptimizerState> lambda_states_;  // one per document column
  OptimizerState lambda_broadcast_state_;
  Rng rng_;
  std::vector<Eigen::Index> order_;
  std::size_t cursor_ = 0;
};

WdlResult wdl_train(const Matrix& data, const CostKernelPair& ck,
                    const WdlConfig& cfg);

}  // namespace otkit
