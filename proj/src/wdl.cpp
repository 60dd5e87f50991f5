#include "otkit/wdl.hpp"

#include "otkit/barycenter_grad.hpp"
#include "otkit/core.hpp"

#include <algorithm>
#include <numeric>

namespace otkit {
namespace {

void check_config(const WdlConfig& cfg, Eigen::Index n, Eigen::Index m,
                  const CostKernelPair& ck) {
  if (cfg.topics < 1) fail(ErrorCode::InvalidConfig, "wdl: topics must be >= 1");
  if (cfg.batch_size < 1)
    fail(ErrorCode::InvalidConfig, "wdl: batch size must be >= 1");
  if (cfg.steps < 0) fail(ErrorCode::InvalidConfig, "wdl: steps must be >= 0");
  if (cfg.inner_iters < 1)
    fail(ErrorCode::InvalidConfig, "wdl: inner iterations must be >= 1");
  if (cfg.mode != SolveMode::Parallel && cfg.mode != SolveMode::Log)
    fail(ErrorCode::InvalidConfig, "wdl: mode must be parallel or log");
  if (ck.rows() != ck.cols())
    fail(ErrorCode::InvalidConfig,
         "wdl: cost matrix must be square (documents and atoms share one "
         "support)");
  if (ck.rows() != n)
    fail(ErrorCode::DimensionMismatch,
         "wdl: cost size must match the document length");
  if (cfg.batch_size > m)
    fail(ErrorCode::BatchLargerThanData,
         "wdl: batch size exceeds the number of documents");
}

}  // namespace

WdlParams init_params(Eigen::Index n, Eigen::Index s, Eigen::Index m,
                      std::uint64_t seed, WdlInit scheme, double sigma) {
  if (n < 1 || s < 1 || m < 1)
    fail(ErrorCode::InvalidConfig, "init_params: dimensions must be positive");
  WdlParams params;
  params.alpha = Matrix::Zero(n, s);
  params.lambda = Matrix::Zero(s, m);
  if (scheme == WdlInit::Gaussian) {
    Rng rng(seed);
    for (Eigen::Index j = 0; j < s; ++j)
      for (Eigen::Index i = 0; i < n; ++i)
        params.alpha(i, j) = sigma * rng.normal();
    for (Eigen::Index j = 0; j < m; ++j)
      for (Eigen::Index i = 0; i < s; ++i)
        params.lambda(i, j) = sigma * rng.normal();
  }
  return params;
}

HistogramBatch reconstruct(const HistogramBatch& atoms,
                           const HistogramBatch& weights,
                           const CostKernelPair& ck, int inner_iters,
                           SolveMode mode) {
  SolveOptions opts;
  opts.max_iters = inner_iters;
  opts.fixed_iters = true;
  Matrix out(ck.cols(), weights.count());
  for (Eigen::Index m = 0; m < weights.count(); ++m) {
    BarycenterProblem prob{atoms, weights.column(m), ck};
    const BarycenterResult res = mode == SolveMode::Log
                                     ? barycenter_log(prob, opts)
                                     : barycenter_parallel(prob, opts);
    out.col(m) = res.barycenter.values;
  }
  return HistogramBatch{std::move(out)};
}

WdlTrainer::WdlTrainer(const Matrix& data, const CostKernelPair& ck,
                       const WdlConfig& cfg)
    : ck_(ck), cfg_(cfg), rng_(cfg.seed) {
  if (data.size() == 0) fail(ErrorCode::EmptyMatrix, "wdl: empty data matrix");
  check_config(cfg, data.rows(), data.cols(), ck);
  // log mode clamps zero-mass bins so the targets stay usable alongside the
  // strictly positive softmax atoms
  const bool clamp = cfg.mode == SolveMode::Log;
  data_ = validate_histogram_batch(data, clamp, clamp).columns;

  params_ = init_params(data.rows(), cfg.topics, data.cols(), cfg.seed,
                        cfg.init, cfg.init_sigma);
  alpha_state_ = make_optimizer(cfg.optimizer, cfg.hyper, data.rows(),
                                cfg.topics);
  if (cfg.lambda_broadcast) {
    lambda_broadcast_state_ =
        make_optimizer(cfg.optimizer, cfg.hyper, cfg.topics, data.cols());
  } else {
    lambda_states_.reserve(static_cast<std::size_t>(data.cols()));
    for (Eigen::Index m = 0; m < data.cols(); ++m)
      lambda_states_.push_back(
          make_optimizer(cfg.optimizer, cfg.hyper, cfg.topics, 1));
  }
  order_.resize(static_cast<std::size_t>(data.cols()));
  std::iota(order_.begin(), order_.end(), Eigen::Index{0});
  rng_.shuffle(order_.begin(), order_.end());
}

std::vector<Eigen::Index> WdlTrainer::next_batch() {
  const auto B = static_cast<std::size_t>(cfg_.batch_size);
  if (cursor_ + B > order_.size()) {
    rng_.shuffle(order_.begin(), order_.end());
    cursor_ = 0;
  }
  std::vector<Eigen::Index> batch(order_.begin() + cursor_,
                                  order_.begin() + cursor_ + B);
  cursor_ += B;
  // reduction runs in document order regardless of shuffle position
  std::sort(batch.begin(), batch.end());
  return batch;
}

double WdlTrainer::step() {
  const std::vector<Eigen::Index> batch = next_batch();
  const HistogramBatch atoms = softmax_mat(params_.alpha);

  Matrix g_alpha = Matrix::Zero(params_.alpha.rows(), params_.alpha.cols());
  Vector g_lambda_avg = Vector::Zero(cfg_.topics);
  std::vector<Vector> g_lambda_cols(batch.size());
  double loss_sum = 0.0;

  for (std::size_t k = 0; k < batch.size(); ++k) {
    const Eigen::Index m = batch[k];
    const Histogram w_m = softmax_vec(params_.lambda.col(m));
    const Histogram target{data_.col(m)};
    BarycenterProblem prob{atoms, w_m, ck_};
    const BarycenterGradResult grad =
        cfg_.mode == SolveMode::Log
            ? barycenter_log_grad(prob, target, cfg_.inner_iters)
            : barycenter_parallel_grad(prob, target, cfg_.inner_iters);
    loss_sum += grad.loss;

    // pull back through the block-diagonal softmax Jacobian, one column at
    // a time (the Jacobian is symmetric)
    for (Eigen::Index s = 0; s < params_.alpha.cols(); ++s)
      g_alpha.col(s) += softmax_jacobian_vec(params_.alpha.col(s)) *
                        grad.grad_atoms.col(s);

    const Vector g_w =
        softmax_jacobian_vec(params_.lambda.col(m)) * grad.grad_weights;
    if (cfg_.lambda_broadcast)
      g_lambda_avg += g_w;
    else
      g_lambda_cols[k] = g_w;
  }

  g_alpha /= static_cast<double>(batch.size());
  params_.alpha = optimizer_step(alpha_state_, params_.alpha, g_alpha);

  if (cfg_.lambda_broadcast) {
    g_lambda_avg /= static_cast<double>(batch.size());
    const Matrix g_lambda =
        g_lambda_avg * Vector::Ones(params_.lambda.cols()).transpose();
    params_.lambda =
        optimizer_step(lambda_broadcast_state_, params_.lambda, g_lambda);
  } else {
    for (std::size_t k = 0; k < batch.size(); ++k) {
      const Eigen::Index m = batch[k];
      params_.lambda.col(m) =
          optimizer_step(lambda_states_[static_cast<std::size_t>(m)],
                         params_.lambda.col(m), g_lambda_cols[k]);
    }
  }

  return loss_sum / static_cast<double>(batch.size());
}

WdlResult WdlTrainer::train() {
  WdlResult res;
  res.loss_history.reserve(static_cast<std::size_t>(cfg_.steps));
  for (int t = 0; t < cfg_.steps; ++t) res.loss_history.push_back(step());
  res.atoms = softmax_mat(params_.alpha);
  res.weights = softmax_mat(params_.lambda);
  res.params = params_;
  return res;
}

WdlResult wdl_train(const Matrix& data, const CostKernelPair& ck,
                    const WdlConfig& cfg) {
  WdlTrainer trainer(data, ck, cfg);
  return trainer.train();
}

}  // namespace otkit
