#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"
#include "otkit/barycenter_grad.hpp"
#include "otkit/core.hpp"
#include "otkit/rng.hpp"
#include "otkit/wdl.hpp"

#include <cmath>

using namespace otkit;

namespace {

CostKernelPair grid_kernel(int n, double eps, double scale = 1.0) {
  Matrix cost(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      cost(i, j) = scale * std::pow(double(i - j) / (n - 1), 2);
  return build_kernel(cost, eps);
}

Matrix synthetic_documents(const Matrix& atoms, const CostKernelPair& ck,
                           int docs, int iters, std::uint64_t seed) {
  Rng rng(seed);
  Matrix Y(atoms.rows(), docs);
  SolveOptions o;
  o.max_iters = iters;
  o.fixed_iters = true;
  for (int m = 0; m < docs; ++m) {
    const BarycenterProblem prob{HistogramBatch{atoms},
                                 Histogram{rng.simplex(atoms.cols())}, ck};
    Vector b = barycenter_parallel(prob, o).barycenter.values;
    Y.col(m) = b / b.sum();
  }
  return Y;
}

}  // namespace

TEST_CASE("init_params schemes") {
  const WdlParams zeros = init_params(4, 2, 3, 0);
  CHECK((zeros.alpha.array() == 0.0).all());
  CHECK((zeros.lambda.array() == 0.0).all());
  const HistogramBatch A = softmax_mat(zeros.alpha);
  CHECK((A.columns.array() - 0.25).abs().maxCoeff() < 1e-15);
  const HistogramBatch W = softmax_mat(zeros.lambda);
  CHECK((W.columns.array() - 0.5).abs().maxCoeff() < 1e-15);

  const WdlParams g1 = init_params(4, 2, 3, 7, WdlInit::Gaussian, 0.1);
  const WdlParams g2 = init_params(4, 2, 3, 7, WdlInit::Gaussian, 0.1);
  CHECK(g1.alpha == g2.alpha);
  CHECK(g1.lambda == g2.lambda);
  const HistogramBatch Ag = softmax_mat(g1.alpha);
  for (int s = 0; s < 2; ++s) {
    CHECK(Ag.columns.col(s).minCoeff() > 0.0);
    CHECK(std::abs(Ag.columns.col(s).sum() - 1.0) < 1e-12);
  }

  CHECK_THROWS_AS(init_params(0, 2, 3, 0), Error);
}

TEST_CASE("reconstruct matches per-column barycenter calls") {
  Rng rng(301);
  const int N = 5, S = 2, M = 4, L = 30;
  Matrix atoms(N, S);
  for (int s = 0; s < S; ++s) atoms.col(s) = rng.simplex_positive(N);
  Matrix weights(S, M);
  for (int m = 0; m < M; ++m) weights.col(m) = rng.simplex_positive(S);
  const CostKernelPair ck = grid_kernel(N, 0.4);

  const HistogramBatch rec = reconstruct(HistogramBatch{atoms},
                                         HistogramBatch{weights}, ck, L,
                                         SolveMode::Parallel);
  SolveOptions o;
  o.max_iters = L;
  o.fixed_iters = true;
  for (int m = 0; m < M; ++m) {
    const BarycenterProblem prob{HistogramBatch{atoms},
                                 Histogram{weights.col(m)}, ck};
    const Vector direct = barycenter_parallel(prob, o).barycenter.values;
    CHECK((rec.columns.col(m) - direct).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("reconstruct with one atom ignores the weights") {
  Rng rng(303);
  const int N = 5;
  Matrix atom(N, 1);
  atom.col(0) = rng.simplex_positive(N);
  Matrix weights = Matrix::Ones(1, 3);
  const CostKernelPair ck = grid_kernel(N, 0.4);
  const HistogramBatch rec = reconstruct(HistogramBatch{atom},
                                         HistogramBatch{weights}, ck, 25,
                                         SolveMode::Parallel);
  CHECK((rec.columns.col(0) - rec.columns.col(1)).cwiseAbs().maxCoeff() == 0.0);
  CHECK((rec.columns.col(0) - rec.columns.col(2)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("reconstruct with one-hot weights selects single atoms") {
  Rng rng(305);
  const int N = 5, S = 3;
  Matrix atoms(N, S);
  for (int s = 0; s < S; ++s) atoms.col(s) = rng.simplex_positive(N);
  Matrix onehot = Matrix::Zero(S, S);
  onehot.diagonal().setOnes();
  const CostKernelPair ck = grid_kernel(N, 0.4);
  const HistogramBatch rec = reconstruct(HistogramBatch{atoms},
                                         HistogramBatch{onehot}, ck, 25,
                                         SolveMode::Parallel);
  SolveOptions o;
  o.max_iters = 25;
  o.fixed_iters = true;
  for (int s = 0; s < S; ++s) {
    const BarycenterProblem prob{HistogramBatch{atoms.col(s)},
                                 Histogram{Vector::Ones(1)}, ck};
    const Vector alone = barycenter_parallel(prob, o).barycenter.values;
    CHECK((rec.columns.col(s) - alone).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("lr = 0 steps leave the parameters untouched") {
  const int N = 6, S = 2, M = 5;
  const CostKernelPair ck = grid_kernel(N, 0.5);
  Matrix atoms(N, S);
  Rng rng(307);
  for (int s = 0; s < S; ++s) atoms.col(s) = rng.simplex_positive(N);
  const Matrix Y = synthetic_documents(atoms, ck, M, 30, 11);

  WdlConfig cfg;
  cfg.topics = S;
  cfg.epsilon = 0.5;
  cfg.inner_iters = 30;
  cfg.optimizer = OptimizerKind::Adam;
  cfg.hyper.lr = 0.0;
  cfg.batch_size = 3;
  cfg.steps = 4;
  cfg.seed = 5;
  WdlTrainer trainer(Y, ck, cfg);
  const WdlParams before = trainer.params();
  const double loss = trainer.step();
  CHECK(trainer.params().alpha == before.alpha);
  CHECK(trainer.params().lambda == before.lambda);
  CHECK(loss > 0.0);

  // full-batch loss history is constant under lr = 0
  cfg.batch_size = M;
  cfg.steps = 5;
  const WdlResult res = wdl_train(Y, ck, cfg);
  for (double v : res.loss_history) CHECK(v == res.loss_history.front());
}

TEST_CASE("lr = 0 batch loss equals the batch mean reconstruction error") {
  const int N = 5, S = 2, M = 3;
  const CostKernelPair ck = grid_kernel(N, 0.5);
  Matrix atoms(N, S);
  Rng rng(309);
  for (int s = 0; s < S; ++s) atoms.col(s) = rng.simplex_positive(N);
  const Matrix Y = synthetic_documents(atoms, ck, M, 25, 13);

  WdlConfig cfg;
  cfg.topics = S;
  cfg.epsilon = 0.5;
  cfg.inner_iters = 25;
  cfg.hyper.lr = 0.0;
  cfg.batch_size = M;  // whole data set, so the batch is unambiguous
  cfg.steps = 1;
  WdlTrainer trainer(Y, ck, cfg);
  const WdlParams init = trainer.params();
  const double loss = trainer.step();

  const HistogramBatch rec =
      reconstruct(softmax_mat(init.alpha), softmax_mat(init.lambda), ck,
                  cfg.inner_iters, SolveMode::Parallel);
  double expected = 0.0;
  for (int m = 0; m < M; ++m)
    expected += (rec.columns.col(m) - Y.col(m)).squaredNorm();
  expected /= M;
  CHECK(loss == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("documents equal to the initial reconstruction give zero gradients") {
  const int N = 6, S = 2, M = 4;
  const CostKernelPair ck = grid_kernel(N, 0.5);
  // zeros init: every document reconstructs to the same barycenter
  const BarycenterProblem prob{softmax_mat(Matrix::Zero(N, S)),
                               softmax_vec(Vector::Zero(S)), ck};
  SolveOptions o;
  o.max_iters = 20;
  o.fixed_iters = true;
  const Vector bhat = barycenter_parallel(prob, o).barycenter.values;
  Matrix Y(N, M);
  for (int m = 0; m < M; ++m) Y.col(m) = bhat;

  WdlConfig cfg;
  cfg.topics = S;
  cfg.epsilon = 0.5;
  cfg.inner_iters = 20;
  cfg.optimizer = OptimizerKind::Adam;
  cfg.hyper.lr = 0.05;
  cfg.batch_size = M;
  cfg.steps = 1;
  WdlTrainer adam(Y, ck, cfg);
  const WdlParams before = adam.params();
  const double loss = adam.step();
  CHECK(loss == 0.0);
  CHECK(adam.params().alpha == before.alpha);
  CHECK(adam.params().lambda == before.lambda);

  // AdamW still applies its decay; reconstruct the documents from the
  // gaussian init so its logits are nonzero and the decay is observable
  cfg.optimizer = OptimizerKind::AdamW;
  cfg.hyper.weight_decay = 0.5;
  cfg.init = WdlInit::Gaussian;
  cfg.seed = 3;
  const WdlParams ginit = init_params(N, S, M, cfg.seed, cfg.init, 0.1);
  const HistogramBatch grec =
      reconstruct(softmax_mat(ginit.alpha), softmax_mat(ginit.lambda), ck,
                  cfg.inner_iters, SolveMode::Parallel);
  WdlTrainer adamw(grec.columns, ck, cfg);
  const WdlParams winit = adamw.params();
  REQUIRE(winit.alpha == ginit.alpha);
  const double wloss = adamw.step();
  // ingest validation rescales each column to exact unit mass, so the
  // residual is a few ulps rather than exactly zero; Adam amplifies such a
  // gradient by at most lr/eps_hat
  CHECK(wloss <= 1e-30);
  CHECK((adamw.params().alpha - (1.0 - 0.05 * 0.5) * winit.alpha)
            .cwiseAbs()
            .maxCoeff() < 1e-9);
}

TEST_CASE("training is deterministic and zero steps return the init") {
  const int N = 6, S = 2, M = 5;
  const CostKernelPair ck = grid_kernel(N, 0.4);
  Matrix atoms(N, S);
  Rng rng(311);
  for (int s = 0; s < S; ++s) atoms.col(s) = rng.simplex_positive(N);
  const Matrix Y = synthetic_documents(atoms, ck, M, 25, 17);

  WdlConfig cfg;
  cfg.topics = S;
  cfg.epsilon = 0.4;
  cfg.inner_iters = 25;
  cfg.hyper.lr = 0.05;
  cfg.batch_size = 2;
  cfg.steps = 0;
  const WdlResult none = wdl_train(Y, ck, cfg);
  CHECK(none.loss_history.empty());
  CHECK((none.atoms.columns.array() - 1.0 / N).abs().maxCoeff() < 1e-15);

  cfg.steps = 6;
  cfg.seed = 23;
  const WdlResult r1 = wdl_train(Y, ck, cfg);
  const WdlResult r2 = wdl_train(Y, ck, cfg);
  REQUIRE(r1.loss_history.size() == 6);
  for (std::size_t k = 0; k < 6; ++k)
    CHECK(r1.loss_history[k] == r2.loss_history[k]);
  CHECK(r1.params.alpha == r2.params.alpha);
  CHECK(r1.params.lambda == r2.params.lambda);

  // images are valid histograms after training
  for (int s = 0; s < S; ++s) {
    CHECK(r1.atoms.columns.col(s).minCoeff() > 0.0);
    CHECK(std::abs(r1.atoms.columns.col(s).sum() - 1.0) < 1e-12);
  }
  for (int m = 0; m < M; ++m)
    CHECK(std::abs(r1.weights.columns.col(m).sum() - 1.0) < 1e-12);
}

TEST_CASE("identity-like fit reduces the loss") {
  const int N = 6, S = 3, M = 3;
  const CostKernelPair ck = grid_kernel(N, 0.3, 4.0);
  Rng rng(313);
  Matrix Y(N, M);
  for (int m = 0; m < M; ++m) Y.col(m) = rng.simplex_positive(N);

  WdlConfig cfg;
  cfg.topics = S;
  cfg.epsilon = 0.3;
  cfg.inner_iters = 30;
  cfg.optimizer = OptimizerKind::Adam;
  cfg.hyper.lr = 0.1;
  cfg.batch_size = M;
  cfg.steps = 60;
  cfg.seed = 2;
  cfg.init = WdlInit::Gaussian;
  const WdlResult res = wdl_train(Y, ck, cfg);
  CHECK(res.loss_history.back() < res.loss_history.front());
}

TEST_CASE("alpha pull-back matches finite differences of the chained loss") {
  const int N = 5, S = 2, L = 25;
  const CostKernelPair ck = grid_kernel(N, 0.5);
  Rng rng(317);
  Matrix alpha(N, S);
  for (int s = 0; s < S; ++s)
    for (int i = 0; i < N; ++i) alpha(i, s) = 0.4 * rng.normal();
  const Histogram w{rng.simplex_positive(S)};
  const Histogram y{rng.simplex(N)};

  const BarycenterProblem prob{softmax_mat(alpha), w, ck};
  const BarycenterGradResult grad = barycenter_parallel_grad(prob, y, L);
  Matrix g_alpha(N, S);
  for (int s = 0; s < S; ++s)
    g_alpha.col(s) = softmax_jacobian_vec(alpha.col(s)) * grad.grad_atoms.col(s);

  SolveOptions o;
  o.max_iters = L;
  o.fixed_iters = true;
  const auto loss = [&](const Matrix& logits) {
    const BarycenterProblem p{softmax_mat(logits), w, ck};
    return (barycenter_parallel(p, o).barycenter.values - y.values)
        .squaredNorm();
  };
  for (int s = 0; s < S; ++s)
    for (int i = 0; i < N; ++i) {
      Matrix plus = alpha, minus = alpha;
      plus(i, s) += 1e-6;
      minus(i, s) -= 1e-6;
      const double fd = (loss(plus) - loss(minus)) / 2e-6;
      CHECK(oracles::rel_err(g_alpha(i, s), fd) < 1e-3);
    }

  // the softmax Jacobian annihilates constant shifts
  for (int s = 0; s < S; ++s)
    CHECK(std::abs(g_alpha.col(s).sum()) < 1e-10);
}

TEST_CASE("adding a constant to a logit column leaves the atoms unchanged") {
  const int N = 5, S = 2;
  Rng rng(319);
  Matrix alpha(N, S);
  for (int s = 0; s < S; ++s)
    for (int i = 0; i < N; ++i)
      alpha(i, s) =
          static_cast<double>(static_cast<long>(rng.below(4096)) - 2048) /
          1024.0;
  Matrix shifted = alpha;
  shifted.col(1).array() += 0.25;  // dyadic shift keeps the sums exact
  CHECK(softmax_mat(alpha).columns == softmax_mat(shifted).columns);
}

TEST_CASE("configuration validation") {
  const int N = 4;
  const CostKernelPair ck = grid_kernel(N, 0.5);
  Rng rng(331);
  Matrix Y(N, 2);
  Y << rng.simplex(N), rng.simplex(N);

  WdlConfig cfg;
  cfg.topics = 2;
  cfg.epsilon = 0.5;
  cfg.batch_size = 3;  // larger than the document count
  try {
    WdlTrainer t(Y, ck, cfg);
    FAIL("expected BatchLargerThanData");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::BatchLargerThanData);
  }

  cfg.batch_size = 1;
  const CostKernelPair rect = build_kernel(Matrix::Zero(4, 5), 0.5);
  CHECK_THROWS_AS(WdlTrainer(Y, rect, cfg), Error);
}

TEST_CASE("the broadcast rule moves every weight column together") {
  const int N = 5, S = 2, M = 4;
  const CostKernelPair ck = grid_kernel(N, 0.5);
  Rng rng(337);
  Matrix atoms(N, S);
  for (int s = 0; s < S; ++s) atoms.col(s) = rng.simplex_positive(N);
  const Matrix Y = synthetic_documents(atoms, ck, M, 25, 19);

  WdlConfig cfg;
  cfg.topics = S;
  cfg.epsilon = 0.5;
  cfg.inner_iters = 25;
  cfg.optimizer = OptimizerKind::Sgd;
  cfg.hyper.lr = 0.1;
  cfg.batch_size = 2;
  cfg.steps = 1;
  cfg.lambda_broadcast = true;
  cfg.init = WdlInit::Gaussian;  // distinct atoms, so weight gradients differ
  WdlTrainer trainer(Y, ck, cfg);
  const Matrix before = trainer.params().lambda;
  trainer.step();
  const Matrix delta = trainer.params().lambda - before;
  // one shared S-vector update applied to all M columns
  for (int m = 1; m < M; ++m)
    CHECK((delta.col(m) - delta.col(0)).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(delta.cwiseAbs().maxCoeff() > 0.0);
}
