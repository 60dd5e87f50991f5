#include "otkit/sinkhorn.hpp"

#include "otkit/core.hpp"

#include <cmath>

namespace otkit {
namespace {

void check_finite(const Vector& x, const char* what) {
  if (!x.allFinite())
    fail(ErrorCode::NumericOverflow,
         std::string(what) +
             " became non-finite; use the log-stabilized mode for this "
             "epsilon/cost range");
}

void check_positive_denominator(const Vector& x, const char* what) {
  if ((x.array() == 0.0).any())
    fail(ErrorCode::KernelDegenerate,
         std::string(what) +
             " has an exactly-zero entry (kernel underflow); use the "
             "log-stabilized mode");
}

Vector log_array(const Vector& x) { return x.array().log(); }

}  // namespace

SinkhornResult solve_vanilla(const Histogram& a, const Histogram& b,
                             const CostKernelPair& ck, const SolveOptions& opts,
                             const std::optional<Vector>& v0) {
  check_solve_options(opts);
  const Matrix& K = ck.kernel;
  if (a.size() != K.rows() || b.size() != K.cols())
    fail(ErrorCode::DimensionMismatch, "solve_vanilla: shapes disagree");

  Vector u = Vector::Ones(K.rows());
  Vector v = v0 ? *v0 : Vector::Ones(K.cols());

  int iter = 0;
  bool converged = false;
  double row_res = 0.0, col_res = 0.0;
  while (iter < opts.max_iters) {
    Vector Kv = K * v;
    check_positive_denominator(Kv, "K v");
    u = a.values.cwiseQuotient(Kv);
    check_finite(u, "u");

    Vector Ktu = K.transpose() * u;
    check_positive_denominator(Ktu, "K^T u");
    v = b.values.cwiseQuotient(Ktu);
    check_finite(v, "v");
    ++iter;

    if (opts.fixed_iters) continue;
    // residuals use the state after both half-updates
    Kv = K * v;
    row_res = (u.cwiseProduct(Kv) - a.values).norm();
    col_res = (v.cwiseProduct(K.transpose() * u) - b.values).norm();
    if (row_res <= opts.tolerance && col_res <= opts.tolerance) {
      converged = true;
      break;
    }
  }

  SinkhornResult res;
  res.coupling.plan = diag_scale(u, K, v);
  res.coupling.row_marginal = a;
  res.coupling.col_marginal = b;
  res.state.u = u;
  res.state.v = v;
  res.state.f = ck.epsilon * log_array(u);
  res.state.g = ck.epsilon * log_array(v);
  res.state.iteration = iter;
  res.iterations_run = iter;
  res.converged = converged;
  res.marginal_error = {
      (res.coupling.plan.rowwise().sum() - a.values).norm(),
      (res.coupling.plan.colwise().sum().transpose() - b.values).norm()};
  res.loss = entropic_loss(res.coupling.plan, ck.cost, ck.epsilon);
  return res;
}

SinkhornResult solve_log(const Histogram& a, const Histogram& b,
                         const CostKernelPair& ck, const SolveOptions& opts) {
  check_solve_options(opts);
  const Matrix& C = ck.cost;
  const double eps = ck.epsilon;
  if (a.size() != C.rows() || b.size() != C.cols())
    fail(ErrorCode::DimensionMismatch, "solve_log: shapes disagree");
  if ((a.values.array() <= 0.0).any() || (b.values.array() <= 0.0).any())
    fail(ErrorCode::NonPositiveHistogram,
         "log-domain solver needs strictly positive histograms "
         "(validate with renormalize+strict_positive to clamp)");

  const Vector log_a = log_array(a.values);
  const Vector log_b = log_array(b.values);
  Vector f = Vector::Zero(C.rows());
  Vector g = Vector::Zero(C.cols());

  int iter = 0;
  bool converged = false;
  while (iter < opts.max_iters) {
    Matrix R = residual_matrix(f, g, C);
    f += eps * log_a + min_row(R, eps);
    R = residual_matrix(f, g, C);
    g += eps * log_b + min_col(R, eps);
    ++iter;

    if (opts.fixed_iters) continue;
    R = residual_matrix(f, g, C);
    const double row_res = (-min_row(R, eps) / eps - log_a).norm();
    const double col_res = (-min_col(R, eps) / eps - log_b).norm();
    if (row_res <= opts.tolerance && col_res <= opts.tolerance) {
      converged = true;
      break;
    }
  }

  SinkhornResult res;
  res.coupling.plan =
      (-residual_matrix(f, g, C).array() / eps).exp().matrix();
  res.coupling.row_marginal = a;
  res.coupling.col_marginal = b;
  res.state.f = f;
  res.state.g = g;
  res.state.u = (f.array() / eps).exp();
  res.state.v = (g.array() / eps).exp();
  res.state.iteration = iter;
  res.iterations_run = iter;
  res.converged = converged;
  res.marginal_error = {
      (res.coupling.plan.rowwise().sum() - a.values).norm(),
      (res.coupling.plan.colwise().sum().transpose() - b.values).norm()};
  res.loss = entropic_loss(res.coupling.plan, ck.cost, ck.epsilon);
  return res;
}

std::vector<SinkhornResult> solve_parallel(const HistogramBatch& A,
                                           const HistogramBatch& B,
                                           const CostKernelPair& ck,
                                           const SolveOptions& opts) {
  check_solve_options(opts);
  const Matrix& K = ck.kernel;
  if (A.count() != B.count())
    fail(ErrorCode::ColumnCountMismatch,
         "solve_parallel: A and B need the same number of columns");
  if (A.dim() != K.rows() || B.dim() != K.cols())
    fail(ErrorCode::DimensionMismatch, "solve_parallel: shapes disagree");

  const Eigen::Index S = A.count();
  Matrix U = Matrix::Ones(K.rows(), S);
  Matrix V = Matrix::Ones(K.cols(), S);

  int iter = 0;
  bool converged = false;
  while (iter < opts.max_iters) {
    Matrix KV = K * V;
    if ((KV.array() == 0.0).any())
      fail(ErrorCode::KernelDegenerate,
           "K V has an exactly-zero entry (kernel underflow); use the "
           "log-stabilized mode");
    U = A.columns.cwiseQuotient(KV);
    if (!U.allFinite())
      fail(ErrorCode::NumericOverflow,
           "U became non-finite; use the log-stabilized mode");

    Matrix KtU = K.transpose() * U;
    if ((KtU.array() == 0.0).any())
      fail(ErrorCode::KernelDegenerate,
           "K^T U has an exactly-zero entry (kernel underflow); use the "
           "log-stabilized mode");
    V = B.columns.cwiseQuotient(KtU);
    if (!V.allFinite())
      fail(ErrorCode::NumericOverflow,
           "V became non-finite; use the log-stabilized mode");
    ++iter;

    if (opts.fixed_iters) continue;
    KV = K * V;
    const double row_res = (U.cwiseProduct(KV) - A.columns).norm();
    const double col_res =
        (V.cwiseProduct(K.transpose() * U) - B.columns).norm();
    if (row_res <= opts.tolerance && col_res <= opts.tolerance) {
      converged = true;
      break;
    }
  }

  std::vector<SinkhornResult> out;
  out.reserve(static_cast<std::size_t>(S));
  for (Eigen::Index s = 0; s < S; ++s) {
    SinkhornResult res;
    res.coupling.plan = diag_scale(U.col(s), K, V.col(s));
    res.coupling.row_marginal = A.column(s);
    res.coupling.col_marginal = B.column(s);
    res.state.u = U.col(s);
    res.state.v = V.col(s);
    res.state.f = ck.epsilon * U.col(s).array().log();
    res.state.g = ck.epsilon * V.col(s).array().log();
    res.state.iteration = iter;
    res.iterations_run = iter;
    res.converged = converged;
    res.marginal_error = {
        (res.coupling.plan.rowwise().sum() - A.columns.col(s)).norm(),
        (res.coupling.plan.colwise().sum().transpose() - B.columns.col(s))
            .norm()};
    res.loss = entropic_loss(res.coupling.plan, ck.cost, ck.epsilon);
    out.push_back(std::move(res));
  }
  return out;
}

}  // namespace otkit
