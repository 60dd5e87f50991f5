#include "otkit/sinkhorn_grad.hpp"

#include "otkit/core.hpp"

#include <cmath>

namespace otkit {
namespace {

void check_iters(int iters) {
  if (iters < 1)
    fail(ErrorCode::TraceTooShort, "gradient solvers need at least 1 iteration");
}

}  // namespace

Matrix softmin_grad_cols(const Matrix& R, double epsilon) {
  Matrix W(R.rows(), R.cols());
  for (Eigen::Index j = 0; j < R.cols(); ++j)
    W.col(j) = soft_min_grad(R.col(j), epsilon);
  return W;
}

Matrix softmin_grad_rows_t(const Matrix& R, double epsilon) {
  Matrix X(R.cols(), R.rows());
  for (Eigen::Index i = 0; i < R.rows(); ++i)
    X.col(i) = soft_min_grad(R.row(i).transpose(), epsilon);
  return X;
}

VanillaTrace run_vanilla_fixed(const Histogram& a, const Histogram& b,
                               const CostKernelPair& ck, int iters) {
  check_iters(iters);
  const Matrix& K = ck.kernel;
  if (a.size() != K.rows() || b.size() != K.cols())
    fail(ErrorCode::DimensionMismatch, "run_vanilla_fixed: shapes disagree");

  VanillaTrace trace;
  trace.u.reserve(iters + 1);
  trace.v.reserve(iters + 1);
  trace.u.push_back(Vector::Ones(K.rows()));
  trace.v.push_back(Vector::Ones(K.cols()));
  for (int l = 1; l <= iters; ++l) {
    const Vector Kv = K * trace.v.back();
    if ((Kv.array() == 0.0).any())
      fail(ErrorCode::KernelDegenerate,
           "K v has an exactly-zero entry; use the log-stabilized gradient");
    Vector u = a.values.cwiseQuotient(Kv);
    const Vector Ktu = K.transpose() * u;
    if ((Ktu.array() == 0.0).any())
      fail(ErrorCode::KernelDegenerate,
           "K^T u has an exactly-zero entry; use the log-stabilized gradient");
    Vector v = b.values.cwiseQuotient(Ktu);
    if (!u.allFinite() || !v.allFinite())
      fail(ErrorCode::NumericOverflow,
           "scaling variables became non-finite; use the log-stabilized "
           "gradient");
    trace.u.push_back(std::move(u));
    trace.v.push_back(std::move(v));
  }
  return trace;
}

GradResult vanilla_backward(const VanillaTrace& trace, const Histogram& a,
                            const Histogram& b, const CostKernelPair& ck) {
  const int L = trace.length();
  check_iters(L);
  const Matrix& K = ck.kernel;
  const double eps = ck.epsilon;

  GradResult res;
  res.coupling.plan = diag_scale(trace.u[L], K, trace.v[L]);
  res.coupling.row_marginal = a;
  res.coupling.col_marginal = b;
  res.loss = entropic_loss(res.coupling.plan, ck.cost, eps);

  // dL/dP = C + eps log P
  const Matrix P_bar =
      ck.cost + eps * res.coupling.plan.array().log().matrix();
  const Matrix PK = P_bar.cwiseProduct(K);

  Vector v_bar = PK.transpose() * trace.u[L];
  Vector u_bar =
      PK * trace.v[L] -
      K * v_bar.cwiseProduct(trace.v[L])
              .cwiseQuotient(K.transpose() * trace.u[L]);
  Vector a_bar = u_bar.cwiseQuotient(K * trace.v[L - 1]);

  for (int l = L - 1; l >= 1; --l) {
    v_bar = -K.transpose() *
            u_bar.cwiseProduct(trace.u[l + 1]).cwiseQuotient(K * trace.v[l]);
    u_bar = -K * v_bar.cwiseProduct(trace.v[l])
                     .cwiseQuotient(K.transpose() * trace.u[l]);
    a_bar += u_bar.cwiseQuotient(K * trace.v[l - 1]);
  }

  if (!a_bar.allFinite())
    fail(ErrorCode::NumericOverflow, "adjoint of a became non-finite");
  res.grad_a = std::move(a_bar);
  return res;
}

LogTrace run_log_fixed(const Histogram& a, const Histogram& b,
                       const CostKernelPair& ck, int iters) {
  check_iters(iters);
  const Matrix& C = ck.cost;
  const double eps = ck.epsilon;
  if (a.size() != C.rows() || b.size() != C.cols())
    fail(ErrorCode::DimensionMismatch, "run_log_fixed: shapes disagree");
  if ((a.values.array() <= 0.0).any() || (b.values.array() <= 0.0).any())
    fail(ErrorCode::NonPositiveHistogram,
         "log-domain gradient needs strictly positive histograms");

  const Vector log_a = a.values.array().log();
  const Vector log_b = b.values.array().log();

  LogTrace trace;
  trace.f.reserve(iters + 1);
  trace.g.reserve(iters + 1);
  trace.f.push_back(Vector::Zero(C.rows()));
  trace.g.push_back(Vector::Zero(C.cols()));
  for (int l = 1; l <= iters; ++l) {
    Matrix R = residual_matrix(trace.f.back(), trace.g.back(), C);
    Vector f = trace.f.back() + eps * log_a + min_row(R, eps);
    R = residual_matrix(f, trace.g.back(), C);
    Vector g = trace.g.back() + eps * log_b + min_col(R, eps);
    trace.f.push_back(std::move(f));
    trace.g.push_back(std::move(g));
  }
  return trace;
}

GradResult log_backward(const LogTrace& trace, const Histogram& a,
                        const Histogram& b, const CostKernelPair& ck) {
  const int L = trace.length();
  check_iters(L);
  const Matrix& C = ck.cost;
  const double eps = ck.epsilon;

  const Matrix R_final = residual_matrix(trace.f[L], trace.g[L], C);
  GradResult res;
  res.coupling.plan = (-R_final.array() / eps).exp().matrix();
  res.coupling.row_marginal = a;
  res.coupling.col_marginal = b;
  res.loss = entropic_loss(res.coupling.plan, C, eps);

  // C + eps log P collapses to C - R, which stays finite even where the
  // coupling itself underflows
  const Matrix PP = (C - R_final).cwiseProduct(res.coupling.plan);

  Vector g_bar = PP.colwise().sum().transpose() / eps;
  // the g-update at iteration L saw R(f^(L), g^(L-1))
  Matrix W =
      softmin_grad_cols(residual_matrix(trace.f[L], trace.g[L - 1], C), eps);
  Vector f_bar = PP.rowwise().sum() / eps - W * g_bar;
  Vector a_bar = eps * f_bar.cwiseQuotient(a.values);

  for (int l = L - 1; l >= 1; --l) {
    const Matrix X =
        softmin_grad_rows_t(residual_matrix(trace.f[l], trace.g[l], C), eps);
    g_bar = -X * f_bar;
    W = softmin_grad_cols(residual_matrix(trace.f[l], trace.g[l - 1], C), eps);
    f_bar = -W * g_bar;
    a_bar += eps * f_bar.cwiseQuotient(a.values);
  }

  if (!a_bar.allFinite())
    fail(ErrorCode::NumericOverflow, "adjoint of a became non-finite");
  res.grad_a = std::move(a_bar);
  return res;
}

GradResult solve_vanilla_with_grad(const Histogram& a, const Histogram& b,
                                   const CostKernelPair& ck, int iters) {
  return vanilla_backward(run_vanilla_fixed(a, b, ck, iters), a, b, ck);
}

GradResult solve_log_with_grad(const Histogram& a, const Histogram& b,
                               const CostKernelPair& ck, int iters) {
  return log_backward(run_log_fixed(a, b, ck, iters), a, b, ck);
}

}  // namespace otkit
