#include "otkit/barycenter_grad.hpp"

#include "otkit/core.hpp"
#include "otkit/sinkhorn_grad.hpp"

#include <cmath>

namespace otkit {
namespace {

void check_trace(const BarycenterTrace& trace, bool log_mode) {
  if (trace.length() < 1)
    fail(ErrorCode::TraceTooShort, "barycenter gradient needs L >= 1");
  if (trace.log_mode != log_mode)
    fail(ErrorCode::InvalidConfig, "trace mode does not match backward pass");
}

void check_target(const Histogram& target, Eigen::Index n) {
  if (target.size() != n)
    fail(ErrorCode::DimensionMismatch,
         "target length must match the barycenter support");
}

}  // namespace

BarycenterGradResult barycenter_parallel_backward(
    const BarycenterProblem& prob, const BarycenterTrace& trace,
    const Histogram& target) {
  check_trace(trace, false);
  const Matrix& K = prob.ck.kernel;
  const Vector& w = prob.weights.values;
  const int L = trace.length();
  check_target(target, K.cols());

  BarycenterGradResult res;
  res.barycenter = Histogram{trace.b[L]};
  res.loss = (trace.b[L] - target.values).squaredNorm();

  Vector b_bar = 2.0 * (trace.b[L] - target.values);
  Matrix U_bar =
      K * (b_bar * w.transpose()).cwiseProduct(trace.V[L]);
  Matrix A_bar = U_bar.cwiseQuotient(K * trace.V[L - 1]);
  Vector w_bar = (K.transpose() * trace.U[L]).array().log().matrix().transpose() *
                 b_bar.cwiseProduct(trace.b[L]);

  for (int l = L - 1; l >= 1; --l) {
    const Matrix KV = K * trace.V[l];
    const Matrix KtU = K.transpose() * trace.U[l];
    const Matrix V_bar =
        -K.transpose() * U_bar.cwiseProduct(trace.U[l + 1]).cwiseQuotient(KV);
    b_bar = V_bar.cwiseQuotient(KtU).rowwise().sum();
    U_bar = K * (b_bar * w.transpose() - V_bar.cwiseQuotient(KtU))
                    .cwiseProduct(trace.V[l]);
    A_bar += U_bar.cwiseQuotient(K * trace.V[l - 1]);
    w_bar += KtU.array().log().matrix().transpose() *
             b_bar.cwiseProduct(trace.b[l]);
  }

  if (!A_bar.allFinite() || !w_bar.allFinite())
    fail(ErrorCode::NumericOverflow, "barycenter adjoints became non-finite");
  res.grad_atoms = std::move(A_bar);
  res.grad_weights = std::move(w_bar);
  return res;
}

BarycenterGradResult barycenter_log_backward(const BarycenterProblem& prob,
                                             const BarycenterTrace& trace,
                                             const Histogram& target) {
  check_trace(trace, true);
  const Matrix& C = prob.ck.cost;
  const double eps = prob.ck.epsilon;
  const Vector& w = prob.weights.values;
  const Matrix& A = prob.atoms.columns;
  const Eigen::Index S = A.cols();
  const int L = trace.length();
  check_target(target, C.cols());

  // trace.U holds F, trace.V holds G, trace.b holds log b
  const Vector b_final = trace.b[L].array().exp();
  BarycenterGradResult res;
  res.barycenter = Histogram{b_final};
  res.loss = (b_final - target.values).squaredNorm();

  // per-atom Min_col R(f_s^(l), g_s^(l-1)) as seen by the log b update at l
  auto mincol_at = [&](int l) {
    Matrix out(C.cols(), S);
    for (Eigen::Index s = 0; s < S; ++s)
      out.col(s) = min_col(
          residual_matrix(trace.U[l].col(s), trace.V[l - 1].col(s), C), eps);
    return out;
  };

  Vector logb_bar = 2.0 * (b_final - target.values).cwiseProduct(b_final);
  Matrix F_bar(C.rows(), S);
  for (Eigen::Index s = 0; s < S; ++s) {
    const Matrix W = softmin_grad_cols(
        residual_matrix(trace.U[L].col(s), trace.V[L - 1].col(s), C), eps);
    F_bar.col(s) = (w[s] / eps) * (W * logb_bar);
  }
  Matrix A_bar = eps * F_bar.cwiseQuotient(A);
  // the -1/eps factor from the derivation is folded into each term
  Vector w_bar =
      -(trace.V[L - 1] + mincol_at(L)).transpose() * logb_bar / eps;

  for (int l = L - 1; l >= 1; --l) {
    Matrix G_bar(C.cols(), S);
    for (Eigen::Index s = 0; s < S; ++s) {
      const Matrix X = softmin_grad_rows_t(
          residual_matrix(trace.U[l].col(s), trace.V[l].col(s), C), eps);
      G_bar.col(s) = -X * F_bar.col(s);
    }
    logb_bar = eps * G_bar.rowwise().sum();
    for (Eigen::Index s = 0; s < S; ++s) {
      const Matrix W = softmin_grad_cols(
          residual_matrix(trace.U[l].col(s), trace.V[l - 1].col(s), C), eps);
      F_bar.col(s) = (w[s] / eps) * (W * logb_bar) - W * G_bar.col(s);
    }
    A_bar += eps * F_bar.cwiseQuotient(A);
    w_bar += -(trace.V[l - 1] + mincol_at(l)).transpose() * logb_bar / eps;
  }

  if (!A_bar.allFinite() || !w_bar.allFinite())
    fail(ErrorCode::NumericOverflow, "barycenter adjoints became non-finite");
  res.grad_atoms = std::move(A_bar);
  res.grad_weights = std::move(w_bar);
  return res;
}

BarycenterGradResult barycenter_parallel_grad(const BarycenterProblem& prob,
                                              const Histogram& target,
                                              int iters) {
  if (iters < 1)
    fail(ErrorCode::TraceTooShort, "barycenter gradient needs L >= 1");
  SolveOptions opts;
  opts.max_iters = iters;
  opts.fixed_iters = true;
  const BarycenterResult fwd = barycenter_parallel(prob, opts);
  return barycenter_parallel_backward(prob, fwd.trace, target);
}

BarycenterGradResult barycenter_log_grad(const BarycenterProblem& prob,
                                         const Histogram& target, int iters) {
  if (iters < 1)
    fail(ErrorCode::TraceTooShort, "barycenter gradient needs L >= 1");
  SolveOptions opts;
  opts.max_iters = iters;
  opts.fixed_iters = true;
  const BarycenterResult fwd = barycenter_log(prob, opts);
  return barycenter_log_backward(prob, fwd.trace, target);
}

}  // namespace otkit
