#include "otkit/barycenter.hpp"

#include "otkit/core.hpp"

#include <cmath>

namespace otkit {
namespace {

// column-wise Min_row / Min_col over the stack R(f_s, g_s), s = 1..S
Matrix stacked_min_row(const Matrix& F, const Matrix& G, const Matrix& C,
                       double eps) {
  Matrix out(F.rows(), F.cols());
  for (Eigen::Index s = 0; s < F.cols(); ++s)
    out.col(s) = min_row(residual_matrix(F.col(s), G.col(s), C), eps);
  return out;
}

Matrix stacked_min_col(const Matrix& F, const Matrix& G, const Matrix& C,
                       double eps) {
  Matrix out(G.rows(), G.cols());
  for (Eigen::Index s = 0; s < F.cols(); ++s)
    out.col(s) = min_col(residual_matrix(F.col(s), G.col(s), C), eps);
  return out;
}

}  // namespace

void check_barycenter_problem(const BarycenterProblem& prob) {
  if (prob.atoms.count() != prob.weights.size())
    fail(ErrorCode::ColumnCountMismatch,
         "barycenter: weights length must equal the number of atoms");
  if (prob.atoms.dim() != prob.ck.rows())
    fail(ErrorCode::DimensionMismatch,
         "barycenter: atom length must equal the cost row count");
}

BarycenterResult barycenter_parallel(const BarycenterProblem& prob,
                                     const SolveOptions& opts) {
  check_solve_options(opts);
  check_barycenter_problem(prob);
  const Matrix& K = prob.ck.kernel;
  const Matrix& A = prob.atoms.columns;
  const Vector& w = prob.weights.values;
  const Eigen::Index N = K.cols(), S = A.cols();

  BarycenterTrace trace;
  trace.U.push_back(Matrix::Ones(K.rows(), S));
  trace.V.push_back(Matrix::Ones(N, S));
  trace.b.push_back(Vector::Zero(N));

  Matrix U = trace.U.back(), V = trace.V.back();
  Vector b = trace.b.back();
  int iter = 0;
  bool converged = false;
  double residual = 0.0;
  while (iter < opts.max_iters) {
    Matrix KV = K * V;
    if ((KV.array() == 0.0).any())
      fail(ErrorCode::KernelDegenerate,
           "K V has an exactly-zero entry; use the log-stabilized mode");
    U = A.cwiseQuotient(KV);
    if (!U.allFinite())
      fail(ErrorCode::NumericOverflow,
           "U became non-finite; use the log-stabilized mode");

    Matrix KtU = K.transpose() * U;
    if ((KtU.array() == 0.0).any())
      fail(ErrorCode::KernelDegenerate,
           "K^T U has an exactly-zero entry; use the log-stabilized mode");
    b = (KtU.array().log().matrix() * w).array().exp();
    V = (b * Vector::Ones(S).transpose()).cwiseQuotient(KtU);
    if (!b.allFinite() || !V.allFinite())
      fail(ErrorCode::NumericOverflow,
           "barycenter iterate became non-finite; use the log-stabilized "
           "mode");
    ++iter;

    trace.U.push_back(U);
    trace.V.push_back(V);
    trace.b.push_back(b);

    if (opts.fixed_iters) continue;
    residual = (U.cwiseProduct(K * V) - A).norm();
    if (residual <= opts.tolerance) {
      converged = true;
      break;
    }
  }

  BarycenterResult res;
  res.barycenter = Histogram{b};
  res.trace = std::move(trace);
  res.iterations_run = iter;
  res.converged = converged;
  res.residual = residual;
  return res;
}

BarycenterResult barycenter_log(const BarycenterProblem& prob,
                                const SolveOptions& opts) {
  check_solve_options(opts);
  check_barycenter_problem(prob);
  const Matrix& C = prob.ck.cost;
  const double eps = prob.ck.epsilon;
  const Matrix& A = prob.atoms.columns;
  const Vector& w = prob.weights.values;
  const Eigen::Index N = C.cols(), S = A.cols();
  if ((A.array() <= 0.0).any())
    fail(ErrorCode::NonPositiveHistogram,
         "log-domain barycenter needs strictly positive atoms");

  const Matrix log_A = A.array().log();

  BarycenterTrace trace;
  trace.log_mode = true;
  // G starts at zero like the potentials in the plain log solver; the
  // all-ones start breaks the f = eps log u correspondence at iteration 0
  trace.U.push_back(Matrix::Zero(C.rows(), S));  // F
  trace.V.push_back(Matrix::Zero(N, S));         // G
  trace.b.push_back(Vector::Zero(N));            // log b

  Matrix F = trace.U.back(), G = trace.V.back();
  Vector log_b = trace.b.back();
  int iter = 0;
  bool converged = false;
  double residual = 0.0;
  while (iter < opts.max_iters) {
    F += eps * log_A + stacked_min_row(F, G, C, eps);
    const Matrix Rcol = stacked_min_col(F, G, C, eps);
    log_b = -(G * w) / eps - (Rcol * w) / eps;
    G += eps * log_b * Vector::Ones(S).transpose() + Rcol;
    ++iter;

    trace.U.push_back(F);
    trace.V.push_back(G);
    trace.b.push_back(log_b);

    if (opts.fixed_iters) continue;
    residual = (-stacked_min_row(F, G, C, eps) / eps - log_A).norm();
    if (residual <= opts.tolerance) {
      converged = true;
      break;
    }
  }

  BarycenterResult res;
  res.barycenter = Histogram{log_b.array().exp()};
  res.trace = std::move(trace);
  res.iterations_run = iter;
  res.converged = converged;
  res.residual = residual;
  return res;
}

}  // namespace otkit
