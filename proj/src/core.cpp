#include "otkit/core.hpp"

#include <cmath>

namespace otkit {

Histogram validate_histogram(const Vector& values, bool strict_positive,
                             bool renormalize) {
  if (values.size() == 0)
    fail(ErrorCode::EmptyVector, "histogram must be nonempty");
  if ((values.array() < 0.0).any())
    fail(ErrorCode::NegativeEntry, "histogram has a negative entry");

  Vector v = values;
  if (renormalize) {
    if (strict_positive) v = v.array().max(1e-16);
    const double sum = v.sum();
    if (!(sum > 0.0))
      fail(ErrorCode::NotNormalized, "histogram has zero total mass");
    v /= sum;
  } else {
    const double sum = v.sum();
    if (std::abs(sum - 1.0) > 1e-9)
      fail(ErrorCode::NotNormalized,
           "histogram mass deviates from 1 by more than 1e-9 "
           "(pass renormalize to rescale)");
    // absorb sub-tolerance drift so the unit-mass invariant holds exactly;
    // a no-op when the sum is already 1.0
    v /= sum;
  }
  if (strict_positive && (v.array() < 1e-16).any())
    fail(ErrorCode::ZeroEntryInLogMode,
         "histogram has a (near-)zero entry; log-domain solvers need strictly "
         "positive mass (pass renormalize to clamp)");
  return Histogram{std::move(v)};
}

HistogramBatch validate_histogram_batch(const Matrix& columns,
                                        bool strict_positive,
                                        bool renormalize) {
  if (columns.size() == 0)
    fail(ErrorCode::EmptyMatrix, "histogram batch must be nonempty");
  Matrix out(columns.rows(), columns.cols());
  for (Eigen::Index s = 0; s < columns.cols(); ++s)
    out.col(s) =
        validate_histogram(columns.col(s), strict_positive, renormalize).values;
  return HistogramBatch{std::move(out)};
}

CostKernelPair build_kernel(const Matrix& cost, double epsilon) {
  if (!(epsilon > 0.0))
    fail(ErrorCode::NonPositiveEpsilon, "epsilon must be positive");
  if ((cost.array() < 0.0).any())
    fail(ErrorCode::NegativeEntry, "cost matrix has a negative entry");
  CostKernelPair ck;
  ck.cost = cost;
  ck.epsilon = epsilon;
  // std::exp per entry: Eigen's vectorized exp saturates large negative
  // arguments at a subnormal floor instead of underflowing to 0, which would
  // mask kernel degeneracy
  ck.kernel = cost.unaryExpr(
      [epsilon](double c) { return std::exp(-c / epsilon); });
  ck.underflow = (ck.kernel.array() == 0.0).any();
  return ck;
}

double soft_min(const Vector& z, double epsilon) {
  if (z.size() == 0) fail(ErrorCode::EmptyVector, "soft_min of empty vector");
  const double zmin = z.minCoeff();
  const double lse = ((zmin - z.array()) / epsilon).exp().sum();
  return zmin - epsilon * std::log(lse);
}

Vector soft_min_grad(const Vector& z, double epsilon) {
  if (z.size() == 0)
    fail(ErrorCode::EmptyVector, "soft_min_grad of empty vector");
  const double zmin = z.minCoeff();
  Vector e = ((zmin - z.array()) / epsilon).exp();
  return e / e.sum();
}

Matrix residual_matrix(const Vector& f, const Vector& g, const Matrix& cost) {
  if (f.size() != cost.rows() || g.size() != cost.cols())
    fail(ErrorCode::DimensionMismatch, "residual_matrix: shapes disagree");
  return cost - f * Vector::Ones(g.size()).transpose() -
         Vector::Ones(f.size()) * g.transpose();
}

Vector min_row(const Matrix& R, double epsilon) {
  if (R.size() == 0) fail(ErrorCode::EmptyMatrix, "min_row of empty matrix");
  Vector out(R.rows());
  for (Eigen::Index i = 0; i < R.rows(); ++i)
    out[i] = soft_min(R.row(i).transpose(), epsilon);
  return out;
}

Vector min_col(const Matrix& R, double epsilon) {
  if (R.size() == 0) fail(ErrorCode::EmptyMatrix, "min_col of empty matrix");
  Vector out(R.cols());
  for (Eigen::Index j = 0; j < R.cols(); ++j)
    out[j] = soft_min(R.col(j), epsilon);
  return out;
}

double entropy(const Matrix& P) {
  if ((P.array() < 0.0).any())
    fail(ErrorCode::NegativeEntry, "entropy needs nonnegative entries");
  double h = 0.0;
  for (Eigen::Index j = 0; j < P.cols(); ++j)
    for (Eigen::Index i = 0; i < P.rows(); ++i) {
      const double p = P(i, j);
      if (p > 0.0) h -= p * (std::log(p) - 1.0);
    }
  return h;
}

double entropic_loss(const Matrix& P, const Matrix& cost, double epsilon) {
  if (P.rows() != cost.rows() || P.cols() != cost.cols())
    fail(ErrorCode::DimensionMismatch, "entropic_loss: shapes disagree");
  double loss = P.cwiseProduct(cost).sum();
  if (epsilon != 0.0) loss -= epsilon * entropy(P);
  return loss;
}

Histogram softmax_vec(const Vector& x) {
  if (x.size() == 0) fail(ErrorCode::EmptyVector, "softmax of empty vector");
  const double xmax = x.maxCoeff();
  Vector e = (x.array() - xmax).exp();
  return Histogram{e / e.sum()};
}

Matrix softmax_jacobian_vec(const Vector& x) {
  const Vector s = softmax_vec(x).values;
  Matrix J = -s * s.transpose();
  J.diagonal() += s;
  return J;
}

HistogramBatch softmax_mat(const Matrix& X) {
  if (X.size() == 0) fail(ErrorCode::EmptyMatrix, "softmax of empty matrix");
  Matrix out(X.rows(), X.cols());
  for (Eigen::Index j = 0; j < X.cols(); ++j)
    out.col(j) = softmax_vec(X.col(j)).values;
  return HistogramBatch{std::move(out)};
}

Matrix diag_scale(const Vector& x, const Matrix& A, const Vector& y) {
  if (x.size() != A.rows() || y.size() != A.cols())
    fail(ErrorCode::DimensionMismatch, "diag_scale: shapes disagree");
  return (x * y.transpose()).cwiseProduct(A);
}

}  // namespace otkit
