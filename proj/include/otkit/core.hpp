#pragma once

#include "otkit/types.hpp"

namespace otkit {

/// Stabilized soft-minimum: min(z) - eps * log sum exp(-(z - min z)/eps).
/// The shifted exponent vector has maximum exactly 0, so the sum never
/// overflows.
double soft_min(const Vector& z, double epsilon);

/// Gradient of soft_min: a strictly positive vector summing to 1.
Vector soft_min_grad(const Vector& z, double epsilon);

/// R(f, g) = C - f 1^T - 1 g^T.
Matrix residual_matrix(const Vector& f, const Vector& g, const Matrix& cost);

/// soft_min applied to each row (resp. column) of R.
Vector min_row(const Matrix& R, double epsilon);
Vector min_col(const Matrix& R, double epsilon);

/// Discrete entropy H(P) = -sum P_ij (log P_ij - 1), with 0 log 0 := 0.
double entropy(const Matrix& P);

/// <P, C> - eps * H(P). Accepts eps = 0 (plain transport cost).
double entropic_loss(const Matrix& P, const Matrix& cost, double epsilon);

/// Max-shifted softmax of a vector.
Histogram softmax_vec(const Vector& x);

/// Jacobian of softmax_vec: diag(s) - s s^T. Symmetric, rows sum to 0.
Matrix softmax_jacobian_vec(const Vector& x);

/// Column-wise softmax of a matrix.
HistogramBatch softmax_mat(const Matrix& X);

/// diag(x) * A * diag(y) computed as the outer product (x y^T) .* A.
Matrix diag_scale(const Vector& x, const Matrix& A, const Vector& y);

}  // namespace otkit
