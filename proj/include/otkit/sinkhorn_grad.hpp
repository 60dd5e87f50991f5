#pragma once

#include "otkit/types.hpp"

#include <vector>

namespace otkit {

/// Recorded forward iterates, index 0 = initialization, 1..L = updates.
struct VanillaTrace {
  std::vector<Vector> u, v;
  int length() const { return static_cast<int>(u.size()) - 1; }
};

struct LogTrace {
  std::vector<Vector> f, g;
  int length() const { return static_cast<int>(f.size()) - 1; }
};

struct GradResult {
  Coupling coupling;
  double loss = 0.0;
  Vector grad_a;
};

/// Forward passes that run exactly L iterations and record every iterate.
VanillaTrace run_vanilla_fixed(const Histogram& a, const Histogram& b,
                               const CostKernelPair& ck, int iters);
LogTrace run_log_fixed(const Histogram& a, const Histogram& b,
                       const CostKernelPair& ck, int iters);

/// Backward passes: replay a trace in reverse, accumulating the adjoint of a.
/// The trace is read-only; repeated calls give bit-identical results.
GradResult vanilla_backward(const VanillaTrace& trace, const Histogram& a,
                            const Histogram& b, const CostKernelPair& ck);
GradResult log_backward(const LogTrace& trace, const Histogram& a,
                        const Histogram& b, const CostKernelPair& ck);

/// Gradient of the entropic loss w.r.t. a after exactly `iters` iterations.
GradResult solve_vanilla_with_grad(const Histogram& a, const Histogram& b,
                                   const CostKernelPair& ck, int iters);
GradResult solve_log_with_grad(const Histogram& a, const Histogram& b,
                               const CostKernelPair& ck, int iters);

/// Column-stochastic soft-min gradient stacks of R(f, g).
/// W is M x N: column j is the gradient of the soft minimum of R's column j.
/// X is N x M: column i is the gradient of the soft minimum of R's row i.
Matrix softmin_grad_cols(const Matrix& R, double epsilon);
Matrix softmin_grad_rows_t(const Matrix& R, double epsilon);

}  // namespace otkit
