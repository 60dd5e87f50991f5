#pragma once

#include "otkit/barycenter.hpp"

namespace otkit {

struct BarycenterGradResult {
  Histogram barycenter;
  double loss = 0.0;      // ||b - target||^2
  Matrix grad_atoms;      // M x S
  Vector grad_weights;    // length S
};

/// Backward passes over a recorded fixed-length trace. The trace is
/// read-only; repeated calls give bit-identical gradients.
BarycenterGradResult barycenter_parallel_backward(
    const BarycenterProblem& prob, const BarycenterTrace& trace,
    const Histogram& target);
BarycenterGradResult barycenter_log_backward(const BarycenterProblem& prob,
                                             const BarycenterTrace& trace,
                                             const Histogram& target);

/// Gradients of ||b - target||^2 w.r.t. the atoms and the weights after
/// exactly `iters` barycenter iterations.
BarycenterGradResult barycenter_parallel_grad(const BarycenterProblem& prob,
                                              const Histogram& target,
                                              int iters);
BarycenterGradResult barycenter_log_grad(const BarycenterProblem& prob,
                                         const Histogram& target, int iters);

}  // namespace otkit
