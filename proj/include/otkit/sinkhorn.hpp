#pragma once

#include "otkit/types.hpp"

#include <optional>
#include <utility>
#include <vector>

namespace otkit {

/// Scaling variables (u, v) and their dual potentials f = eps log u,
/// g = eps log v.
struct ScalingState {
  Vector u, v;
  Vector f, g;
  int iteration = 0;
};

struct SinkhornResult {
  Coupling coupling;
  ScalingState state;
  int iterations_run = 0;
  bool converged = false;
  // 2-norms of (P 1 - a) and (P^T 1 - b) at the returned coupling.
  std::pair<double, double> marginal_error{0.0, 0.0};
  double loss = 0.0;
};

/// Multiplicative Sinkhorn: u = a ./ (K v), v = b ./ (K^T u) until both
/// marginal residuals drop below opts.tolerance or opts.max_iters is hit.
/// `v0` overrides the all-ones initialization (the coupling is invariant to
/// the choice; u and v themselves are only defined up to a constant).
SinkhornResult solve_vanilla(const Histogram& a, const Histogram& b,
                             const CostKernelPair& ck, const SolveOptions& opts,
                             const std::optional<Vector>& v0 = std::nullopt);

/// Log-domain Sinkhorn on the dual potentials; stable for any epsilon.
SinkhornResult solve_log(const Histogram& a, const Histogram& b,
                         const CostKernelPair& ck, const SolveOptions& opts);

/// Whole-matrix Sinkhorn over S margin pairs at once. Termination is global
/// (Frobenius norm over all columns), so every column runs the same number
/// of iterations.
std::vector<SinkhornResult> solve_parallel(const HistogramBatch& A,
                                           const HistogramBatch& B,
                                           const CostKernelPair& ck,
                                           const SolveOptions& opts);

}  // namespace otkit
