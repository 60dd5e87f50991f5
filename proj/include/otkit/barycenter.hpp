#pragma once

#include "otkit/types.hpp"

#include <vector>

namespace otkit {

struct BarycenterProblem {
  HistogramBatch atoms;  // M x S, one atom per column
  Histogram weights;     // length S, on the simplex
  CostKernelPair ck;     // M x N
};

void check_barycenter_problem(const BarycenterProblem& prob);

/// Per-iteration history, index 0 = initialization, 1..L = updates.
/// Parallel mode fills U, V, b; log mode fills F, G, log_b.
struct BarycenterTrace {
  std::vector<Matrix> U, V;  // scalings (parallel) or potentials F, G (log)
  std::vector<Vector> b;     // barycenter iterates, log-domain in log mode
  bool log_mode = false;
  int length() const { return static_cast<int>(b.size()) - 1; }
};

struct BarycenterResult {
  Histogram barycenter;
  BarycenterTrace trace;
  int iterations_run = 0;
  bool converged = false;
  double residual = 0.0;
};

/// Sinkhorn-like barycenter iteration: U = A ./ (K V), b the weighted
/// geometric mean of the K^T U columns, V = b ./ (K^T U). The geometric mean
/// itself is taken in the log domain to avoid pow overflow; the update
/// algebra is unchanged.
BarycenterResult barycenter_parallel(const BarycenterProblem& prob,
                                     const SolveOptions& opts);

/// Log-domain barycenter on the stacked potentials F, G and log b.
BarycenterResult barycenter_log(const BarycenterProblem& prob,
                                const SolveOptions& opts);

}  // namespace otkit
