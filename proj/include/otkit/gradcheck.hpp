#pragma once

#include "otkit/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace otkit {

enum class GradcheckTarget {
  SinkhornVanilla,
  SinkhornLog,
  BarycenterParallel,
  BarycenterLog,
  WdlAlpha,
};

GradcheckTarget parse_gradcheck_target(const std::string& name);
std::string gradcheck_target_name(GradcheckTarget target);

struct GradcheckOptions {
  GradcheckTarget which = GradcheckTarget::SinkhornVanilla;
  double h = 1e-6;
  double tol = 1e-4;
  int trials = 20;
  std::uint64_t seed = 0;
  double epsilon = 0.5;
  int iters = 100;
  int dim_m = 6;
  int dim_n = 7;
  int dim_s = 2;
  // test hook: perturb the analytic gradient so the harness must flag it
  bool corrupt = false;
};

/// Inputs of the worst trial, for the reproducer dump. Only the fields used
/// by the checked target are populated.
struct GradcheckWorstCase {
  int trial = -1;
  std::string gradient;  // which gradient block produced the worst error
  double rel_err = 0.0;
  Matrix cost;
  double epsilon = 0.0;
  int iters = 0;
  Vector a, b;
  Matrix atoms;
  Vector weights;
  Vector target;
  Matrix alpha;
  Vector lambda_col;
};

struct GradcheckGradientReport {
  std::string gradient;
  double max_rel_err = 0.0;
  int worst_trial = -1;
};

struct GradcheckReport {
  std::vector<GradcheckGradientReport> gradients;
  GradcheckWorstCase worst;
  double tol = 0.0;
  bool pass = false;
};

/// Compare the analytic gradients of the requested solver against central
/// finite differences over seeded random instances. Histogram-valued inputs
/// are probed along simplex tangents (two coordinates moved oppositely);
/// unconstrained logits are probed coordinate-wise.
GradcheckReport run_gradcheck(const GradcheckOptions& opts);

/// max over probes of |analytic - fd| / max(|analytic|, |fd|, 1e-6).
double gradcheck_rel_err(double analytic, double fd);

}  // namespace otkit
