#include "otkit/gradcheck.hpp"

#include "otkit/barycenter_grad.hpp"
#include "otkit/core.hpp"
#include "otkit/rng.hpp"
#include "otkit/sinkhorn.hpp"
#include "otkit/sinkhorn_grad.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace otkit {
namespace {

// simplex floor for random instances; keeps perturbed entries positive and
// the finite-difference step well inside the domain
constexpr double kSimplexFloor = 1e-2;

struct ProbeAccumulator {
  GradcheckGradientReport report;
  GradcheckWorstCase* worst;
  GradcheckWorstCase candidate;

  explicit ProbeAccumulator(std::string name, GradcheckWorstCase* w)
      : worst(w) {
    report.gradient = std::move(name);
  }

  void observe(double analytic, double fd, int trial,
               const std::function<void(GradcheckWorstCase&)>& snapshot) {
    const double rel = gradcheck_rel_err(analytic, fd);
    if (rel > report.max_rel_err) {
      report.max_rel_err = rel;
      report.worst_trial = trial;
      if (rel > worst->rel_err) {
        candidate.trial = trial;
        candidate.gradient = report.gradient;
        candidate.rel_err = rel;
        snapshot(candidate);
        *worst = candidate;
      }
    }
  }
};

// tangent probe along e_i - e_j; the perturbed point stays on the simplex
double tangent_fd(const std::function<double(const Vector&)>& loss,
                  const Vector& base, Eigen::Index i, Eigen::Index j,
                  double h) {
  Vector plus = base, minus = base;
  plus[i] += h;
  plus[j] -= h;
  minus[i] -= h;
  minus[j] += h;
  return (loss(plus) - loss(minus)) / (2.0 * h);
}

void check_sinkhorn(const GradcheckOptions& opts, bool log_mode,
                    GradcheckReport& out) {
  Rng rng(opts.seed);
  ProbeAccumulator acc("grad_a", &out.worst);

  for (int trial = 0; trial < opts.trials; ++trial) {
    const Histogram a{rng.simplex_positive(opts.dim_m, kSimplexFloor)};
    const Histogram b{rng.simplex_positive(opts.dim_n, kSimplexFloor)};
    const Matrix cost = rng.matrix_uniform(opts.dim_m, opts.dim_n, 0.0, 1.0);
    const CostKernelPair ck = build_kernel(cost, opts.epsilon);

    Vector analytic = (log_mode ? solve_log_with_grad(a, b, ck, opts.iters)
                                : solve_vanilla_with_grad(a, b, ck, opts.iters))
                          .grad_a;
    if (opts.corrupt) analytic[0] += 1e-2;

    SolveOptions fwd;
    fwd.max_iters = opts.iters;
    fwd.fixed_iters = true;
    const auto loss = [&](const Vector& av) {
      const Histogram ah{av};
      return (log_mode ? solve_log(ah, b, ck, fwd)
                       : solve_vanilla(ah, b, ck, fwd))
          .loss;
    };

    const auto snapshot = [&](GradcheckWorstCase& w) {
      w.cost = cost;
      w.epsilon = opts.epsilon;
      w.iters = opts.iters;
      w.a = a.values;
      w.b = b.values;
    };
    for (Eigen::Index i = 0; i < a.size(); ++i) {
      const Eigen::Index j = (i + 1) % a.size();
      const double fd = tangent_fd(loss, a.values, i, j, opts.h);
      acc.observe(analytic[i] - analytic[j], fd, trial, snapshot);
    }
  }
  out.gradients.push_back(acc.report);
}

void check_barycenter(const GradcheckOptions& opts, bool log_mode,
                      GradcheckReport& out) {
  Rng rng(opts.seed);
  ProbeAccumulator acc_atoms("grad_atoms", &out.worst);
  ProbeAccumulator acc_weights("grad_weights", &out.worst);

  for (int trial = 0; trial < opts.trials; ++trial) {
    Matrix atoms(opts.dim_m, opts.dim_s);
    for (int s = 0; s < opts.dim_s; ++s)
      atoms.col(s) = rng.simplex_positive(opts.dim_m, kSimplexFloor);
    const Vector weights = rng.simplex_positive(opts.dim_s, kSimplexFloor);
    const Matrix cost = rng.matrix_uniform(opts.dim_m, opts.dim_n, 0.0, 1.0);
    const Histogram target{rng.simplex(opts.dim_n)};
    const CostKernelPair ck = build_kernel(cost, opts.epsilon);

    const BarycenterProblem prob{HistogramBatch{atoms}, Histogram{weights},
                                 ck};
    BarycenterGradResult grad =
        log_mode ? barycenter_log_grad(prob, target, opts.iters)
                 : barycenter_parallel_grad(prob, target, opts.iters);
    if (opts.corrupt) grad.grad_atoms(0, 0) += 1e-2;

    SolveOptions fwd;
    fwd.max_iters = opts.iters;
    fwd.fixed_iters = true;
    const auto forward_loss = [&](const Matrix& atoms_p, const Vector& w_p) {
      const BarycenterProblem p{HistogramBatch{atoms_p}, Histogram{w_p}, ck};
      const BarycenterResult r =
          log_mode ? barycenter_log(p, fwd) : barycenter_parallel(p, fwd);
      return (r.barycenter.values - target.values).squaredNorm();
    };

    const auto snapshot = [&](GradcheckWorstCase& w) {
      w.cost = cost;
      w.epsilon = opts.epsilon;
      w.iters = opts.iters;
      w.atoms = atoms;
      w.weights = weights;
      w.target = target.values;
    };

    for (int s = 0; s < opts.dim_s; ++s) {
      const auto loss_col = [&](const Vector& col) {
        Matrix perturbed = atoms;
        perturbed.col(s) = col;
        return forward_loss(perturbed, weights);
      };
      for (Eigen::Index i = 0; i < opts.dim_m; ++i) {
        const Eigen::Index j = (i + 1) % opts.dim_m;
        const double fd = tangent_fd(loss_col, atoms.col(s), i, j, opts.h);
        acc_atoms.observe(grad.grad_atoms(i, s) - grad.grad_atoms(j, s), fd,
                          trial, snapshot);
      }
    }

    if (opts.dim_s >= 2) {
      const auto loss_w = [&](const Vector& w_p) {
        return forward_loss(atoms, w_p);
      };
      for (Eigen::Index i = 0; i < opts.dim_s; ++i) {
        const Eigen::Index j = (i + 1) % opts.dim_s;
        const double fd = tangent_fd(loss_w, weights, i, j, opts.h);
        acc_weights.observe(grad.grad_weights[i] - grad.grad_weights[j], fd,
                            trial, snapshot);
      }
    }
  }
  out.gradients.push_back(acc_atoms.report);
  out.gradients.push_back(acc_weights.report);
}

void check_wdl_alpha(const GradcheckOptions& opts, GradcheckReport& out) {
  if (opts.dim_m != opts.dim_n)
    fail(ErrorCode::InvalidConfig,
         "wdl-alpha gradcheck needs square dims (documents and atoms share "
         "one support)");
  Rng rng(opts.seed);
  ProbeAccumulator acc("grad_alpha", &out.worst);
  const Eigen::Index N = opts.dim_n, S = opts.dim_s;

  for (int trial = 0; trial < opts.trials; ++trial) {
    Matrix alpha(N, S);
    for (Eigen::Index j = 0; j < S; ++j)
      for (Eigen::Index i = 0; i < N; ++i) alpha(i, j) = 0.5 * rng.normal();
    Vector lambda_col(S);
    for (Eigen::Index i = 0; i < S; ++i) lambda_col[i] = 0.5 * rng.normal();
    const Histogram w = softmax_vec(lambda_col);
    const Matrix cost = rng.matrix_uniform(N, N, 0.0, 1.0);
    const Histogram target{rng.simplex(N)};
    const CostKernelPair ck = build_kernel(cost, opts.epsilon);

    const BarycenterProblem prob{softmax_mat(alpha), w, ck};
    const BarycenterGradResult grad =
        barycenter_parallel_grad(prob, target, opts.iters);
    Matrix g_alpha(N, S);
    for (Eigen::Index s = 0; s < S; ++s)
      g_alpha.col(s) =
          softmax_jacobian_vec(alpha.col(s)) * grad.grad_atoms.col(s);
    if (opts.corrupt) g_alpha(0, 0) += 1e-2;

    SolveOptions fwd;
    fwd.max_iters = opts.iters;
    fwd.fixed_iters = true;
    const auto loss = [&](const Matrix& alpha_p) {
      const BarycenterProblem p{softmax_mat(alpha_p), w, ck};
      const BarycenterResult r = barycenter_parallel(p, fwd);
      return (r.barycenter.values - target.values).squaredNorm();
    };

    const auto snapshot = [&](GradcheckWorstCase& wc) {
      wc.cost = cost;
      wc.epsilon = opts.epsilon;
      wc.iters = opts.iters;
      wc.alpha = alpha;
      wc.lambda_col = lambda_col;
      wc.target = target.values;
    };

    // alpha is unconstrained, so probe each logit directly
    for (Eigen::Index s = 0; s < S; ++s)
      for (Eigen::Index i = 0; i < N; ++i) {
        Matrix plus = alpha, minus = alpha;
        plus(i, s) += opts.h;
        minus(i, s) -= opts.h;
        const double fd = (loss(plus) - loss(minus)) / (2.0 * opts.h);
        acc.observe(g_alpha(i, s), fd, trial, snapshot);
      }
  }
  out.gradients.push_back(acc.report);
}

}  // namespace

double gradcheck_rel_err(double analytic, double fd) {
  const double scale =
      std::max({std::abs(analytic), std::abs(fd), 1e-6});
  return std::abs(analytic - fd) / scale;
}

GradcheckTarget parse_gradcheck_target(const std::string& name) {
  if (name == "sinkhorn-vanilla") return GradcheckTarget::SinkhornVanilla;
  if (name == "sinkhorn-log") return GradcheckTarget::SinkhornLog;
  if (name == "barycenter-parallel") return GradcheckTarget::BarycenterParallel;
  if (name == "barycenter-log") return GradcheckTarget::BarycenterLog;
  if (name == "wdl-alpha") return GradcheckTarget::WdlAlpha;
  fail(ErrorCode::InvalidConfig, "unknown gradcheck target: " + name);
}

std::string gradcheck_target_name(GradcheckTarget target) {
  switch (target) {
    case GradcheckTarget::SinkhornVanilla: return "sinkhorn-vanilla";
    case GradcheckTarget::SinkhornLog: return "sinkhorn-log";
    case GradcheckTarget::BarycenterParallel: return "barycenter-parallel";
    case GradcheckTarget::BarycenterLog: return "barycenter-log";
    case GradcheckTarget::WdlAlpha: return "wdl-alpha";
  }
  fail(ErrorCode::InvalidConfig, "unknown gradcheck target");
}

GradcheckReport run_gradcheck(const GradcheckOptions& opts) {
  if (opts.trials < 1)
    fail(ErrorCode::InvalidConfig, "gradcheck needs at least one trial");
  if (!(opts.h > 0.0) || !(opts.tol > 0.0))
    fail(ErrorCode::InvalidConfig, "gradcheck step and tolerance must be > 0");
  if (opts.dim_m < 2 || opts.dim_n < 2 || opts.dim_s < 1)
    fail(ErrorCode::InvalidConfig, "gradcheck dims too small");

  GradcheckReport report;
  report.tol = opts.tol;
  switch (opts.which) {
    case GradcheckTarget::SinkhornVanilla:
      check_sinkhorn(opts, false, report);
      break;
    case GradcheckTarget::SinkhornLog:
      check_sinkhorn(opts, true, report);
      break;
    case GradcheckTarget::BarycenterParallel:
      check_barycenter(opts, false, report);
      break;
    case GradcheckTarget::BarycenterLog:
      check_barycenter(opts, true, report);
      break;
    case GradcheckTarget::WdlAlpha:
      check_wdl_alpha(opts, report);
      break;
  }
  report.pass = true;
  for (const auto& g : report.gradients)
    if (g.max_rel_err > opts.tol) report.pass = false;
  return report;
}

}  // namespace otkit
