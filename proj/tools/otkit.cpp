#include "otkit/barycenter_grad.hpp"
#include "otkit/core.hpp"
#include "otkit/csv_io.hpp"
#include "otkit/gradcheck.hpp"
#include "otkit/run_config.hpp"
#include "otkit/sinkhorn.hpp"
#include "otkit/sinkhorn_grad.hpp"
#include "otkit/wdl.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <Eigen/Core>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <string>

namespace {

using nlohmann::json;
using namespace otkit;

constexpr int kExitOk = 0;
constexpr int kExitGradcheckFail = 1;
constexpr int kExitValidation = 2;
constexpr int kExitNumeric = 3;

json vector_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

json matrix_json(const Matrix& m) {
  json out = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    out.push_back(row);
  }
  return out;
}

void write_json(const std::string& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::ParseError, "cannot write " + path);
  out << j.dump(2) << '\n';
}

json sinkhorn_result_json(const SinkhornResult& res) {
  return json{{"P", matrix_json(res.coupling.plan)},
              {"u", vector_json(res.state.u)},
              {"v", vector_json(res.state.v)},
              {"f", vector_json(res.state.f)},
              {"g", vector_json(res.state.g)},
              {"loss", res.loss},
              {"iterations", res.iterations_run},
              {"converged", res.converged},
              {"marginal_error", {{"row", res.marginal_error.first},
                                  {"col", res.marginal_error.second}}}};
}

int cmd_sinkhorn(const SinkhornRunConfig& cfg) {
  const Matrix cost = read_matrix_csv(cfg.cost_path);
  const CostKernelPair ck = build_kernel(cost, cfg.epsilon);
  SolveOptions opts;
  opts.max_iters = cfg.max_iters;
  opts.tolerance = cfg.tolerance;
  opts.mode = cfg.mode;

  json out{{"command", "sinkhorn"}, {"mode", mode_name(cfg.mode)}};
  RunConfig run;
  run.command = "sinkhorn";
  run.sinkhorn = cfg;
  out["config"] = to_json(run);

  if (cfg.mode == SolveMode::Parallel) {
    if (cfg.grad)
      fail(ErrorCode::InvalidConfig,
           "--grad supports vanilla and log modes only");
    const HistogramBatch A = validate_histogram_batch(read_matrix_csv(cfg.a_path));
    const HistogramBatch B = validate_histogram_batch(read_matrix_csv(cfg.b_path));
    json results = json::array();
    for (const SinkhornResult& res : solve_parallel(A, B, ck, opts))
      results.push_back(sinkhorn_result_json(res));
    out["results"] = results;
  } else {
    const bool log_mode = cfg.mode == SolveMode::Log;
    const Histogram a =
        validate_histogram(read_vector_csv(cfg.a_path), log_mode);
    const Histogram b =
        validate_histogram(read_vector_csv(cfg.b_path), log_mode);
    if (cfg.grad) {
      // fixed-length run: the backward recursion indexes the full trace
      opts.fixed_iters = true;
      const SinkhornResult fwd = log_mode ? solve_log(a, b, ck, opts)
                                          : solve_vanilla(a, b, ck, opts);
      out.update(sinkhorn_result_json(fwd));
      const GradResult grad =
          log_mode ? solve_log_with_grad(a, b, ck, cfg.max_iters)
                   : solve_vanilla_with_grad(a, b, ck, cfg.max_iters);
      out["grad_a"] = vector_json(grad.grad_a);
    } else {
      const SinkhornResult res = log_mode ? solve_log(a, b, ck, opts)
                                          : solve_vanilla(a, b, ck, opts);
      out.update(sinkhorn_result_json(res));
    }
  }
  write_json(cfg.out_path, out);
  return kExitOk;
}

int cmd_barycenter(const BarycenterRunConfig& cfg) {
  const Matrix cost = read_matrix_csv(cfg.cost_path);
  const CostKernelPair ck = build_kernel(cost, cfg.epsilon);
  const bool log_mode = cfg.mode == SolveMode::Log;
  if (cfg.mode == SolveMode::Vanilla)
    fail(ErrorCode::InvalidConfig, "barycenter modes are parallel and log");

  const HistogramBatch atoms =
      validate_histogram_batch(read_matrix_csv(cfg.atoms_path), log_mode);
  const Histogram weights =
      validate_histogram(read_vector_csv(cfg.weights_path));
  const BarycenterProblem prob{atoms, weights, ck};

  SolveOptions opts;
  opts.max_iters = cfg.max_iters;
  opts.tolerance = cfg.tolerance;

  if (cfg.grad) {
    if (cfg.target_path.empty() || cfg.grad_out_path.empty())
      fail(ErrorCode::InvalidConfig,
           "--grad needs --target and --grad-out");
    const Histogram target =
        validate_histogram(read_vector_csv(cfg.target_path));
    const BarycenterGradResult grad =
        log_mode ? barycenter_log_grad(prob, target, cfg.max_iters)
                 : barycenter_parallel_grad(prob, target, cfg.max_iters);
    write_vector_csv(cfg.out_path, grad.barycenter.values);

    RunConfig run;
    run.command = "barycenter";
    run.barycenter = cfg;
    write_json(cfg.grad_out_path,
               json{{"command", "barycenter"},
                    {"config", to_json(run)},
                    {"loss", grad.loss},
                    {"barycenter", vector_json(grad.barycenter.values)},
                    {"grad_atoms", matrix_json(grad.grad_atoms)},
                    {"grad_weights", vector_json(grad.grad_weights)}});
  } else {
    const BarycenterResult res = log_mode ? barycenter_log(prob, opts)
                                          : barycenter_parallel(prob, opts);
    write_vector_csv(cfg.out_path, res.barycenter.values);
  }
  return kExitOk;
}

int cmd_wdl(const WdlRunConfig& cfg) {
  const Matrix data = read_matrix_csv(cfg.data_path);
  const Matrix cost = read_matrix_csv(cfg.cost_path);
  const CostKernelPair ck = build_kernel(cost, cfg.epsilon);

  WdlConfig wcfg;
  wcfg.topics = cfg.topics;
  wcfg.epsilon = cfg.epsilon;
  wcfg.inner_iters = cfg.inner_iters;
  wcfg.mode = cfg.mode;
  wcfg.optimizer = cfg.optimizer;
  wcfg.hyper.lr = cfg.lr;
  wcfg.batch_size = cfg.batch;
  wcfg.steps = cfg.steps;
  wcfg.seed = cfg.seed;
  wcfg.init_sigma = cfg.init_sigma;
  wcfg.lambda_broadcast = cfg.lambda_broadcast;
  if (cfg.init == "zeros")
    wcfg.init = WdlInit::Zeros;
  else if (cfg.init == "gaussian")
    wcfg.init = WdlInit::Gaussian;
  else
    fail(ErrorCode::InvalidConfig, "unknown init scheme: " + cfg.init);

  const WdlResult res = wdl_train(data, ck, wcfg);
  write_matrix_csv(cfg.out_atoms, res.atoms.columns);
  write_matrix_csv(cfg.out_weights, res.weights.columns);
  Vector losses(static_cast<Eigen::Index>(res.loss_history.size()));
  for (Eigen::Index i = 0; i < losses.size(); ++i)
    losses[i] = res.loss_history[static_cast<std::size_t>(i)];
  write_vector_csv(cfg.loss_out, losses);
  return kExitOk;
}

json worst_case_json(const GradcheckWorstCase& worst) {
  json j{{"trial", worst.trial},
         {"gradient", worst.gradient},
         {"rel_err", worst.rel_err},
         {"epsilon", worst.epsilon},
         {"iters", worst.iters}};
  if (worst.cost.size()) j["cost"] = matrix_json(worst.cost);
  if (worst.a.size()) j["a"] = vector_json(worst.a);
  if (worst.b.size()) j["b"] = vector_json(worst.b);
  if (worst.atoms.size()) j["atoms"] = matrix_json(worst.atoms);
  if (worst.weights.size()) j["weights"] = vector_json(worst.weights);
  if (worst.target.size()) j["target"] = vector_json(worst.target);
  if (worst.alpha.size()) j["alpha"] = matrix_json(worst.alpha);
  if (worst.lambda_col.size()) j["lambda_col"] = vector_json(worst.lambda_col);
  return j;
}

int cmd_gradcheck(const GradcheckRunConfig& cfg, bool corrupt) {
  GradcheckOptions opts;
  opts.which = parse_gradcheck_target(cfg.which);
  opts.h = cfg.h;
  opts.tol = cfg.tol;
  opts.trials = cfg.trials;
  opts.seed = cfg.seed;
  opts.epsilon = cfg.epsilon;
  opts.iters = cfg.iters;
  opts.corrupt = corrupt;
  if (std::sscanf(cfg.dims.c_str(), "%dx%dx%d", &opts.dim_m, &opts.dim_n,
                  &opts.dim_s) != 3)
    fail(ErrorCode::InvalidConfig, "--dims must look like MxNxS");

  const GradcheckReport report = run_gradcheck(opts);
  for (const auto& g : report.gradients)
    std::cout << cfg.which << " " << g.gradient
              << " max_rel_err=" << format_double(g.max_rel_err)
              << " tol=" << format_double(report.tol)
              << (g.max_rel_err <= report.tol ? " ok" : " FAIL") << "\n";

  if (!report.pass) {
    write_json(cfg.reproducer_path, worst_case_json(report.worst));
    std::cerr << "gradcheck failed; worst instance written to "
              << cfg.reproducer_path << "\n";
    return kExitGradcheckFail;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  if (const char* threads = std::getenv("OTKIT_THREADS"))
    Eigen::setNbThreads(std::atoi(threads));

  CLI::App app{"Entropic optimal transport toolkit: Sinkhorn solvers, "
               "Wasserstein barycenters, hand-derived gradients, and "
               "Wasserstein dictionary learning"};
  app.require_subcommand(1);

  SinkhornRunConfig sk;
  auto* sk_cmd = app.add_subcommand("sinkhorn", "Solve one transport problem");
  sk_cmd->add_option("--a", sk.a_path, "Source histogram CSV")->required();
  sk_cmd->add_option("--b", sk.b_path, "Target histogram CSV")->required();
  sk_cmd->add_option("--cost", sk.cost_path, "Cost matrix CSV")->required();
  sk_cmd->add_option("--epsilon", sk.epsilon, "Entropic regularization")
      ->required();
  sk_cmd->add_option("--mode", sk.mode, "vanilla|log|parallel")
      ->transform(CLI::CheckedTransformer(
          std::map<std::string, SolveMode>{{"vanilla", SolveMode::Vanilla},
                                           {"log", SolveMode::Log},
                                           {"parallel", SolveMode::Parallel}}));
  sk_cmd->add_option("--tol", sk.tolerance, "Convergence tolerance");
  sk_cmd->add_option("--max-iters", sk.max_iters, "Iteration cap");
  sk_cmd->add_flag("--grad", sk.grad,
                   "Also compute d(loss)/da over exactly max-iters iterations");
  sk_cmd->add_option("--out", sk.out_path, "Result JSON path")->required();

  BarycenterRunConfig bc;
  auto* bc_cmd =
      app.add_subcommand("barycenter", "Entropic Wasserstein barycenter");
  bc_cmd->add_option("--atoms", bc.atoms_path, "Atom matrix CSV (one per column)")
      ->required();
  bc_cmd->add_option("--weights", bc.weights_path, "Weight vector CSV")
      ->required();
  bc_cmd->add_option("--cost", bc.cost_path, "Cost matrix CSV")->required();
  bc_cmd->add_option("--epsilon", bc.epsilon, "Entropic regularization")
      ->required();
  bc_cmd->add_option("--mode", bc.mode, "parallel|log")
      ->transform(CLI::CheckedTransformer(std::map<std::string, SolveMode>{
          {"parallel", SolveMode::Parallel}, {"log", SolveMode::Log}}));
  bc_cmd->add_option("--tol", bc.tolerance, "Convergence tolerance");
  bc_cmd->add_option("--max-iters", bc.max_iters, "Iteration cap");
  bc_cmd->add_flag("--grad", bc.grad,
                   "Also compute gradients of ||b - target||^2");
  bc_cmd->add_option("--target", bc.target_path, "Target histogram CSV");
  bc_cmd->add_option("--grad-out", bc.grad_out_path, "Gradient JSON path");
  bc_cmd->add_option("--out", bc.out_path, "Barycenter CSV path")->required();

  WdlRunConfig wd;
  bool wdl_broadcast = false;
  auto* wd_cmd =
      app.add_subcommand("wdl", "Train a Wasserstein dictionary model");
  wd_cmd->add_option("--data", wd.data_path, "Document matrix CSV (N x M)")
      ->required();
  wd_cmd->add_option("--cost", wd.cost_path, "Square cost matrix CSV (N x N)")
      ->required();
  wd_cmd->add_option("--topics", wd.topics, "Number of atoms S")->required();
  wd_cmd->add_option("--epsilon", wd.epsilon, "Entropic regularization")
      ->required();
  wd_cmd->add_option("--inner-iters", wd.inner_iters,
                     "Barycenter iterations per evaluation");
  wd_cmd->add_option("--mode", wd.mode, "parallel|log")
      ->transform(CLI::CheckedTransformer(std::map<std::string, SolveMode>{
          {"parallel", SolveMode::Parallel}, {"log", SolveMode::Log}}));
  wd_cmd->add_option("--optimizer", wd.optimizer, "sgd|adam|adamw")
      ->transform(CLI::CheckedTransformer(
          std::map<std::string, OptimizerKind>{{"sgd", OptimizerKind::Sgd},
                                               {"adam", OptimizerKind::Adam},
                                               {"adamw", OptimizerKind::AdamW}}));
  wd_cmd->add_option("--lr", wd.lr, "Learning rate");
  wd_cmd->add_option("--batch", wd.batch, "Mini-batch size");
  wd_cmd->add_option("--steps", wd.steps, "Training steps");
  wd_cmd->add_option("--seed", wd.seed, "RNG seed");
  wd_cmd->add_option("--init", wd.init, "zeros|gaussian");
  wd_cmd->add_option("--init-sigma", wd.init_sigma, "Gaussian init scale");
  wd_cmd->add_flag("--lambda-broadcast", wdl_broadcast,
                   "Apply one averaged weight gradient to every document "
                   "column");
  wd_cmd->add_option("--out-atoms", wd.out_atoms, "Atom CSV path")->required();
  wd_cmd->add_option("--out-weights", wd.out_weights, "Weight CSV path")
      ->required();
  wd_cmd->add_option("--loss-out", wd.loss_out, "Loss history CSV path")
      ->required();

  GradcheckRunConfig gc;
  bool gc_corrupt = false;
  auto* gc_cmd = app.add_subcommand(
      "gradcheck", "Verify analytic gradients against finite differences");
  gc_cmd->set_help_flag("--help", "Print help");  // frees -h for the FD step
  gc_cmd->add_option("--which", gc.which,
                     "sinkhorn-vanilla|sinkhorn-log|barycenter-parallel|"
                     "barycenter-log|wdl-alpha")
      ->required();
  gc_cmd->add_option("--h", gc.h, "Finite-difference step");
  gc_cmd->add_option("--tol", gc.tol, "Max relative error allowed");
  gc_cmd->add_option("--trials", gc.trials, "Random instances per target");
  gc_cmd->add_option("--seed", gc.seed, "RNG seed");
  gc_cmd->add_option("--epsilon", gc.epsilon, "Entropic regularization");
  gc_cmd->add_option("--iters", gc.iters, "Fixed solver iterations");
  gc_cmd->add_option("--dims", gc.dims, "Instance dims MxNxS");
  gc_cmd->add_option("--reproducer", gc.reproducer_path,
                     "Where to dump the worst instance on failure");
  gc_cmd->add_flag("--corrupt-grad", gc_corrupt,
                   "Harness self-test: perturb the analytic gradient")
      ->group("");  // hidden

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (sk_cmd->parsed()) return cmd_sinkhorn(sk);
    if (bc_cmd->parsed()) return cmd_barycenter(bc);
    if (wd_cmd->parsed()) {
      wd.lambda_broadcast = wdl_broadcast;
      return cmd_wdl(wd);
    }
    if (gc_cmd->parsed()) return cmd_gradcheck(gc, gc_corrupt);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.is_numeric() ? kExitNumeric : kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  return kExitValidation;
}
