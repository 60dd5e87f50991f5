#pragma once

#include "otkit/optim.hpp"
#include "otkit/types.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>

namespace otkit {

std::string mode_name(SolveMode mode);
SolveMode parse_mode(const std::string& name);
std::string optimizer_name(OptimizerKind kind);
OptimizerKind parse_optimizer(const std::string& name);

struct SinkhornRunConfig {
  std::string a_path, b_path, cost_path, out_path;
  double epsilon = 1.0;
  SolveMode mode = SolveMode::Vanilla;
  double tolerance = 1e-9;
  int max_iters = 1000;
  bool grad = false;

  bool operator==(const SinkhornRunConfig&) const = default;
};

struct BarycenterRunConfig {
  std::string atoms_path, weights_path, cost_path, out_path;
  std::string target_path, grad_out_path;
  double epsilon = 1.0;
  SolveMode mode = SolveMode::Parallel;
  double tolerance = 1e-9;
  int max_iters = 1000;
  bool grad = false;

  bool operator==(const BarycenterRunConfig&) const = default;
};

struct WdlRunConfig {
  std::string data_path, cost_path, out_atoms, out_weights, loss_out;
  int topics = 2;
  double epsilon = 0.1;
  int inner_iters = 50;
  SolveMode mode = SolveMode::Parallel;
  OptimizerKind optimizer = OptimizerKind::Adam;
  double lr = 0.001;
  int batch = 1;
  int steps = 1;
  std::uint64_t seed = 0;
  std::string init = "zeros";
  double init_sigma = 0.1;
  bool lambda_broadcast = false;

  bool operator==(const WdlRunConfig&) const = default;
};

struct GradcheckRunConfig {
  std::string which = "sinkhorn-vanilla";
  double h = 1e-6;
  double tol = 1e-4;
  int trials = 20;
  std::uint64_t seed = 0;
  double epsilon = 0.5;
  int iters = 100;
  std::string dims = "6x7x2";
  std::string reproducer_path = "gradcheck_reproducer.json";

  bool operator==(const GradcheckRunConfig&) const = default;
};

/// One command invocation, JSON-serializable without loss.
struct RunConfig {
  std::string command;
  std::optional<SinkhornRunConfig> sinkhorn;
  std::optional<BarycenterRunConfig> barycenter;
  std::optional<WdlRunConfig> wdl;
  std::optional<GradcheckRunConfig> gradcheck;

  bool operator==(const RunConfig&) const = default;
};

nlohmann::json to_json(const RunConfig& cfg);
RunConfig run_config_from_json(const nlohmann::json& j);

}  // namespace otkit
