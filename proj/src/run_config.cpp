#include "otkit/run_config.hpp"

namespace otkit {

using nlohmann::json;

std::string mode_name(SolveMode mode) {
  switch (mode) {
    case SolveMode::Vanilla: return "vanilla";
    case SolveMode::Log: return "log";
    case SolveMode::Parallel: return "parallel";
  }
  fail(ErrorCode::InvalidConfig, "unknown solve mode");
}

SolveMode parse_mode(const std::string& name) {
  if (name == "vanilla") return SolveMode::Vanilla;
  if (name == "log") return SolveMode::Log;
  if (name == "parallel") return SolveMode::Parallel;
  fail(ErrorCode::InvalidConfig, "unknown mode: " + name);
}

std::string optimizer_name(OptimizerKind kind) {
  switch (kind) {
    case OptimizerKind::Sgd: return "sgd";
    case OptimizerKind::Adam: return "adam";
    case OptimizerKind::AdamW: return "adamw";
  }
  fail(ErrorCode::InvalidConfig, "unknown optimizer kind");
}

OptimizerKind parse_optimizer(const std::string& name) {
  if (name == "sgd") return OptimizerKind::Sgd;
  if (name == "adam") return OptimizerKind::Adam;
  if (name == "adamw") return OptimizerKind::AdamW;
  fail(ErrorCode::InvalidConfig, "unknown optimizer: " + name);
}

namespace {

json sinkhorn_to_json(const SinkhornRunConfig& c) {
  return json{{"a", c.a_path},
              {"b", c.b_path},
              {"cost", c.cost_path},
              {"out", c.out_path},
              {"epsilon", c.epsilon},
              {"mode", mode_name(c.mode)},
              {"tol", c.tolerance},
              {"max_iters", c.max_iters},
              {"grad", c.grad}};
}

SinkhornRunConfig sinkhorn_from_json(const json& j) {
  SinkhornRunConfig c;
  c.a_path = j.at("a").get<std::string>();
  c.b_path = j.at("b").get<std::string>();
  c.cost_path = j.at("cost").get<std::string>();
  c.out_path = j.at("out").get<std::string>();
  c.epsilon = j.at("epsilon").get<double>();
  c.mode = parse_mode(j.at("mode").get<std::string>());
  c.tolerance = j.at("tol").get<double>();
  c.max_iters = j.at("max_iters").get<int>();
  c.grad = j.at("grad").get<bool>();
  return c;
}

json barycenter_to_json(const BarycenterRunConfig& c) {
  return json{{"atoms", c.atoms_path},
              {"weights", c.weights_path},
              {"cost", c.cost_path},
              {"out", c.out_path},
              {"target", c.target_path},
              {"grad_out", c.grad_out_path},
              {"epsilon", c.epsilon},
              {"mode", mode_name(c.mode)},
              {"tol", c.tolerance},
              {"max_iters", c.max_iters},
              {"grad", c.grad}};
}

BarycenterRunConfig barycenter_from_json(const json& j) {
  BarycenterRunConfig c;
  c.atoms_path = j.at("atoms").get<std::string>();
  c.weights_path = j.at("weights").get<std::string>();
  c.cost_path = j.at("cost").get<std::string>();
  c.out_path = j.at("out").get<std::string>();
  c.target_path = j.at("target").get<std::string>();
  c.grad_out_path = j.at("grad_out").get<std::string>();
  c.epsilon = j.at("epsilon").get<double>();
  c.mode = parse_mode(j.at("mode").get<std::string>());
  c.tolerance = j.at("tol").get<double>();
  c.max_iters = j.at("max_iters").get<int>();
  c.grad = j.at("grad").get<bool>();
  return c;
}

json wdl_to_json(const WdlRunConfig& c) {
  return json{{"data", c.data_path},
              {"cost", c.cost_path},
              {"out_atoms", c.out_atoms},
              {"out_weights", c.out_weights},
              {"loss_out", c.loss_out},
              {"topics", c.topics},
              {"epsilon", c.epsilon},
              {"inner_iters", c.inner_iters},
              {"mode", mode_name(c.mode)},
              {"optimizer", optimizer_name(c.optimizer)},
              {"lr", c.lr},
              {"batch", c.batch},
              {"steps", c.steps},
              {"seed", c.seed},
              {"init", c.init},
              {"init_sigma", c.init_sigma},
              {"lambda_broadcast", c.lambda_broadcast}};
}

WdlRunConfig wdl_from_json(const json& j) {
  WdlRunConfig c;
  c.data_path = j.at("data").get<std::string>();
  c.cost_path = j.at("cost").get<std::string>();
  c.out_atoms = j.at("out_atoms").get<std::string>();
  c.out_weights = j.at("out_weights").get<std::string>();
  c.loss_out = j.at("loss_out").get<std::string>();
  c.topics = j.at("topics").get<int>();
  c.epsilon = j.at("epsilon").get<double>();
  c.inner_iters = j.at("inner_iters").get<int>();
  c.mode = parse_mode(j.at("mode").get<std::string>());
  c.optimizer = parse_optimizer(j.at("optimizer").get<std::string>());
  c.lr = j.at("lr").get<double>();
  c.batch = j.at("batch").get<int>();
  c.steps = j.at("steps").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.init = j.at("init").get<std::string>();
  c.init_sigma = j.at("init_sigma").get<double>();
  c.lambda_broadcast = j.at("lambda_broadcast").get<bool>();
  return c;
}

json gradcheck_to_json(const GradcheckRunConfig& c) {
  return json{{"which", c.which},
              {"h", c.h},
              {"tol", c.tol},
              {"trials", c.trials},
              {"seed", c.seed},
              {"epsilon", c.epsilon},
              {"iters", c.iters},
              {"dims", c.dims},
              {"reproducer", c.reproducer_path}};
}

GradcheckRunConfig gradcheck_from_json(const json& j) {
  GradcheckRunConfig c;
  c.which = j.at("which").get<std::string>();
  c.h = j.at("h").get<double>();
  c.tol = j.at("tol").get<double>();
  c.trials = j.at("trials").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.epsilon = j.at("epsilon").get<double>();
  c.iters = j.at("iters").get<int>();
  c.dims = j.at("dims").get<std::string>();
  c.reproducer_path = j.at("reproducer").get<std::string>();
  return c;
}

}  // namespace

json to_json(const RunConfig& cfg) {
  json j{{"command", cfg.command}};
  if (cfg.sinkhorn) j["sinkhorn"] = sinkhorn_to_json(*cfg.sinkhorn);
  if (cfg.barycenter) j["barycenter"] = barycenter_to_json(*cfg.barycenter);
  if (cfg.wdl) j["wdl"] = wdl_to_json(*cfg.wdl);
  if (cfg.gradcheck) j["gradcheck"] = gradcheck_to_json(*cfg.gradcheck);
  return j;
}

RunConfig run_config_from_json(const json& j) {
  RunConfig cfg;
  cfg.command = j.at("command").get<std::string>();
  if (j.contains("sinkhorn")) cfg.sinkhorn = sinkhorn_from_json(j["sinkhorn"]);
  if (j.contains("barycenter"))
    cfg.barycenter = barycenter_from_json(j["barycenter"]);
  if (j.contains("wdl")) cfg.wdl = wdl_from_json(j["wdl"]);
  if (j.contains("gradcheck"))
    cfg.gradcheck = gradcheck_from_json(j["gradcheck"]);
  return cfg;
}

}  // namespace otkit
