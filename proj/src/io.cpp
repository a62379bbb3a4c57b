// Copyright 2026 The mpgkit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "mpg/io.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "mpg/errors.hpp"

namespace mpg::io {

namespace fs = std::filesystem;

void write_text_atomic(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InvalidArgument("cannot open '" + tmp.string() + "' for writing");
    out << text;
    out.flush();
    if (!out) throw InvalidArgument("write to '" + tmp.string() + "' failed");
  }
  fs::rename(tmp, path);
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

json read_json(const fs::path& path) {
  const std::string text = read_text(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw InvalidArgument(path.string() + ": " + e.what());
  }
}

namespace {

// Converts nlohmann type errors into InvalidArgument with the key path.
template <typename T>
T get_as(const json& j, const std::string& what) {
  try {
    return j.get<T>();
  } catch (const json::exception& e) {
    throw InvalidArgument("'" + what + "': " + e.what());
  }
}

const json& require(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) {
    throw InvalidArgument(std::string("missing key '") + key + "'");
  }
  return j.at(key);
}

template <typename T>
void maybe(const json& j, const char* key, T& target) {
  if (j.is_object() && j.contains(key)) target = get_as<T>(j.at(key), key);
}

std::vector<double> flatten2(const json& j, int rows, int cols, const std::string& what) {
  const auto nested = get_as<std::vector<std::vector<double>>>(j, what);
  if (static_cast<int>(nested.size()) != rows) {
    throw InvalidArgument("'" + what + "' has " + std::to_string(nested.size()) +
                          " rows, expected " + std::to_string(rows));
  }
  std::vector<double> flat;
  for (int r = 0; r < rows; ++r) {
    if (static_cast<int>(nested[r].size()) != cols) {
      throw InvalidArgument("'" + what + "' row " + std::to_string(r) + " has " +
                            std::to_string(nested[r].size()) + " entries, expected " +
                            std::to_string(cols));
    }
    flat.insert(flat.end(), nested[r].begin(), nested[r].end());
  }
  return flat;
}

std::vector<double> flatten3(const json& j, int d0, int d1, int d2, const std::string& what) {
  if (!j.is_array() || static_cast<int>(j.size()) != d0) {
    throw InvalidArgument("'" + what + "' must be an array of " + std::to_string(d0) + " blocks");
  }
  std::vector<double> flat;
  for (int k = 0; k < d0; ++k) {
    const auto block = flatten2(j[k], d1, d2, what + "[" + std::to_string(k) + "]");
    flat.insert(flat.end(), block.begin(), block.end());
  }
  return flat;
}

json nest2(std::span<const double> flat, int rows, int cols) {
  json out = json::array();
  for (int r = 0; r < rows; ++r) {
    out.push_back(std::vector<double>(flat.begin() + static_cast<std::ptrdiff_t>(r) * cols,
                                      flat.begin() + static_cast<std::ptrdiff_t>(r + 1) * cols));
  }
  return out;
}

std::vector<std::string> default_labels(const char* prefix, int n) {
  std::vector<std::string> out;
  for (int k = 0; k < n; ++k) out.push_back(prefix + std::to_string(k));
  return out;
}

}  // namespace

LoadedGame game_from_json(const json& j) {
  if (!j.is_object()) throw InvalidArgument("game file must hold a JSON object");
  MarkovGame::Spec spec;
  spec.gamma = get_as<double>(require(j, "gamma"), "gamma");

  if (j.contains("local_transitions")) {
    const json& lt = j.at("local_transitions");
    if (!lt.is_array() || lt.empty()) throw InvalidArgument("'local_transitions' must be a non-empty array");
    std::vector<FactoredTransition::Local> locals;
    for (std::size_t i = 0; i < lt.size(); ++i) {
      const std::string name = "local_transitions[" + std::to_string(i) + "]";
      if (!lt[i].is_array() || lt[i].empty() || !lt[i][0].is_array() || lt[i][0].empty()) {
        throw InvalidArgument("'" + name + "' must be a [s][a][s'] array");
      }
      FactoredTransition::Local local;
      local.num_states = static_cast<int>(lt[i].size());
      local.num_actions = static_cast<int>(lt[i][0].size());
      local.probs = flatten3(lt[i], local.num_states, local.num_actions, local.num_states, name);
      locals.push_back(std::move(local));
    }
    const FactoredTransition factored = FactoredTransition::create(std::move(locals));
    const ExpandedTransition expanded = expand_factored(factored);
    spec.transition = expanded.probs;
    for (const auto& local : factored.locals()) {
      spec.local_state_counts.push_back(local.num_states);
      spec.action_labels.push_back(default_labels("a", local.num_actions));
    }
    spec.state_labels = default_labels("s", expanded.num_states);
    const auto rho_locals =
        get_as<std::vector<std::vector<double>>>(require(j, "rho_locals"), "rho_locals");
    if (rho_locals.size() != factored.locals().size()) {
      throw InvalidArgument("'rho_locals' needs one distribution per agent");
    }
    spec.rho = product_distribution(rho_locals);
  } else {
    const auto counts = get_as<std::vector<int>>(require(j, "action_counts"), "action_counts");
    const int num_states = get_as<int>(require(j, "num_states"), "num_states");
    if (num_states < 1) throw InvalidArgument("num_states must be >= 1");
    int joint = 1;
    for (int c : counts) {
      if (c < 1) throw InvalidArgument("action counts must be >= 1");
      spec.action_labels.push_back(default_labels("a", c));
      joint *= c;
    }
    spec.state_labels = default_labels("s", num_states);
    spec.transition = flatten3(require(j, "transition"), num_states, joint, num_states, "transition");
    spec.rho = get_as<std::vector<double>>(require(j, "rho"), "rho");
    maybe(j, "local_state_counts", spec.local_state_counts);
  }
  maybe(j, "state_labels", spec.state_labels);
  maybe(j, "action_labels", spec.action_labels);

  const int num_states = static_cast<int>(spec.state_labels.size());
  int joint = 1;
  for (const auto& labels : spec.action_labels) joint *= static_cast<int>(labels.size());
  const json& rewards = require(j, "rewards");
  if (!rewards.is_array() || rewards.size() != spec.action_labels.size()) {
    throw InvalidArgument("'rewards' needs one [s][a] table per agent");
  }
  for (std::size_t i = 0; i < rewards.size(); ++i) {
    spec.rewards.push_back(
        flatten2(rewards[i], num_states, joint, "rewards[" + std::to_string(i) + "]"));
  }
  std::optional<std::vector<double>> potential;
  if (j.contains("potential")) potential = flatten2(j.at("potential"), num_states, joint, "potential");
  return {MarkovGame::create(std::move(spec)), std::move(potential)};
}

json game_to_json(const MarkovGame& game, const std::vector<double>* potential) {
  const int ns = game.num_states();
  const int na = game.num_joint_actions();
  json j;
  j["gamma"] = game.gamma();
  j["num_states"] = ns;
  std::vector<int> counts;
  for (int i = 0; i < game.num_agents(); ++i) counts.push_back(game.num_actions(i));
  j["action_counts"] = counts;
  j["state_labels"] = game.spec().state_labels;
  j["action_labels"] = game.spec().action_labels;
  if (game.is_factored()) j["local_state_counts"] = game.spec().local_state_counts;
  json transition = json::array();
  for (int s = 0; s < ns; ++s) {
    transition.push_back(nest2(std::span<const double>(game.spec().transition)
                                   .subspan(static_cast<std::size_t>(s) * na * ns, na * ns),
                               na, ns));
  }
  j["transition"] = transition;
  json rewards = json::array();
  for (int i = 0; i < game.num_agents(); ++i) rewards.push_back(nest2(game.rewards(i), ns, na));
  j["rewards"] = rewards;
  j["rho"] = std::vector<double>(game.rho().begin(), game.rho().end());
  if (potential != nullptr) j["potential"] = nest2(*potential, ns, na);
  return j;
}

GeneratorSpec generator_from_json(const json& j) {
  GeneratorSpec spec;
  std::string construction = to_string(spec.construction);
  maybe(j, "construction", construction);
  spec.construction = construction_from_string(construction);
  maybe(j, "n_agents", spec.n_agents);
  maybe(j, "local_states", spec.local_states);
  maybe(j, "local_actions", spec.local_actions);
  maybe(j, "gamma", spec.gamma);
  maybe(j, "alpha", spec.alpha);
  maybe(j, "beta", spec.beta);
  maybe(j, "seed", spec.seed);
  return spec;
}

json generator_to_json(const GeneratorSpec& spec) {
  return {{"construction", to_string(spec.construction)},
          {"n_agents", spec.n_agents},
          {"local_states", spec.local_states},
          {"local_actions", spec.local_actions},
          {"gamma", spec.gamma},
          {"alpha", spec.alpha},
          {"beta", spec.beta},
          {"seed", spec.seed}};
}

json certificate_to_json(const PotentialCertificate& cert) {
  json trials = json::array();
  for (const auto& t : cert.trials) {
    trials.push_back({{"agent", t.agent},
                      {"lhs", t.lhs},
                      {"rhs", t.rhs},
                      {"violation", t.violation},
                      {"state_violation", t.state_violation}});
  }
  return {{"construction", to_string(cert.construction)},
          {"policy_class", to_string(cert.policy_class)},
          {"verified", cert.verified},
          {"passed", cert.passed},
          {"tol", cert.tol},
          {"seed", cert.seed},
          {"max_violation", cert.max_violation},
          {"max_state_violation", cert.max_state_violation},
          {"num_trials", cert.trials.size()},
          {"trials", trials}};
}

json identity_to_json(const GradientIdentityReport& report) {
  return {{"per_agent_max_diff", report.per_agent_max_diff},
          {"max_diff", report.max_diff},
          {"tol", report.tol},
          {"passed", report.passed}};
}

LearnConfig learn_config_from_json(const json& j, LearnConfig base) {
  maybe(j, "eta", base.eta);
  maybe(j, "max_iters", base.max_iters);
  maybe(j, "stationarity_tol", base.stationarity_tol);
  if (j.is_object() && j.contains("mode")) {
    base.mode = learn_mode_from_string(get_as<std::string>(j.at("mode"), "mode"));
  }
  base.validate();
  return base;
}

json learn_config_to_json(const LearnConfig& config) {
  return {{"eta", config.eta},
          {"max_iters", config.max_iters},
          {"stationarity_tol", config.stationarity_tol},
          {"mode", to_string(config.mode)}};
}

std::string trace_csv(const LearnTrace& trace) {
  std::ostringstream out;
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  const std::size_t agents = trace.records.empty() ? 0 : trace.records.front().totals.size();
  out << "iteration,potential,gap,step_norm";
  for (std::size_t i = 0; i < agents; ++i) out << ",J_" << i;
  out << "\n";
  for (const auto& r : trace.records) {
    out << r.iteration << ",";
    if (!std::isnan(r.potential)) out << r.potential;
    out << "," << r.gap << "," << r.step_norm;
    for (double v : r.totals) out << "," << v;
    out << "\n";
  }
  return out.str();
}

json policy_to_json(const TabularPolicy& policy) {
  json agents = json::array();
  for (int i = 0; i < policy.num_agents(); ++i) {
    agents.push_back(nest2(policy.agent_params(i), policy.num_states(), policy.num_actions(i)));
  }
  return {{"num_states", policy.num_states()}, {"agents", agents}};
}

namespace {

std::string axis_name(driving::Axis a) { return a == driving::Axis::kX ? "x" : "y"; }

driving::Axis axis_from(const std::string& s) {
  if (s == "x") return driving::Axis::kX;
  if (s == "y") return driving::Axis::kY;
  throw InvalidArgument("lane axis must be 'x' or 'y', got '" + s + "'");
}

}  // namespace

driving::EnvConfig env_config_from_json(const json& j, driving::EnvConfig base) {
  if (!j.is_object()) throw InvalidArgument("env config must be a JSON object");
  static const char* known[] = {"dt", "horizon_steps", "gamma", "g", "epsilon", "desired_speeds",
                                "omega_self", "omega_joint", "collision_distance", "lanes", "ego",
                                "spawn_min", "spawn_max", "speed_min_fraction",
                                "speed_max_fraction", "rule_gain", "rule_stop_margin"};
  for (const auto& [key, value] : j.items()) {
    if (std::find(std::begin(known), std::end(known), key) == std::end(known)) {
      throw InvalidArgument("unknown env key '" + key + "'");
    }
  }
  maybe(j, "dt", base.dt);
  maybe(j, "horizon_steps", base.horizon_steps);
  maybe(j, "gamma", base.gamma);
  maybe(j, "g", base.g);
  maybe(j, "epsilon", base.epsilon);
  maybe(j, "desired_speeds", base.desired_speeds);
  maybe(j, "omega_self", base.omega_self);
  maybe(j, "omega_joint", base.omega_joint);
  maybe(j, "collision_distance", base.collision_distance);
  maybe(j, "ego", base.ego);
  maybe(j, "spawn_min", base.spawn_min);
  maybe(j, "spawn_max", base.spawn_max);
  maybe(j, "speed_min_fraction", base.speed_min_fraction);
  maybe(j, "speed_max_fraction", base.speed_max_fraction);
  maybe(j, "rule_gain", base.rule_gain);
  maybe(j, "rule_stop_margin", base.rule_stop_margin);
  if (j.contains("lanes")) {
    base.lanes.clear();
    for (const auto& lane : j.at("lanes")) {
      base.lanes.push_back({axis_from(get_as<std::string>(require(lane, "axis"), "lanes.axis")),
                            get_as<double>(require(lane, "offset"), "lanes.offset")});
    }
  }
  base.validate();
  return base;
}

json env_config_to_json(const driving::EnvConfig& c) {
  json lanes = json::array();
  for (const auto& lane : c.lanes) {
    lanes.push_back({{"axis", axis_name(lane.axis)}, {"offset", lane.lateral_offset}});
  }
  return {{"dt", c.dt},
          {"horizon_steps", c.horizon_steps},
          {"gamma", c.gamma},
          {"g", c.g},
          {"epsilon", c.epsilon},
          {"desired_speeds", c.desired_speeds},
          {"omega_self", c.omega_self},
          {"omega_joint", c.omega_joint},
          {"collision_distance", c.collision_distance},
          {"lanes", lanes},
          {"ego", c.ego},
          {"spawn_min", c.spawn_min},
          {"spawn_max", c.spawn_max},
          {"speed_min_fraction", c.speed_min_fraction},
          {"speed_max_fraction", c.speed_max_fraction},
          {"rule_gain", c.rule_gain},
          {"rule_stop_margin", c.rule_stop_margin}};
}

driving::TrainConfig train_config_from_json(const json& j, driving::TrainConfig base) {
  maybe(j, "max_episodes", base.max_episodes);
  maybe(j, "batch_size", base.batch_size);
  maybe(j, "learning_rate", base.learning_rate);
  maybe(j, "grad_norm_tol", base.grad_norm_tol);
  maybe(j, "strata", base.strata);
  maybe(j, "eval_batch_size", base.eval_batch_size);
  base.validate();
  return base;
}

json train_config_to_json(const driving::TrainConfig& c) {
  return {{"max_episodes", c.max_episodes},
          {"batch_size", c.batch_size},
          {"learning_rate", c.learning_rate},
          {"grad_norm_tol", c.grad_norm_tol},
          {"strata", c.strata},
          {"eval_batch_size", c.eval_batch_size}};
}

namespace {

using driving::MlpPolicy;

json layer_shapes() {
  return json::array({json::array({MlpPolicy::kHidden, MlpPolicy::kInputs}),
                      json::array({MlpPolicy::kHidden, MlpPolicy::kHidden}),
                      json::array({MlpPolicy::kOutputs, MlpPolicy::kHidden})});
}

driving::TrainMode mode_from(const std::string& s) {
  if (s == to_string(driving::TrainMode::kMarl)) return driving::TrainMode::kMarl;
  if (s == to_string(driving::TrainMode::kSingleAgent)) return driving::TrainMode::kSingleAgent;
  throw InvalidArgument("unknown training mode '" + s + "'");
}

}  // namespace

json checkpoint_to_json(const Checkpoint& ckpt) {
  const auto params = ckpt.net.params();
  return {{"format", "mpgkit-checkpoint"},
          {"version", kCheckpointVersion},
          {"mode", to_string(ckpt.mode)},
          {"layers", layer_shapes()},
          {"leaky_slope", MlpPolicy::kLeakySlope},
          {"output_scale", MlpPolicy::kOutputScale},
          {"input_scale", ckpt.net.input_scale()},
          {"params", std::vector<double>(params.begin(), params.end())},
          {"adam",
           {{"m", ckpt.adam.m},
            {"v", ckpt.adam.v},
            {"step", ckpt.adam.step},
            {"lr", ckpt.adam.lr},
            {"beta1", ckpt.adam.beta1},
            {"beta2", ckpt.adam.beta2},
            {"eps", ckpt.adam.eps}}},
          {"env", env_config_to_json(ckpt.env)},
          {"train", train_config_to_json(ckpt.train)},
          {"seed", ckpt.seed}};
}

Checkpoint checkpoint_from_json(const json& j) {
  if (get_as<std::string>(require(j, "format"), "format") != "mpgkit-checkpoint") {
    throw InvalidArgument("not a checkpoint file");
  }
  const int version = get_as<int>(require(j, "version"), "version");
  if (version != kCheckpointVersion) {
    throw InvalidArgument("unsupported checkpoint version " + std::to_string(version));
  }
  if (require(j, "layers") != layer_shapes()) {
    throw InvalidArgument("checkpoint layer shapes " + j.at("layers").dump() +
                          " do not match the network " + layer_shapes().dump());
  }
  Checkpoint ckpt;
  ckpt.mode = mode_from(get_as<std::string>(require(j, "mode"), "mode"));
  const auto params = get_as<std::vector<double>>(require(j, "params"), "params");
  if (params.size() != MlpPolicy::kNumParams) {
    throw InvalidArgument("checkpoint has " + std::to_string(params.size()) +
                          " parameters, expected " + std::to_string(MlpPolicy::kNumParams));
  }
  std::copy(params.begin(), params.end(), ckpt.net.params().begin());
  ckpt.net.set_input_scale(get_as<MlpPolicy::Input>(require(j, "input_scale"), "input_scale"));
  const json& adam = require(j, "adam");
  ckpt.adam.m = get_as<std::vector<double>>(require(adam, "m"), "adam.m");
  ckpt.adam.v = get_as<std::vector<double>>(require(adam, "v"), "adam.v");
  if (ckpt.adam.m.size() != MlpPolicy::kNumParams || ckpt.adam.v.size() != MlpPolicy::kNumParams) {
    throw InvalidArgument("checkpoint Adam moments do not match the parameter count");
  }
  maybe(adam, "step", ckpt.adam.step);
  maybe(adam, "lr", ckpt.adam.lr);
  maybe(adam, "beta1", ckpt.adam.beta1);
  maybe(adam, "beta2", ckpt.adam.beta2);
  maybe(adam, "eps", ckpt.adam.eps);
  ckpt.env = env_config_from_json(require(j, "env"));
  if (ckpt.env.num_vehicles() != MlpPolicy::kOutputs) {
    throw InvalidArgument("checkpoint env has " + std::to_string(ckpt.env.num_vehicles()) +
                          " vehicles; the network drives " + std::to_string(MlpPolicy::kOutputs));
  }
  ckpt.train = train_config_from_json(require(j, "train"));
  ckpt.seed = get_as<std::uint64_t>(require(j, "seed"), "seed");
  return ckpt;
}

void save_checkpoint(const fs::path& path, const Checkpoint& ckpt) {
  write_text_atomic(path, checkpoint_to_json(ckpt).dump());
}

Checkpoint load_checkpoint(const fs::path& path) {
  try {
    return checkpoint_from_json(read_json(path));
  } catch (const InvalidArgument& e) {
    throw InvalidArgument(path.string() + ": " + e.what());
  }
}

Checkpoint checkpoint_from_report(const driving::TrainReport& report) {
  return {report.mode, report.net, report.adam, report.env, report.train, report.seed};
}

std::string train_log_csv(const driving::TrainReport& report) {
  std::ostringstream out;
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  out << "episode,batch_objective,grad_norm\n";
  for (std::size_t k = 0; k < report.objectives.size(); ++k) {
    out << k << "," << report.objectives[k] << "," << report.grad_norms[k] << "\n";
  }
  return out.str();
}

json train_summary_to_json(const driving::TrainReport& report) {
  return {{"mode", to_string(report.mode)},
          {"episodes", report.episodes},
          {"stop_reason", report.stop_reason},
          {"initial_eval_objective", report.initial_eval_objective},
          {"final_eval_objective", report.final_eval_objective},
          {"final_grad_norm", report.grad_norms.empty() ? 0.0 : report.grad_norms.back()},
          {"wall_seconds", report.wall_seconds},
          {"seed", report.seed},
          {"env", env_config_to_json(report.env)},
          {"train", train_config_to_json(report.train)}};
}

std::string study_csv(const driving::StudyReport& report) {
  std::ostringstream out;
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  const int n = report.env.num_vehicles();
  out << "# avg ego speed = scenario mean of the time-mean |v_ego| over all trajectory states\n";
  out << "scenario,seed,collision,collision_step,collision_with";
  for (int i = 0; i < n; ++i) out << ",p0_" << i << ",v0_" << i;
  for (int i = 0; i < n; ++i) out << ",mean_speed_" << i;
  for (int i = 0; i < n; ++i) out << ",return_" << i;
  out << "\n";
  for (const auto& rec : report.scenarios) {
    out << rec.index << "," << rec.seed << "," << (rec.collision ? 1 : 0) << ","
        << rec.collision_step << "," << rec.collision_with;
    for (const auto& veh : rec.initial.vehicles) out << "," << veh.p << "," << veh.v;
    for (double v : rec.mean_speeds) out << "," << v;
    for (double v : rec.returns) out << "," << v;
    out << "\n";
  }
  return out.str();
}

json study_summary_to_json(const driving::StudyReport& report) {
  return {{"policy", report.policy_label},
          {"surrounding", to_string(report.row.surrounding)},
          {"collisions", report.row.collisions},
          {"scenarios", report.row.scenarios},
          {"avg_ego_speed", report.row.avg_ego_speed},
          {"avg_ego_speed_definition",
           "scenario mean of the time-mean |v_ego| over all trajectory states"},
          {"scenario_seeds", "master seed + scenario index; shared across matchups"},
          {"seed", report.seed},
          {"strata", report.strata},
          {"env", env_config_to_json(report.env)}};
}

json compare_to_json(const driving::ComparisonReport& report) {
  json grid = json::array();
  for (const auto& row : report.grid) {
    json cells = json::array();
    for (const auto& cell : row) {
      cells.push_back({{"policy", cell.policy_label},
                       {"surrounding", to_string(cell.row.surrounding)},
                       {"collisions", cell.row.collisions},
                       {"scenarios", cell.row.scenarios},
                       {"avg_ego_speed", cell.row.avg_ego_speed}});
    }
    grid.push_back(cells);
  }
  json env = report.grid.empty() || report.grid.front().empty()
                 ? json::object()
                 : env_config_to_json(report.grid.front().front().env);
  return {{"seed", report.seed}, {"scenarios", report.scenarios}, {"grid", grid}, {"env", env}};
}

}  // namespace mpg::io
