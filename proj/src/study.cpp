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

#include "mpg/study.hpp"

#include <cmath>

#include "mpg/errors.hpp"
#include "mpg/parallel.hpp"

namespace mpg::driving {

std::string to_string(Surrounding s) {
  switch (s) {
    case Surrounding::kNe: return "ne";
    case Surrounding::kRule: return "rule";
    case Surrounding::kConstant: return "constant";
  }
  return "ne";
}

Surrounding surrounding_from_string(const std::string& name) {
  if (name == "ne") return Surrounding::kNe;
  if (name == "rule") return Surrounding::kRule;
  if (name == "constant") return Surrounding::kConstant;
  throw InvalidArgument("unknown surrounding policy '" + name + "' (expected ne|rule|constant)");
}

int strata_for(int scenarios, int dims) {
  int strata = 2;
  while (std::pow(static_cast<double>(strata), dims) < scenarios) ++strata;
  return strata;
}

std::vector<IntersectionState> study_scenarios(int n, const EnvConfig& env, std::uint64_t seed) {
  if (n < 1) throw InvalidArgument("need at least one scenario");
  return sample_initial_states(n, env, strata_for(n, 2 * env.num_vehicles()), seed);
}

JointPolicy matchup_policy(const MlpPolicy& net, Surrounding surrounding, const EnvConfig& env) {
  ControlSpec control;
  switch (surrounding) {
    case Surrounding::kNe:
      break;
    case Surrounding::kRule:
      control.network_controlled.assign(env.num_vehicles(), false);
      control.network_controlled[env.ego] = true;
      control.external = [env](const IntersectionState& s) { return rule_based_policy(s, env); };
      break;
    case Surrounding::kConstant:
      control.network_controlled.assign(env.num_vehicles(), false);
      control.network_controlled[env.ego] = true;
      control.external = [](const IntersectionState& s) { return constant_speed_policy(s); };
      break;
  }
  return make_joint_policy(net, control);
}

ScenarioRecord evaluate_scenario(const JointPolicy& policy, const IntersectionState& s0,
                                 const EnvConfig& env, int index, std::uint64_t seed) {
  const Trajectory traj = rollout(policy, s0, env);
  ScenarioRecord rec;
  rec.index = index;
  rec.seed = seed + static_cast<std::uint64_t>(index);
  rec.initial = s0;
  rec.collision = traj.collision;
  rec.collision_step = traj.collision_step;
  rec.collision_with = traj.collision_pair.second;
  for (int i = 0; i < env.num_vehicles(); ++i) rec.mean_speeds.push_back(traj.mean_speed(i));
  rec.returns = traj.returns;
  return rec;
}

StudyReport run_study(const MlpPolicy& net, const std::string& label, Surrounding surrounding,
                      int n, std::uint64_t seed, const EnvConfig& env) {
  env.validate();
  StudyReport report;
  report.policy_label = label;
  report.env = env;
  report.seed = seed;
  report.strata = strata_for(n, 2 * env.num_vehicles());
  const auto scenarios = study_scenarios(n, env, seed);
  const JointPolicy policy = matchup_policy(net, surrounding, env);
  report.scenarios.resize(scenarios.size());
  const int count = static_cast<int>(scenarios.size());
  MPG_PARALLEL_FOR_DYNAMIC
  for (int k = 0; k < count; ++k) {
    report.scenarios[k] = evaluate_scenario(policy, scenarios[k], env, k, seed);
  }
  report.row.surrounding = surrounding;
  report.row.scenarios = count;
  double speed = 0.0;
  for (const auto& rec : report.scenarios) {
    report.row.collisions += rec.collision ? 1 : 0;
    speed += rec.mean_speeds[env.ego];
  }
  report.row.avg_ego_speed = speed / count;
  return report;
}

ComparisonReport run_compare(const MlpPolicy& marl, const MlpPolicy& single, int n,
                             std::uint64_t seed, const EnvConfig& env) {
  ComparisonReport out;
  out.seed = seed;
  out.scenarios = n;
  const Surrounding tags[] = {Surrounding::kNe, Surrounding::kRule, Surrounding::kConstant};
  const MlpPolicy* nets[] = {&marl, &single};
  const char* labels[] = {"marl", "single"};
  for (int p = 0; p < 2; ++p) {
    out.grid.emplace_back();
    for (Surrounding tag : tags) out.grid.back().push_back(run_study(*nets[p], labels[p], tag, n, seed, env));
  }
  return out;
}

}  // namespace mpg::driving
