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

#ifndef MPG_STUDY_HPP_
#define MPG_STUDY_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "mpg/intersection_env.hpp"
#include "mpg/neural_policy.hpp"

namespace mpg::driving {

// Policy followed by the non-ego vehicles during evaluation.
enum class Surrounding { kNe, kRule, kConstant };

std::string to_string(Surrounding s);
Surrounding surrounding_from_string(const std::string& name);

struct ScenarioRecord {
  int index = 0;
  std::uint64_t seed = 0;  // master seed + index
  IntersectionState initial;
  bool collision = false;
  int collision_step = -1;
  int collision_with = -1;
  std::vector<double> mean_speeds;  // per vehicle, time-mean |v|
  std::vector<double> returns;
};

struct StudyRow {
  Surrounding surrounding = Surrounding::kNe;
  int collisions = 0;
  int scenarios = 0;
  // Scenario mean of the trajectory time-mean |v_ego|.
  double avg_ego_speed = 0.0;
};

struct StudyReport {
  std::string policy_label;
  StudyRow row;
  std::vector<ScenarioRecord> scenarios;
  EnvConfig env;
  std::uint64_t seed = 0;
  int strata = 2;
};

// Smallest per-dimension strata count (>= 2) whose product covers n.
int strata_for(int scenarios, int dims);

// Held-out scenario set shared by every matchup for a given seed.
std::vector<IntersectionState> study_scenarios(int n, const EnvConfig& env, std::uint64_t seed);

// The ego follows `net`; the other vehicles follow `surrounding`.
JointPolicy matchup_policy(const MlpPolicy& net, Surrounding surrounding, const EnvConfig& env);

ScenarioRecord evaluate_scenario(const JointPolicy& policy, const IntersectionState& s0,
                                 const EnvConfig& env, int index, std::uint64_t seed);

// Scenario rollouts run in parallel; the row is assembled in scenario order.
StudyReport run_study(const MlpPolicy& net, const std::string& label, Surrounding surrounding,
                      int n, std::uint64_t seed, const EnvConfig& env);

struct ComparisonReport {
  // [policy][surrounding]: policy 0 = MARL, 1 = single-agent;
  // surroundings in the order NE, rule, constant.
  std::vector<std::vector<StudyReport>> grid;
  std::uint64_t seed = 0;
  int scenarios = 0;
};

ComparisonReport run_compare(const MlpPolicy& marl, const MlpPolicy& single, int n,
                             std::uint64_t seed, const EnvConfig& env);

}  // namespace mpg::driving

#endif  // MPG_STUDY_HPP_
