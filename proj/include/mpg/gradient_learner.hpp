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

#ifndef MPG_GRADIENT_LEARNER_HPP_
#define MPG_GRADIENT_LEARNER_HPP_

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mpg/tabular_game.hpp"

namespace mpg {

enum class LearnMode { kIndependent, kPotential };

std::string to_string(LearnMode mode);
LearnMode learn_mode_from_string(const std::string& name);

struct LearnConfig {
  double eta = 0.01;
  int max_iters = 50000;
  double stationarity_tol = 1e-4;
  LearnMode mode = LearnMode::kIndependent;

  void validate() const;
};

struct LearnRecord {
  int iteration = 0;
  double potential = 0.0;  // NaN outside potential mode
  std::vector<double> totals;
  double gap = 0.0;
  double step_norm = 0.0;  // norm of the step taken after this record; 0 if none
};

struct LearnTrace {
  std::vector<LearnRecord> records;
  TabularPolicy final_policy;
  double final_gap = 0.0;
  bool converged = false;
};

// theta_i <- Proj(theta_i + eta * grad_i J_i), all agents simultaneously.
TabularPolicy independent_gradient_step(const MarkovGame& game, const TabularPolicy& policy,
                                        double eta);
// theta <- Proj(theta + eta * grad Phi).
TabularPolicy potential_ascent_step(const MarkovGame& game, std::span<const double> phi,
                                    const TabularPolicy& policy, double eta);

// max_i max_{theta'_i} (theta'_i - theta_i)^T grad_i J_i(theta).
double stationarity_gap(const MarkovGame& game, const TabularPolicy& policy);

struct BestResponse {
  // Deterministic |S| x |A_i| block.
  std::vector<double> block;
  std::vector<int> actions;
  double value = 0.0;  // J_i(block, theta_-i), exact
  int sweeps = 0;
};

// Solves agent i's induced MDP (others fixed) by value iteration to 1e-12.
// Ties go to the lowest action index.
BestResponse best_response(const MarkovGame& game, const TabularPolicy& policy, int agent);

// Per agent: best-response value minus current J_i.
std::vector<double> exploitability(const MarkovGame& game, const TabularPolicy& policy);

// Runs the selected dynamics from `initial` (uniform when omitted) until the
// stationarity gap drops below tolerance or max_iters records were taken.
LearnTrace train(const MarkovGame& game, std::optional<std::span<const double>> phi,
                 const LearnConfig& config, std::optional<TabularPolicy> initial = std::nullopt);

}  // namespace mpg

#endif  // MPG_GRADIENT_LEARNER_HPP_
