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

#ifndef MPG_EXACT_EVALUATOR_HPP_
#define MPG_EXACT_EVALUATOR_HPP_

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

#include "mpg/tabular_game.hpp"

namespace mpg {

// States whose visitation mass falls below this are treated as unvisited.
inline constexpr double kMinVisitation = 1e-14;

// dJ/dtheta_i laid out like theta_i: [s][a_i].
struct PolicyGradient {
  int num_states = 0;
  int num_actions = 0;
  std::vector<double> entries;

  double operator()(int s, int a) const {
    return entries[static_cast<std::size_t>(s) * num_actions + a];
  }
};

// Exact evaluation of one (game, policy) pair. Builds the induced chain and
// factorizes (I - gamma M) once; every value, visitation and gradient query
// then reuses the factorization. Rewards are passed as [s][joint a] tensors,
// so a potential function can be evaluated exactly like an agent reward.
class PolicyEvaluation {
 public:
  PolicyEvaluation(const MarkovGame& game, const TabularPolicy& policy);

  const MarkovGame& game() const { return *game_; }
  const TabularPolicy& policy() const { return *policy_; }

  // M(s,s') = sum_a pi(a|s) P(s'|s,a).
  const Eigen::MatrixXd& induced_transition() const { return induced_; }
  // pi(a|s), [s][joint a].
  std::span<const double> joint_probs() const { return joint_probs_; }
  // rbar(s) = sum_a pi(a|s) r(s,a).
  Eigen::VectorXd expected_reward(std::span<const double> reward) const;
  // Solves (I - gamma M) V = rbar.
  Eigen::VectorXd value(std::span<const double> reward) const;
  double total(std::span<const double> reward) const;
  // d = (1-gamma) rho^T (I - gamma M)^{-1}.
  const Eigen::VectorXd& visitation() const { return visitation_; }
  // d/dtheta_{agent,(s,a_i)} of the rho-weighted value of `reward`:
  //   d(s) / (1-gamma) * sum_{a_-i} pi_{-i}(a_-i|s) Q(s, a).
  PolicyGradient gradient(std::span<const double> reward, int agent) const;

 private:
  const MarkovGame* game_;
  const TabularPolicy* policy_;
  std::vector<double> joint_probs_;
  Eigen::MatrixXd induced_;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
  Eigen::VectorXd visitation_;
};

Eigen::MatrixXd induced_transition(const MarkovGame& game, const TabularPolicy& policy);
Eigen::VectorXd value_function(const MarkovGame& game, const TabularPolicy& policy, int agent);
double total_reward(const MarkovGame& game, const TabularPolicy& policy, int agent);
Eigen::VectorXd visitation_measure(const MarkovGame& game, const TabularPolicy& policy);
PolicyGradient exact_policy_gradient(const MarkovGame& game, const TabularPolicy& policy,
                                     int agent);

// max over theta_bar in Delta(A)^|S| of (theta_bar - theta_block)^T grad.
// The maximum decomposes per state: put all mass on the largest entry.
double max_linear_improvement(std::span<const double> theta_block, const PolicyGradient& grad);

// Throws PreconditionFailed when some state has d(s) < kMinVisitation.
void require_full_visitation(const Eigen::VectorXd& visitation);

// RHS - LHS of the gradient-domination inequality for agent `agent`
// deviating to `deviation` (a |S| x |A_i| block):
//   ||d_theta'/d_theta||_inf * max_bar (theta_bar - theta_i)^T grad_i J_i(theta)
//   - [J_i(theta'_i, theta_-i) - J_i(theta)].
double gradient_domination_slack(const MarkovGame& game, const TabularPolicy& policy, int agent,
                                 std::span<const double> deviation);

struct VisitationReport {
  bool satisfied = false;
  double min_visitation = 0.0;
  int policies_checked = 0;
};

// Empirical check that every state keeps positive visitation mass, over
// the uniform policy plus `num_random` random full-support policies.
VisitationReport check_full_visitation(const MarkovGame& game, int num_random, std::uint64_t seed);

}  // namespace mpg

#endif  // MPG_EXACT_EVALUATOR_HPP_
