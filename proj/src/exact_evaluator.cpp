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

#include "mpg/exact_evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "mpg/errors.hpp"
#include "mpg/parallel.hpp"

namespace mpg {

PolicyEvaluation::PolicyEvaluation(const MarkovGame& game, const TabularPolicy& policy)
    : game_(&game), policy_(&policy) {
  policy.check_compatible(game);
  const int num_states = game.num_states();
  const int num_joint = game.num_joint_actions();
  const int n = game.num_agents();
  const auto& joint = game.joint_actions();
  joint_probs_.assign(static_cast<std::size_t>(num_states) * num_joint, 0.0);
  induced_ = Eigen::MatrixXd::Zero(num_states, num_states);

  MPG_PARALLEL_FOR
  for (int s = 0; s < num_states; ++s) {
    for (int a = 0; a < num_joint; ++a) {
      double p = 1.0;
      for (int i = 0; i < n; ++i) p *= policy.prob(i, s, joint.digit(a, i));
      joint_probs_[static_cast<std::size_t>(s) * num_joint + a] = p;
      if (p == 0.0) continue;
      const auto row = game.transition_row(s, a);
      for (int next = 0; next < num_states; ++next) induced_(s, next) += p * row[next];
    }
  }

  const Eigen::MatrixXd system =
      Eigen::MatrixXd::Identity(num_states, num_states) - game.gamma() * induced_;
  lu_.compute(system);
  const Eigen::Map<const Eigen::VectorXd> rho(game.rho().data(), num_states);
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu_t(system.transpose());
  visitation_ = (1.0 - game.gamma()) * lu_t.solve(rho);
  if (!visitation_.allFinite()) throw InternalError("visitation solve produced non-finite values");
}

Eigen::VectorXd PolicyEvaluation::expected_reward(std::span<const double> reward) const {
  const int num_states = game_->num_states();
  const int num_joint = game_->num_joint_actions();
  if (reward.size() != static_cast<std::size_t>(num_states) * num_joint) {
    throw InvalidArgument("reward tensor does not match game dimensions");
  }
  Eigen::VectorXd out = Eigen::VectorXd::Zero(num_states);
  for (int s = 0; s < num_states; ++s) {
    double acc = 0.0;
    for (int a = 0; a < num_joint; ++a) {
      const std::size_t k = static_cast<std::size_t>(s) * num_joint + a;
      acc += joint_probs_[k] * reward[k];
    }
    out(s) = acc;
  }
  return out;
}

Eigen::VectorXd PolicyEvaluation::value(std::span<const double> reward) const {
  Eigen::VectorXd v = lu_.solve(expected_reward(reward));
  if (!v.allFinite()) throw InternalError("value solve produced non-finite values");
  return v;
}

double PolicyEvaluation::total(std::span<const double> reward) const {
  const Eigen::Map<const Eigen::VectorXd> rho(game_->rho().data(), game_->num_states());
  return rho.dot(value(reward));
}

PolicyGradient PolicyEvaluation::gradient(std::span<const double> reward, int agent) const {
  const MarkovGame& game = *game_;
  if (agent < 0 || agent >= game.num_agents()) {
    throw InvalidArgument("agent out of range: " + std::to_string(agent));
  }
  const Eigen::VectorXd v = value(reward);
  const int num_states = game.num_states();
  const int num_joint = game.num_joint_actions();
  const int n = game.num_agents();
  const auto& joint = game.joint_actions();
  const double gamma = game.gamma();
  PolicyGradient grad;
  grad.num_states = num_states;
  grad.num_actions = game.num_actions(agent);
  grad.entries.assign(static_cast<std::size_t>(num_states) * grad.num_actions, 0.0);

  MPG_PARALLEL_FOR
  for (int s = 0; s < num_states; ++s) {
    double* out = grad.entries.data() + static_cast<std::size_t>(s) * grad.num_actions;
    for (int a = 0; a < num_joint; ++a) {
      double others = 1.0;
      for (int j = 0; j < n; ++j) {
        if (j != agent) others *= policy_->prob(j, s, joint.digit(a, j));
      }
      if (others == 0.0) continue;
      const auto row = game.transition_row(s, a);
      double q = reward[static_cast<std::size_t>(s) * num_joint + a];
      double future = 0.0;
      for (int next = 0; next < num_states; ++next) future += row[next] * v(next);
      q += gamma * future;
      out[joint.digit(a, agent)] += others * q;
    }
    const double weight = visitation_(s) / (1.0 - gamma);
    for (int k = 0; k < grad.num_actions; ++k) out[k] *= weight;
  }
  return grad;
}

Eigen::MatrixXd induced_transition(const MarkovGame& game, const TabularPolicy& policy) {
  return PolicyEvaluation(game, policy).induced_transition();
}

Eigen::VectorXd value_function(const MarkovGame& game, const TabularPolicy& policy, int agent) {
  if (agent < 0 || agent >= game.num_agents()) throw InvalidArgument("agent out of range");
  return PolicyEvaluation(game, policy).value(game.rewards(agent));
}

double total_reward(const MarkovGame& game, const TabularPolicy& policy, int agent) {
  if (agent < 0 || agent >= game.num_agents()) throw InvalidArgument("agent out of range");
  return PolicyEvaluation(game, policy).total(game.rewards(agent));
}

Eigen::VectorXd visitation_measure(const MarkovGame& game, const TabularPolicy& policy) {
  return PolicyEvaluation(game, policy).visitation();
}

PolicyGradient exact_policy_gradient(const MarkovGame& game, const TabularPolicy& policy,
                                     int agent) {
  if (agent < 0 || agent >= game.num_agents()) throw InvalidArgument("agent out of range");
  return PolicyEvaluation(game, policy).gradient(game.rewards(agent), agent);
}

double max_linear_improvement(std::span<const double> theta_block, const PolicyGradient& grad) {
  if (theta_block.size() != grad.entries.size()) {
    throw InvalidArgument("policy block and gradient differ in shape");
  }
  double total = 0.0;
  for (int s = 0; s < grad.num_states; ++s) {
    double best = -std::numeric_limits<double>::infinity();
    double current = 0.0;
    for (int a = 0; a < grad.num_actions; ++a) {
      const double g = grad(s, a);
      best = std::max(best, g);
      current += theta_block[static_cast<std::size_t>(s) * grad.num_actions + a] * g;
    }
    total += best - current;
  }
  return total;
}

void require_full_visitation(const Eigen::VectorXd& visitation) {
  for (Eigen::Index s = 0; s < visitation.size(); ++s) {
    if (!(visitation(s) >= kMinVisitation)) {
      throw PreconditionFailed("state " + std::to_string(s) + " has visitation " +
                               std::to_string(visitation(s)) +
                               "; every state must be visited with positive probability");
    }
  }
}

double gradient_domination_slack(const MarkovGame& game, const TabularPolicy& policy, int agent,
                                 std::span<const double> deviation) {
  if (agent < 0 || agent >= game.num_agents()) throw InvalidArgument("agent out of range");
  const PolicyEvaluation base(game, policy);
  require_full_visitation(base.visitation());
  const TabularPolicy deviated =
      policy.with_agent(agent, std::vector<double>(deviation.begin(), deviation.end()));
  const PolicyEvaluation dev(game, deviated);

  double ratio = 0.0;
  for (Eigen::Index s = 0; s < base.visitation().size(); ++s) {
    ratio = std::max(ratio, dev.visitation()(s) / base.visitation()(s));
  }
  const auto reward = game.rewards(agent);
  const PolicyGradient grad = base.gradient(reward, agent);
  const double rhs = ratio * max_linear_improvement(policy.agent_params(agent), grad);
  const double lhs = dev.total(reward) - base.total(reward);
  return rhs - lhs;
}

VisitationReport check_full_visitation(const MarkovGame& game, int num_random, std::uint64_t seed) {
  VisitationReport report;
  report.min_visitation = std::numeric_limits<double>::infinity();
  std::mt19937_64 rng(seed);
  auto probe = [&](const TabularPolicy& policy) {
    const PolicyEvaluation eval(game, policy);
    report.min_visitation = std::min(report.min_visitation, eval.visitation().minCoeff());
    ++report.policies_checked;
  };
  probe(TabularPolicy::uniform(game));
  for (int k = 0; k < num_random; ++k) probe(random_policy(game, rng));
  report.satisfied = report.min_visitation >= kMinVisitation;
  return report;
}

}  // namespace mpg
