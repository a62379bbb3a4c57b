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

#include "mpg/serial_reference.hpp"

#include <algorithm>
#include <cmath>

#include "mpg/errors.hpp"

namespace mpg::serial {

Eigen::MatrixXd induced_transition(const MarkovGame& game, const TabularPolicy& policy) {
  policy.check_compatible(game);
  const int num_states = game.num_states();
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(num_states, num_states);
  for (int s = 0; s < num_states; ++s) {
    for (int a = 0; a < game.num_joint_actions(); ++a) {
      const double p = joint_policy_prob(policy, s, a);
      if (p == 0.0) continue;
      for (int next = 0; next < num_states; ++next) m(s, next) += p * game.transition(s, a, next);
    }
  }
  return m;
}

PolicyGradient policy_gradient(const MarkovGame& game, const TabularPolicy& policy,
                               std::span<const double> reward, int agent) {
  const PolicyEvaluation eval(game, policy);
  const Eigen::VectorXd v = eval.value(reward);
  const auto& joint = game.joint_actions();
  PolicyGradient grad;
  grad.num_states = game.num_states();
  grad.num_actions = game.num_actions(agent);
  grad.entries.assign(static_cast<std::size_t>(grad.num_states) * grad.num_actions, 0.0);
  for (int s = 0; s < game.num_states(); ++s) {
    for (int a = 0; a < game.num_joint_actions(); ++a) {
      double others = 1.0;
      for (int j = 0; j < game.num_agents(); ++j) {
        if (j != agent) others *= policy.prob(j, s, joint.digit(a, j));
      }
      if (others == 0.0) continue;
      double future = 0.0;
      for (int next = 0; next < game.num_states(); ++next) future += game.transition(s, a, next) * v(next);
      const double q = reward[static_cast<std::size_t>(s) * game.num_joint_actions() + a] +
                       game.gamma() * future;
      grad.entries[static_cast<std::size_t>(s) * grad.num_actions + joint.digit(a, agent)] += others * q;
    }
    const double weight = eval.visitation()(s) / (1.0 - game.gamma());
    for (int k = 0; k < grad.num_actions; ++k) {
      grad.entries[static_cast<std::size_t>(s) * grad.num_actions + k] *= weight;
    }
  }
  return grad;
}

PotentialCertificate verify_mpg_trials(const MarkovGame& game, std::span<const double> phi,
                                       const std::vector<DeviationSpec>& trials, double tol) {
  PotentialCertificate cert;
  cert.phi.assign(phi.begin(), phi.end());
  cert.tol = tol;
  const Eigen::Map<const Eigen::VectorXd> rho(game.rho().data(), game.num_states());
  for (const auto& spec : trials) {
    const TabularPolicy deviated = spec.policy.with_agent(spec.agent, spec.deviation);
    const PolicyEvaluation base(game, spec.policy);
    const PolicyEvaluation dev(game, deviated);
    const auto reward = game.rewards(spec.agent);
    const Eigen::VectorXd dv = dev.value(reward) - base.value(reward);
    const Eigen::VectorXd dphi = dev.value(phi) - base.value(phi);
    DeviationTrial t;
    t.agent = spec.agent;
    t.lhs = rho.dot(dv);
    t.rhs = rho.dot(dphi);
    t.violation = std::abs(t.lhs - t.rhs);
    t.state_violation = (dv - dphi).cwiseAbs().maxCoeff();
    cert.max_violation = std::max(cert.max_violation, t.violation);
    cert.max_state_violation = std::max(cert.max_state_violation, t.state_violation);
    cert.trials.push_back(t);
  }
  cert.verified = true;
  cert.passed = cert.max_violation < tol && cert.max_state_violation < tol;
  return cert;
}

driving::RolloutGradient batch_objective_and_gradient(
    const driving::MlpPolicy& net, const std::vector<driving::IntersectionState>& batch,
    const driving::EnvConfig& config, const driving::RolloutObjective& objective,
    const driving::ControlSpec& control) {
  if (batch.empty()) throw InvalidArgument("empty batch");
  driving::RolloutGradient mean;
  mean.gradient.assign(driving::MlpPolicy::kNumParams, 0.0);
  for (const auto& s0 : batch) {
    const auto part = driving::rollout_objective_and_gradient(net, s0, config, objective, control);
    mean.objective += part.objective;
    for (std::size_t q = 0; q < mean.gradient.size(); ++q) mean.gradient[q] += part.gradient[q];
  }
  const double count = static_cast<double>(batch.size());
  mean.objective /= count;
  for (double& x : mean.gradient) x /= count;
  return mean;
}

driving::StudyReport run_study(const driving::MlpPolicy& net, const std::string& label,
                               driving::Surrounding surrounding, int n, std::uint64_t seed,
                               const driving::EnvConfig& env) {
  driving::StudyReport report;
  report.policy_label = label;
  report.env = env;
  report.seed = seed;
  report.strata = driving::strata_for(n, 2 * env.num_vehicles());
  const auto scenarios = driving::study_scenarios(n, env, seed);
  const auto policy = driving::matchup_policy(net, surrounding, env);
  report.row.surrounding = surrounding;
  double speed = 0.0;
  for (std::size_t k = 0; k < scenarios.size(); ++k) {
    report.scenarios.push_back(
        driving::evaluate_scenario(policy, scenarios[k], env, static_cast<int>(k), seed));
    report.row.collisions += report.scenarios.back().collision ? 1 : 0;
    speed += report.scenarios.back().mean_speeds[env.ego];
  }
  report.row.scenarios = static_cast<int>(scenarios.size());
  report.row.avg_ego_speed = speed / report.row.scenarios;
  return report;
}

}  // namespace mpg::serial
