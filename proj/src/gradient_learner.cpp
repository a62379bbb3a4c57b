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

#include "mpg/gradient_learner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mpg/errors.hpp"
#include "mpg/exact_evaluator.hpp"

namespace mpg {
namespace {

constexpr double kValueIterationTol = 1e-12;
constexpr int kValueIterationCap = 100000;

// Projects each |A|-row of `block` onto the simplex.
std::vector<double> project_rows(const std::vector<double>& block, int num_states, int num_actions) {
  std::vector<double> out(block.size());
  for (int s = 0; s < num_states; ++s) {
    const std::size_t off = static_cast<std::size_t>(s) * num_actions;
    const auto row = project_simplex(std::span<const double>(block.data() + off, num_actions));
    std::copy(row.begin(), row.end(), out.begin() + static_cast<std::ptrdiff_t>(off));
  }
  return out;
}

TabularPolicy ascend(const MarkovGame& game, const TabularPolicy& policy,
                     const std::vector<PolicyGradient>& grads, double eta) {
  std::vector<int> counts;
  std::vector<std::vector<double>> params;
  for (int i = 0; i < game.num_agents(); ++i) {
    counts.push_back(game.num_actions(i));
    std::vector<double> block(policy.agent_params(i).begin(), policy.agent_params(i).end());
    for (std::size_t k = 0; k < block.size(); ++k) block[k] += eta * grads[i].entries[k];
    params.push_back(project_rows(block, game.num_states(), game.num_actions(i)));
  }
  return TabularPolicy::create(game.num_states(), std::move(counts), std::move(params));
}

double step_norm(const TabularPolicy& a, const TabularPolicy& b) {
  double acc = 0.0;
  for (int i = 0; i < a.num_agents(); ++i) {
    const auto x = a.agent_params(i);
    const auto y = b.agent_params(i);
    for (std::size_t k = 0; k < x.size(); ++k) acc += (x[k] - y[k]) * (x[k] - y[k]);
  }
  return std::sqrt(acc);
}

}  // namespace

std::string to_string(LearnMode mode) {
  return mode == LearnMode::kPotential ? "potential" : "independent";
}

LearnMode learn_mode_from_string(const std::string& name) {
  if (name == "potential") return LearnMode::kPotential;
  if (name == "independent") return LearnMode::kIndependent;
  throw InvalidArgument("unknown learning mode '" + name + "'");
}

void LearnConfig::validate() const {
  if (!(eta > 0.0)) throw InvalidArgument("eta must be > 0");
  if (max_iters < 1) throw InvalidArgument("max_iters must be >= 1");
  if (!(stationarity_tol > 0.0)) throw InvalidArgument("stationarity_tol must be > 0");
}

TabularPolicy independent_gradient_step(const MarkovGame& game, const TabularPolicy& policy,
                                        double eta) {
  if (eta < 0.0) throw InvalidArgument("eta must be >= 0");
  const PolicyEvaluation eval(game, policy);
  std::vector<PolicyGradient> grads;
  for (int i = 0; i < game.num_agents(); ++i) grads.push_back(eval.gradient(game.rewards(i), i));
  return ascend(game, policy, grads, eta);
}

TabularPolicy potential_ascent_step(const MarkovGame& game, std::span<const double> phi,
                                    const TabularPolicy& policy, double eta) {
  if (eta < 0.0) throw InvalidArgument("eta must be >= 0");
  const PolicyEvaluation eval(game, policy);
  std::vector<PolicyGradient> grads;
  for (int i = 0; i < game.num_agents(); ++i) grads.push_back(eval.gradient(phi, i));
  return ascend(game, policy, grads, eta);
}

double stationarity_gap(const MarkovGame& game, const TabularPolicy& policy) {
  const PolicyEvaluation eval(game, policy);
  double gap = 0.0;
  for (int i = 0; i < game.num_agents(); ++i) {
    gap = std::max(gap, max_linear_improvement(policy.agent_params(i),
                                               eval.gradient(game.rewards(i), i)));
  }
  return gap;
}

BestResponse best_response(const MarkovGame& game, const TabularPolicy& policy, int agent) {
  if (agent < 0 || agent >= game.num_agents()) throw InvalidArgument("agent out of range");
  policy.check_compatible(game);
  const int num_states = game.num_states();
  const int num_joint = game.num_joint_actions();
  const int m = game.num_actions(agent);
  const int n = game.num_agents();
  const auto& joint = game.joint_actions();
  const auto reward = game.rewards(agent);

  // Induced single-agent MDP: [s][a_i][s'] and [s][a_i].
  std::vector<double> kernel(static_cast<std::size_t>(num_states) * m * num_states, 0.0);
  std::vector<double> r(static_cast<std::size_t>(num_states) * m, 0.0);
  for (int s = 0; s < num_states; ++s) {
    for (int a = 0; a < num_joint; ++a) {
      double others = 1.0;
      for (int j = 0; j < n; ++j) {
        if (j != agent) others *= policy.prob(j, s, joint.digit(a, j));
      }
      if (others == 0.0) continue;
      const int ai = joint.digit(a, agent);
      const std::size_t cell = static_cast<std::size_t>(s) * m + ai;
      r[cell] += others * reward[static_cast<std::size_t>(s) * num_joint + a];
      const auto row = game.transition_row(s, a);
      for (int next = 0; next < num_states; ++next) kernel[cell * num_states + next] += others * row[next];
    }
  }

  const double gamma = game.gamma();
  std::vector<double> v(num_states, 0.0), next_v(num_states, 0.0);
  auto q_value = [&](int s, int ai, const std::vector<double>& values) {
    const std::size_t cell = static_cast<std::size_t>(s) * m + ai;
    double future = 0.0;
    for (int next = 0; next < num_states; ++next) future += kernel[cell * num_states + next] * values[next];
    return r[cell] + gamma * future;
  };
  BestResponse br;
  bool done = false;
  for (int sweep = 1; sweep <= kValueIterationCap; ++sweep) {
    double delta = 0.0;
    for (int s = 0; s < num_states; ++s) {
      double best = -std::numeric_limits<double>::infinity();
      for (int ai = 0; ai < m; ++ai) best = std::max(best, q_value(s, ai, v));
      next_v[s] = best;
      delta = std::max(delta, std::abs(best - v[s]));
    }
    v.swap(next_v);
    br.sweeps = sweep;
    if (delta < kValueIterationTol) {
      done = true;
      break;
    }
  }
  if (!done) throw InternalError("best-response value iteration did not converge");

  br.actions.assign(num_states, 0);
  br.block.assign(static_cast<std::size_t>(num_states) * m, 0.0);
  for (int s = 0; s < num_states; ++s) {
    double best = q_value(s, 0, v);
    for (int ai = 1; ai < m; ++ai) {
      const double q = q_value(s, ai, v);
      if (q > best) {
        best = q;
        br.actions[s] = ai;
      }
    }
    br.block[static_cast<std::size_t>(s) * m + br.actions[s]] = 1.0;
  }
  br.value = total_reward(game, policy.with_agent(agent, br.block), agent);
  return br;
}

std::vector<double> exploitability(const MarkovGame& game, const TabularPolicy& policy) {
  const PolicyEvaluation eval(game, policy);
  std::vector<double> out(game.num_agents());
  for (int i = 0; i < game.num_agents(); ++i) {
    out[i] = best_response(game, policy, i).value - eval.total(game.rewards(i));
  }
  return out;
}

LearnTrace train(const MarkovGame& game, std::optional<std::span<const double>> phi,
                 const LearnConfig& config, std::optional<TabularPolicy> initial) {
  config.validate();
  if (config.mode == LearnMode::kPotential && !phi) {
    throw InvalidArgument("potential mode requires a potential function");
  }
  if (phi && phi->size() != static_cast<std::size_t>(game.num_states()) * game.num_joint_actions()) {
    throw InvalidArgument("potential tensor does not match game dimensions");
  }
  TabularPolicy policy = initial ? std::move(*initial) : TabularPolicy::uniform(game);
  policy.check_compatible(game);
  LearnTrace trace{{}, policy, 0.0, false};

  for (int t = 0; t < config.max_iters; ++t) {
    const PolicyEvaluation eval(game, policy);
    LearnRecord rec;
    rec.iteration = t;
    rec.potential = phi ? eval.total(*phi) : std::numeric_limits<double>::quiet_NaN();
    std::vector<PolicyGradient> own;
    for (int i = 0; i < game.num_agents(); ++i) {
      rec.totals.push_back(eval.total(game.rewards(i)));
      own.push_back(eval.gradient(game.rewards(i), i));
      rec.gap = std::max(rec.gap, max_linear_improvement(policy.agent_params(i), own.back()));
    }
    if (rec.gap < config.stationarity_tol) {
      trace.records.push_back(std::move(rec));
      trace.converged = true;
      break;
    }
    std::vector<PolicyGradient> direction;
    if (config.mode == LearnMode::kPotential) {
      for (int i = 0; i < game.num_agents(); ++i) direction.push_back(eval.gradient(*phi, i));
    } else {
      direction = std::move(own);
    }
    TabularPolicy next = ascend(game, policy, direction, config.eta);
    rec.step_norm = step_norm(policy, next);
    trace.records.push_back(std::move(rec));
    policy = std::move(next);
  }
  trace.final_gap = stationarity_gap(game, policy);
  if (!trace.converged) trace.converged = trace.final_gap < config.stationarity_tol;
  trace.final_policy = std::move(policy);
  return trace;
}

}  // namespace mpg
