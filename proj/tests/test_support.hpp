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

#ifndef MPG_TESTS_TEST_SUPPORT_HPP_
#define MPG_TESTS_TEST_SUPPORT_HPP_

// Shared fixtures and independent oracles for the test binaries.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "mpg/mpg_builder.hpp"
#include "mpg/tabular_game.hpp"

namespace mpg::testing {

// Unstructured game: coupled random transitions, uniform(-1,1) rewards.
inline MarkovGame random_game(int n_agents, int num_states, int num_actions, std::uint64_t seed,
                              double gamma = 0.9) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  MarkovGame::Spec spec;
  spec.gamma = gamma;
  for (int s = 0; s < num_states; ++s) spec.state_labels.push_back("s" + std::to_string(s));
  int joint = 1;
  for (int i = 0; i < n_agents; ++i) {
    spec.action_labels.emplace_back();
    for (int a = 0; a < num_actions; ++a) spec.action_labels.back().push_back("a" + std::to_string(a));
    joint *= num_actions;
  }
  for (int row = 0; row < num_states * joint; ++row) {
    std::vector<double> p(num_states);
    double sum = 0.0;
    for (double& x : p) sum += (x = unif(rng));
    for (double x : p) spec.transition.push_back(x / sum);
  }
  for (int i = 0; i < n_agents; ++i) {
    spec.rewards.emplace_back();
    for (int k = 0; k < num_states * joint; ++k) spec.rewards.back().push_back(2.0 * unif(rng) - 1.0);
  }
  double sum = 0.0;
  for (int s = 0; s < num_states; ++s) sum += spec.rho.emplace_back(unif(rng) + 0.1);
  for (double& x : spec.rho) x /= sum;
  return MarkovGame::create(std::move(spec));
}

// Builder instance from a cycling size schedule: N in {2,3},
// |S_i|, |A_i| in {2,3}.
inline GeneratorSpec schedule_spec(Construction c, int index, std::uint64_t seed) {
  GeneratorSpec spec;
  spec.construction = c;
  spec.n_agents = 2 + index % 2;
  spec.local_states = 2 + (index / 2) % 2;
  spec.local_actions = 2 + (index / 4) % 2;
  spec.seed = seed;
  return spec;
}

// Total discounted reward of `reward` under raw per-agent parameter arrays
// (not required to lie on the simplex): the multilinear extension of J.
// Uses a full-pivoting LU, so it shares no solver path with the library.
inline double multilinear_total(const MarkovGame& game,
                                const std::vector<std::vector<double>>& params,
                                std::span<const double> reward) {
  const int ns = game.num_states();
  const int na = game.num_joint_actions();
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(ns, ns);
  Eigen::VectorXd rbar = Eigen::VectorXd::Zero(ns);
  for (int s = 0; s < ns; ++s) {
    for (int a = 0; a < na; ++a) {
      const std::vector<int> digits = game.joint_actions().decode(a);
      double p = 1.0;
      for (int i = 0; i < game.num_agents(); ++i) {
        p *= params[i][static_cast<std::size_t>(s) * game.num_actions(i) + digits[i]];
      }
      rbar(s) += p * reward[static_cast<std::size_t>(s) * na + a];
      for (int t = 0; t < ns; ++t) m(s, t) += p * game.transition(s, a, t);
    }
  }
  const Eigen::MatrixXd system = Eigen::MatrixXd::Identity(ns, ns) - game.gamma() * m;
  const Eigen::VectorXd v = system.fullPivLu().solve(rbar);
  double total = 0.0;
  for (int s = 0; s < ns; ++s) total += game.rho()[s] * v(s);
  return total;
}

// Central finite differences of multilinear_total w.r.t. agent i's block.
inline std::vector<double> fd_gradient(const MarkovGame& game, const TabularPolicy& policy,
                                       std::span<const double> reward, int agent, double h) {
  std::vector<std::vector<double>> params = policy.params();
  std::vector<double> out(params[agent].size());
  for (std::size_t k = 0; k < out.size(); ++k) {
    const double keep = params[agent][k];
    params[agent][k] = keep + h;
    const double up = multilinear_total(game, params, reward);
    params[agent][k] = keep - h;
    const double down = multilinear_total(game, params, reward);
    params[agent][k] = keep;
    out[k] = (up - down) / (2.0 * h);
  }
  return out;
}

inline double relative_error(const std::vector<double>& approx, const std::vector<double>& exact) {
  double diff = 0.0, norm = 0.0;
  for (std::size_t k = 0; k < exact.size(); ++k) {
    diff += (approx[k] - exact[k]) * (approx[k] - exact[k]);
    norm += exact[k] * exact[k];
  }
  return std::sqrt(diff) / std::max(std::sqrt(norm), 1e-300);
}


// Every deterministic joint policy of a small game.
inline std::vector<TabularPolicy> enumerate_deterministic(const MarkovGame& game) {
  const int ns = game.num_states();
  std::vector<int> radices;
  for (int i = 0; i < game.num_agents(); ++i)
    for (int s = 0; s < ns; ++s) radices.push_back(game.num_actions(i));
  const JointIndexer all(radices);
  std::vector<TabularPolicy> out;
  for (int k = 0; k < all.size(); ++k) {
    const std::vector<int> digits = all.decode(k);
    std::vector<std::vector<int>> choice(game.num_agents());
    for (int i = 0; i < game.num_agents(); ++i)
      choice[i].assign(digits.begin() + i * ns, digits.begin() + (i + 1) * ns);
    out.push_back(TabularPolicy::deterministic(game, choice));
  }
  return out;
}

// Blends a fraction of uniform into one agent's block.
inline TabularPolicy mix_uniform(const TabularPolicy& policy, int agent, double weight) {
  std::vector<double> block(policy.agent_params(agent).begin(), policy.agent_params(agent).end());
  const double u = 1.0 / policy.num_actions(agent);
  for (double& x : block) x = (1.0 - weight) * x + weight * u;
  return policy.with_agent(agent, std::move(block));
}

}  // namespace mpg::testing

#endif  // MPG_TESTS_TEST_SUPPORT_HPP_
