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

#ifndef MPG_TABULAR_GAME_HPP_
#define MPG_TABULAR_GAME_HPP_

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace mpg {

// Tolerance for stochasticity checks on constructed tensors.
inline constexpr double kConstructionTol = 1e-12;
// Tolerance for sums derived from solves or products.
inline constexpr double kDerivedTol = 1e-10;

// Row-major mixed-radix indexing over (x_1, ..., x_N); used for joint actions
// and for global states of factored games.
class JointIndexer {
 public:
  JointIndexer() = default;
  explicit JointIndexer(std::vector<int> radices);

  int size() const { return size_; }
  int positions() const { return static_cast<int>(radices_.size()); }
  int radix(int position) const { return radices_[position]; }
  const std::vector<int>& radices() const { return radices_; }

  int encode(std::span<const int> digits) const;
  std::vector<int> decode(int index) const;
  int digit(int index, int position) const {
    return (index / strides_[position]) % radices_[position];
  }
  int stride(int position) const { return strides_[position]; }

 private:
  std::vector<int> radices_;
  std::vector<int> strides_;
  int size_ = 1;
};

// Finite N-agent Markov game. Immutable after create(); every invariant is
// checked there and violations throw InvalidArgument naming the indices.
class MarkovGame {
 public:
  struct Spec {
    std::vector<std::string> state_labels;
    // action_labels[i] lists agent i's actions; its size is |A_i|.
    std::vector<std::vector<std::string>> action_labels;
    // P(s'|s,a) laid out as [s][joint a][s'].
    std::vector<double> transition;
    // rewards[i] laid out as [s][joint a].
    std::vector<std::vector<double>> rewards;
    double gamma = 0.0;
    std::vector<double> rho;
    // Local state counts when the global state space is a product
    // (row-major over agents); empty for unstructured games.
    std::vector<int> local_state_counts;
  };

  static MarkovGame create(Spec spec);

  int num_agents() const { return static_cast<int>(spec_.action_labels.size()); }
  int num_states() const { return static_cast<int>(spec_.state_labels.size()); }
  int num_actions(int agent) const {
    return static_cast<int>(spec_.action_labels[agent].size());
  }
  int num_joint_actions() const { return joint_.size(); }
  const JointIndexer& joint_actions() const { return joint_; }
  bool is_factored() const { return !spec_.local_state_counts.empty(); }
  const JointIndexer& local_states() const { return local_states_; }

  double transition(int s, int a, int s_next) const {
    return spec_.transition[(static_cast<std::size_t>(s) * num_joint_actions() + a) *
                                num_states() +
                            s_next];
  }
  std::span<const double> transition_row(int s, int a) const;
  double reward(int agent, int s, int a) const {
    return spec_.rewards[agent][static_cast<std::size_t>(s) * num_joint_actions() + a];
  }
  // Agent reward tensor, [s][joint a].
  std::span<const double> rewards(int agent) const { return spec_.rewards[agent]; }
  double gamma() const { return spec_.gamma; }
  std::span<const double> rho() const { return spec_.rho; }
  const Spec& spec() const { return spec_; }

  // Same dynamics, new rewards; revalidated.
  MarkovGame with_rewards(std::vector<std::vector<double>> rewards) const;

 private:
  explicit MarkovGame(Spec spec);
  Spec spec_;
  JointIndexer joint_;
  JointIndexer local_states_;
};

// Direct policy parameterization: theta_i is |S| x |A_i|, each row on the
// probability simplex.
class TabularPolicy {
 public:
  // params[i] is row-major |S| x |A_i|.
  static TabularPolicy create(int num_states, std::vector<int> num_actions,
                              std::vector<std::vector<double>> params);
  static TabularPolicy uniform(const MarkovGame& game);
  // choice[i][s] is agent i's action in state s.
  static TabularPolicy deterministic(const MarkovGame& game,
                                     const std::vector<std::vector<int>>& choice);

  int num_agents() const { return static_cast<int>(params_.size()); }
  int num_states() const { return num_states_; }
  int num_actions(int agent) const { return num_actions_[agent]; }
  const JointIndexer& joint_actions() const { return joint_; }

  double prob(int agent, int s, int action) const {
    return params_[agent][static_cast<std::size_t>(s) * num_actions_[agent] + action];
  }
  std::span<const double> row(int agent, int s) const;
  std::span<const double> agent_params(int agent) const { return params_[agent]; }
  const std::vector<std::vector<double>>& params() const { return params_; }

  // Replaces agent i's block (validated).
  TabularPolicy with_agent(int agent, std::vector<double> block) const;

  // Throws InvalidArgument when shapes disagree with the game.
  void check_compatible(const MarkovGame& game) const;

 private:
  TabularPolicy(int num_states, std::vector<int> num_actions,
                std::vector<std::vector<double>> params);
  int num_states_ = 0;
  std::vector<int> num_actions_;
  std::vector<std::vector<double>> params_;
  JointIndexer joint_;
};

// Per-agent local kernels P_i(s_i'|s_i,a_i), each laid out [s_i][a_i][s_i'].
class FactoredTransition {
 public:
  struct Local {
    int num_states = 0;
    int num_actions = 0;
    std::vector<double> probs;
    double operator()(int s, int a, int s_next) const {
      return probs[(static_cast<std::size_t>(s) * num_actions + a) * num_states + s_next];
    }
  };

  static FactoredTransition create(std::vector<Local> locals);

  int num_agents() const { return static_cast<int>(locals_.size()); }
  const Local& local(int agent) const { return locals_[agent]; }
  const std::vector<Local>& locals() const { return locals_; }
  JointIndexer global_states() const;
  JointIndexer joint_actions() const;

 private:
  explicit FactoredTransition(std::vector<Local> locals) : locals_(std::move(locals)) {}
  std::vector<Local> locals_;
};

struct ExpandedTransition {
  int num_states = 0;
  int num_joint_actions = 0;
  // [s][joint a][s']
  std::vector<double> probs;
};

// pi(a|s) = prod_i theta_i(s, a_i).
double joint_policy_prob(const TabularPolicy& policy, int s, int a);

// Euclidean projection onto the probability simplex (sort-based).
std::vector<double> project_simplex(std::span<const double> v);

// Global kernel of a factored transition: product of locals, states and
// joint actions enumerated row-major over agents.
ExpandedTransition expand_factored(const FactoredTransition& factored);

// Product of per-agent initial distributions, row-major over agents.
std::vector<double> product_distribution(const std::vector<std::vector<double>>& locals);

// Rows drawn by normalizing i.i.d. uniform(0,1) entries; full support.
std::vector<double> random_simplex_block(int num_states, int num_actions, std::mt19937_64& rng);
TabularPolicy random_policy(const MarkovGame& game, std::mt19937_64& rng);

// Draws s' ~ P(.|s,a) from a generator seeded with `seed`.
int sample_transition(const MarkovGame& game, int s, int a, std::uint64_t seed);

}  // namespace mpg

#endif  // MPG_TABULAR_GAME_HPP_
