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

#ifndef MPG_MPG_BUILDER_HPP_
#define MPG_MPG_BUILDER_HPP_

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mpg/exact_evaluator.hpp"
#include "mpg/tabular_game.hpp"

namespace mpg {

enum class Construction { kSelf, kJoint, kMixed, kExternal };

std::string to_string(Construction c);
Construction construction_from_string(const std::string& name);

// Pairwise interaction terms r_ij(s_i, s_j, a_i, a_j), stored once per
// unordered pair {i < j} as [s_i][s_j][a_i][a_j]. The counterpart r_ji is
// generated by index swap, so symmetry holds by construction.
class PairwiseTerms {
 public:
  PairwiseTerms() = default;
  // upper[{i,j}] with i < j; every pair must be present.
  static PairwiseTerms from_upper(std::vector<int> local_states, std::vector<int> local_actions,
                                  std::map<std::pair<int, int>, std::vector<double>> upper);
  // ordered[{i,j}] for every i != j. Throws InvalidArgument at the first
  // index where r_ij(s_i,s_j,a_i,a_j) != r_ji(s_j,s_i,a_j,a_i).
  static PairwiseTerms from_ordered(std::vector<int> local_states, std::vector<int> local_actions,
                                    const std::map<std::pair<int, int>, std::vector<double>>& ordered);
  // Every pair term equal to `value`.
  static PairwiseTerms constant(std::vector<int> local_states, std::vector<int> local_actions,
                                double value);

  int num_agents() const { return static_cast<int>(local_states_.size()); }
  bool empty() const { return upper_.empty(); }
  // r_ij for any ordered i != j.
  double operator()(int i, int j, int s_i, int s_j, int a_i, int a_j) const;
  const std::vector<double>& upper(int i, int j) const { return upper_.at({i, j}); }

 private:
  std::vector<int> local_states_;
  std::vector<int> local_actions_;
  std::map<std::pair<int, int>, std::vector<double>> upper_;
};

struct RewardStructure {
  // self_terms[i] is [s_i][a_i]; may be empty when alpha == 0.
  std::vector<std::vector<double>> self_terms;
  PairwiseTerms pairwise;
  double alpha = 1.0;
  double beta = 1.0;
};

// Policy class used for random verification points. kGlobal: every agent
// conditions on the full joint state (the direct parameterization).
// kLocal: agent i's row depends on its own local state s_i only.
enum class PolicyClass { kGlobal, kLocal };

std::string to_string(PolicyClass c);
PolicyClass policy_class_from_string(const std::string& name);

struct DeviationTrial {
  int agent = 0;
  double lhs = 0.0;  // J_i(theta'_i, theta_-i) - J_i(theta)
  double rhs = 0.0;  // Phi(theta'_i, theta_-i) - Phi(theta)
  double violation = 0.0;
  // Same identity started from each state, maximized over states.
  double state_violation = 0.0;
};

struct PotentialCertificate {
  Construction construction = Construction::kExternal;
  // phi(s, a), [s][joint a].
  std::vector<double> phi;
  std::vector<DeviationTrial> trials;
  double max_violation = 0.0;
  double max_state_violation = 0.0;
  double tol = 1e-8;
  std::uint64_t seed = 0;
  PolicyClass policy_class = PolicyClass::kGlobal;
  bool verified = false;
  bool passed = false;
};

struct BuiltGame {
  MarkovGame game;
  PotentialCertificate certificate;
};

// Splits a global kernel into per-agent locals. Throws InvalidArgument when
// some agent's next local state depends on other agents' states or actions,
// or when the kernel is not the product of its marginals.
FactoredTransition factor_transition(const ExpandedTransition& global,
                                     const std::vector<int>& local_states,
                                     const std::vector<int>& local_actions);

BuiltGame build_self_reward_game(const FactoredTransition& locals,
                                 const std::vector<std::vector<double>>& self_terms, double gamma,
                                 const std::vector<std::vector<double>>& rho_locals);
BuiltGame build_pairwise_symmetric_game(const FactoredTransition& locals,
                                        const PairwiseTerms& pairwise, double gamma,
                                        const std::vector<std::vector<double>>& rho_locals);
BuiltGame build_mixed_game(const FactoredTransition& locals, const RewardStructure& structure,
                           double gamma, const std::vector<std::vector<double>>& rho_locals);

// Phi(theta): rho-weighted discounted value of phi.
double potential_value(const MarkovGame& game, const TabularPolicy& policy,
                       std::span<const double> phi);

// |S| x |A_i| block whose rows depend on s_i only. Requires a factored game.
std::vector<double> random_local_block(const MarkovGame& game, int agent, std::mt19937_64& rng);
TabularPolicy random_local_policy(const MarkovGame& game, std::mt19937_64& rng);

// Sums a global-state gradient over the states sharing each s_i, giving the
// derivative along rows that depend on s_i only. Layout [s_i][a_i].
std::vector<double> local_gradient(const MarkovGame& game, const PolicyGradient& grad, int agent);

struct DeviationSpec {
  int agent = 0;
  TabularPolicy policy;
  std::vector<double> deviation;  // agent's |S| x |A_i| block
};

// Random trials: agent uniform, theta and theta'_i from normalized
// uniform(0,1) rows.
std::vector<DeviationSpec> sample_deviations(const MarkovGame& game, int n_trials,
                                             std::uint64_t seed,
                                             PolicyClass policy_class = PolicyClass::kGlobal);

PotentialCertificate verify_mpg(const MarkovGame& game, std::span<const double> phi, int n_trials,
                                std::uint64_t seed, double tol = 1e-8,
                                PolicyClass policy_class = PolicyClass::kGlobal);
PotentialCertificate verify_mpg_trials(const MarkovGame& game, std::span<const double> phi,
                                       const std::vector<DeviationSpec>& trials, double tol = 1e-8);

struct GradientIdentityReport {
  std::vector<double> per_agent_max_diff;
  double max_diff = 0.0;
  double tol = 0.0;
  bool passed = false;
};

// Compares grad_i J_i against grad_i Phi for every agent, row-centered so
// that only feasible (zero row sum) directions count. With kLocal both
// gradients are first reduced by local_gradient.
GradientIdentityReport potential_gradient_identity_check(
    const MarkovGame& game, std::span<const double> phi, const TabularPolicy& policy, double tol,
    PolicyClass policy_class = PolicyClass::kGlobal);

// Random instances for tests, benchmarks and the CLI generator.
struct GeneratorSpec {
  Construction construction = Construction::kMixed;
  int n_agents = 2;
  int local_states = 2;
  int local_actions = 2;
  double gamma = 0.9;
  double alpha = 1.0;
  double beta = 1.0;
  std::uint64_t seed = 0;
};
BuiltGame generate_game(const GeneratorSpec& spec);

}  // namespace mpg

#endif  // MPG_MPG_BUILDER_HPP_
