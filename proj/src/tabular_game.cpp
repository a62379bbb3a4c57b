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

#include "mpg/tabular_game.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "mpg/errors.hpp"

namespace mpg {
namespace {

template <typename... Args>
std::string cat(Args&&... args) {
  std::ostringstream os;
  (os << ... << args);
  return os.str();
}

void check_distribution(std::span<const double> row, double tol, const std::string& where) {
  double sum = 0.0;
  for (std::size_t k = 0; k < row.size(); ++k) {
    if (!std::isfinite(row[k]) || row[k] < 0.0) {
      throw InvalidArgument(cat(where, ": entry ", k, " is ", row[k], " (must be finite and >= 0)"));
    }
    sum += row[k];
  }
  if (std::abs(sum - 1.0) > tol) {
    throw InvalidArgument(cat(where, ": sums to ", sum, " (expected 1)"));
  }
}

}  // namespace

JointIndexer::JointIndexer(std::vector<int> radices) : radices_(std::move(radices)) {
  strides_.assign(radices_.size(), 1);
  size_ = 1;
  for (int p = static_cast<int>(radices_.size()) - 1; p >= 0; --p) {
    if (radices_[p] < 1) throw InvalidArgument(cat("radix ", p, " must be >= 1"));
    strides_[p] = size_;
    size_ *= radices_[p];
  }
}

int JointIndexer::encode(std::span<const int> digits) const {
  if (digits.size() != radices_.size()) throw InvalidArgument("digit count mismatch");
  int index = 0;
  for (std::size_t p = 0; p < digits.size(); ++p) {
    if (digits[p] < 0 || digits[p] >= radices_[p]) {
      throw InvalidArgument(cat("digit ", p, " out of range: ", digits[p]));
    }
    index += digits[p] * strides_[p];
  }
  return index;
}

std::vector<int> JointIndexer::decode(int index) const {
  if (index < 0 || index >= size_) throw InvalidArgument(cat("index out of range: ", index));
  std::vector<int> digits(radices_.size());
  for (std::size_t p = 0; p < radices_.size(); ++p) digits[p] = digit(index, static_cast<int>(p));
  return digits;
}

MarkovGame::MarkovGame(Spec spec) : spec_(std::move(spec)) {
  std::vector<int> counts;
  for (const auto& labels : spec_.action_labels) counts.push_back(static_cast<int>(labels.size()));
  joint_ = JointIndexer(counts);
  if (!spec_.local_state_counts.empty()) local_states_ = JointIndexer(spec_.local_state_counts);
}

MarkovGame MarkovGame::create(Spec spec) {
  const int n = static_cast<int>(spec.action_labels.size());
  if (n < 1) throw InvalidArgument("game needs at least one agent");
  const int num_states = static_cast<int>(spec.state_labels.size());
  if (num_states < 1) throw InvalidArgument("game needs at least one state");
  for (int i = 0; i < n; ++i) {
    if (spec.action_labels[i].empty()) {
      throw InvalidArgument(cat("agent ", i, " has no actions"));
    }
  }
  if (!(spec.gamma >= 0.0 && spec.gamma < 1.0)) {
    throw InvalidArgument(cat("gamma must lie in [0,1), got ", spec.gamma));
  }
  if (!spec.local_state_counts.empty()) {
    if (static_cast<int>(spec.local_state_counts.size()) != n) {
      throw InvalidArgument("local_state_counts must have one entry per agent");
    }
    if (JointIndexer(spec.local_state_counts).size() != num_states) {
      throw InvalidArgument("product of local state counts differs from |S|");
    }
  }
  MarkovGame game(std::move(spec));
  const auto& s = game.spec_;
  const std::size_t num_joint = static_cast<std::size_t>(game.num_joint_actions());
  if (s.transition.size() != static_cast<std::size_t>(num_states) * num_joint * num_states) {
    throw InvalidArgument(cat("transition has ", s.transition.size(), " entries, expected ",
                              static_cast<std::size_t>(num_states) * num_joint * num_states));
  }
  for (int st = 0; st < num_states; ++st) {
    for (int a = 0; a < static_cast<int>(num_joint); ++a) {
      check_distribution(game.transition_row(st, a), kConstructionTol,
                         cat("transition row (s=", st, ", a=", a, ")"));
    }
  }
  if (static_cast<int>(s.rewards.size()) != n) {
    throw InvalidArgument(cat("expected ", n, " reward tensors, got ", s.rewards.size()));
  }
  for (int i = 0; i < n; ++i) {
    if (s.rewards[i].size() != static_cast<std::size_t>(num_states) * num_joint) {
      throw InvalidArgument(cat("reward tensor of agent ", i, " has wrong size"));
    }
    for (std::size_t k = 0; k < s.rewards[i].size(); ++k) {
      if (!std::isfinite(s.rewards[i][k])) {
        throw InvalidArgument(cat("reward (agent=", i, ", s=", k / num_joint, ", a=", k % num_joint,
                                  ") is not finite"));
      }
    }
  }
  if (static_cast<int>(s.rho.size()) != num_states) {
    throw InvalidArgument(cat("rho has ", s.rho.size(), " entries, expected ", num_states));
  }
  check_distribution(s.rho, kConstructionTol, "rho");
  return game;
}

std::span<const double> MarkovGame::transition_row(int s, int a) const {
  const std::size_t offset =
      (static_cast<std::size_t>(s) * num_joint_actions() + a) * num_states();
  return {spec_.transition.data() + offset, static_cast<std::size_t>(num_states())};
}

MarkovGame MarkovGame::with_rewards(std::vector<std::vector<double>> rewards) const {
  Spec copy = spec_;
  copy.rewards = std::move(rewards);
  return create(std::move(copy));
}

TabularPolicy::TabularPolicy(int num_states, std::vector<int> num_actions,
                             std::vector<std::vector<double>> params)
    : num_states_(num_states),
      num_actions_(std::move(num_actions)),
      params_(std::move(params)),
      joint_(num_actions_) {}

TabularPolicy TabularPolicy::create(int num_states, std::vector<int> num_actions,
                                    std::vector<std::vector<double>> params) {
  if (num_states < 1) throw InvalidArgument("policy needs at least one state");
  if (params.size() != num_actions.size() || params.empty()) {
    throw InvalidArgument("policy needs one parameter block per agent");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (num_actions[i] < 1) throw InvalidArgument(cat("agent ", i, " has no actions"));
    if (params[i].size() != static_cast<std::size_t>(num_states) * num_actions[i]) {
      throw InvalidArgument(cat("parameter block of agent ", i, " has wrong size"));
    }
    for (int s = 0; s < num_states; ++s) {
      check_distribution(
          std::span<const double>(params[i].data() + static_cast<std::size_t>(s) * num_actions[i],
                                  num_actions[i]),
          kConstructionTol, cat("policy row (agent=", i, ", s=", s, ")"));
    }
  }
  return TabularPolicy(num_states, std::move(num_actions), std::move(params));
}

TabularPolicy TabularPolicy::uniform(const MarkovGame& game) {
  std::vector<int> counts;
  std::vector<std::vector<double>> params;
  for (int i = 0; i < game.num_agents(); ++i) {
    const int m = game.num_actions(i);
    counts.push_back(m);
    params.emplace_back(static_cast<std::size_t>(game.num_states()) * m, 1.0 / m);
  }
  return create(game.num_states(), std::move(counts), std::move(params));
}

TabularPolicy TabularPolicy::deterministic(const MarkovGame& game,
                                           const std::vector<std::vector<int>>& choice) {
  if (static_cast<int>(choice.size()) != game.num_agents()) {
    throw InvalidArgument("deterministic policy needs one choice vector per agent");
  }
  std::vector<int> counts;
  std::vector<std::vector<double>> params;
  for (int i = 0; i < game.num_agents(); ++i) {
    const int m = game.num_actions(i);
    counts.push_back(m);
    if (static_cast<int>(choice[i].size()) != game.num_states()) {
      throw InvalidArgument(cat("choice vector of agent ", i, " has wrong length"));
    }
    std::vector<double> block(static_cast<std::size_t>(game.num_states()) * m, 0.0);
    for (int s = 0; s < game.num_states(); ++s) {
      if (choice[i][s] < 0 || choice[i][s] >= m) {
        throw InvalidArgument(cat("choice (agent=", i, ", s=", s, ") out of range"));
      }
      block[static_cast<std::size_t>(s) * m + choice[i][s]] = 1.0;
    }
    params.push_back(std::move(block));
  }
  return create(game.num_states(), std::move(counts), std::move(params));
}

std::span<const double> TabularPolicy::row(int agent, int s) const {
  return {params_[agent].data() + static_cast<std::size_t>(s) * num_actions_[agent],
          static_cast<std::size_t>(num_actions_[agent])};
}

TabularPolicy TabularPolicy::with_agent(int agent, std::vector<double> block) const {
  if (agent < 0 || agent >= num_agents()) throw InvalidArgument(cat("agent out of range: ", agent));
  auto params = params_;
  params[agent] = std::move(block);
  return create(num_states_, num_actions_, std::move(params));
}

void TabularPolicy::check_compatible(const MarkovGame& game) const {
  if (game.num_agents() != num_agents() || game.num_states() != num_states_) {
    throw InvalidArgument("policy shape does not match game");
  }
  for (int i = 0; i < num_agents(); ++i) {
    if (game.num_actions(i) != num_actions_[i]) {
      throw InvalidArgument(cat("policy action count of agent ", i, " does not match game"));
    }
  }
}

FactoredTransition FactoredTransition::create(std::vector<Local> locals) {
  if (locals.empty()) throw InvalidArgument("factored transition needs at least one agent");
  for (std::size_t i = 0; i < locals.size(); ++i) {
    const auto& l = locals[i];
    if (l.num_states < 1 || l.num_actions < 1) {
      throw InvalidArgument(cat("local kernel ", i, " has empty state or action set"));
    }
    if (l.probs.size() != static_cast<std::size_t>(l.num_states) * l.num_actions * l.num_states) {
      throw InvalidArgument(cat("local kernel ", i, " has wrong size"));
    }
    for (int s = 0; s < l.num_states; ++s) {
      for (int a = 0; a < l.num_actions; ++a) {
        check_distribution(
            std::span<const double>(
                l.probs.data() + (static_cast<std::size_t>(s) * l.num_actions + a) * l.num_states,
                l.num_states),
            kConstructionTol, cat("local kernel row (agent=", i, ", s=", s, ", a=", a, ")"));
      }
    }
  }
  return FactoredTransition(std::move(locals));
}

JointIndexer FactoredTransition::global_states() const {
  std::vector<int> r;
  for (const auto& l : locals_) r.push_back(l.num_states);
  return JointIndexer(std::move(r));
}

JointIndexer FactoredTransition::joint_actions() const {
  std::vector<int> r;
  for (const auto& l : locals_) r.push_back(l.num_actions);
  return JointIndexer(std::move(r));
}

double joint_policy_prob(const TabularPolicy& policy, int s, int a) {
  if (s < 0 || s >= policy.num_states()) throw InvalidArgument(cat("state out of range: ", s));
  const auto& joint = policy.joint_actions();
  if (a < 0 || a >= joint.size()) throw InvalidArgument(cat("joint action out of range: ", a));
  double p = 1.0;
  for (int i = 0; i < policy.num_agents(); ++i) p *= policy.prob(i, s, joint.digit(a, i));
  return p;
}

std::vector<double> project_simplex(std::span<const double> v) {
  if (v.empty()) throw InvalidArgument("cannot project an empty vector");
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (!std::isfinite(v[k])) throw InvalidArgument(cat("non-finite entry ", k, " in projection input"));
  }
  // Points already on the simplex come back unchanged, so projection is
  // exactly idempotent.
  double total = 0.0;
  bool nonnegative = true;
  for (double x : v) {
    total += x;
    nonnegative = nonnegative && x >= 0.0;
  }
  if (nonnegative && std::abs(total - 1.0) <= kConstructionTol) return {v.begin(), v.end()};

  // Find tau with sum(max(v - tau, 0)) = 1 from the sorted prefix sums.
  std::vector<double> sorted(v.begin(), v.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double prefix = 0.0;
  double tau = 0.0;
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    prefix += sorted[k];
    const double candidate = (prefix - 1.0) / static_cast<double>(k + 1);
    if (sorted[k] - candidate > 0.0) tau = candidate;
  }
  std::vector<double> out(v.size());
  for (std::size_t k = 0; k < v.size(); ++k) out[k] = std::max(v[k] - tau, 0.0);
  return out;
}

ExpandedTransition expand_factored(const FactoredTransition& factored) {
  const JointIndexer states = factored.global_states();
  const JointIndexer actions = factored.joint_actions();
  ExpandedTransition out;
  out.num_states = states.size();
  out.num_joint_actions = actions.size();
  out.probs.assign(static_cast<std::size_t>(out.num_states) * out.num_joint_actions * out.num_states,
                   0.0);
  const int n = factored.num_agents();
  for (int s = 0; s < out.num_states; ++s) {
    for (int a = 0; a < out.num_joint_actions; ++a) {
      double* row = out.probs.data() +
                    (static_cast<std::size_t>(s) * out.num_joint_actions + a) * out.num_states;
      for (int next = 0; next < out.num_states; ++next) {
        double p = 1.0;
        for (int i = 0; i < n && p != 0.0; ++i) {
          p *= factored.local(i)(states.digit(s, i), actions.digit(a, i), states.digit(next, i));
        }
        row[next] = p;
      }
    }
  }
  return out;
}

std::vector<double> product_distribution(const std::vector<std::vector<double>>& locals) {
  if (locals.empty()) throw InvalidArgument("need at least one local distribution");
  std::vector<int> radices;
  for (std::size_t i = 0; i < locals.size(); ++i) {
    check_distribution(locals[i], kConstructionTol, cat("local initial distribution ", i));
    radices.push_back(static_cast<int>(locals[i].size()));
  }
  const JointIndexer idx(radices);
  std::vector<double> out(idx.size());
  for (int s = 0; s < idx.size(); ++s) {
    double p = 1.0;
    for (std::size_t i = 0; i < locals.size(); ++i) p *= locals[i][idx.digit(s, static_cast<int>(i))];
    out[s] = p;
  }
  return out;
}

std::vector<double> random_simplex_block(int num_states, int num_actions, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> block(static_cast<std::size_t>(num_states) * num_actions);
  for (int s = 0; s < num_states; ++s) {
    double* row = block.data() + static_cast<std::size_t>(s) * num_actions;
    double sum = 0.0;
    for (int a = 0; a < num_actions; ++a) {
      row[a] = unif(rng);
      sum += row[a];
    }
    for (int a = 0; a < num_actions; ++a) row[a] /= sum;
  }
  return block;
}

TabularPolicy random_policy(const MarkovGame& game, std::mt19937_64& rng) {
  std::vector<int> counts;
  std::vector<std::vector<double>> params;
  for (int i = 0; i < game.num_agents(); ++i) {
    counts.push_back(game.num_actions(i));
    params.push_back(random_simplex_block(game.num_states(), game.num_actions(i), rng));
  }
  return TabularPolicy::create(game.num_states(), std::move(counts), std::move(params));
}

int sample_transition(const MarkovGame& game, int s, int a, std::uint64_t seed) {
  if (s < 0 || s >= game.num_states()) throw InvalidArgument(cat("state out of range: ", s));
  if (a < 0 || a >= game.num_joint_actions()) throw InvalidArgument(cat("joint action out of range: ", a));
  std::mt19937_64 rng(seed);
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  const auto row = game.transition_row(s, a);
  double cumulative = 0.0;
  int last_positive = 0;
  for (int next = 0; next < static_cast<int>(row.size()); ++next) {
    if (row[next] <= 0.0) continue;
    last_positive = next;
    cumulative += row[next];
    if (u < cumulative) return next;
  }
  return last_positive;
}

}  // namespace mpg
