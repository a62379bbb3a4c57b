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

#include "mpg/mpg_builder.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <sstream>

#include "mpg/errors.hpp"
#include "mpg/exact_evaluator.hpp"
#include "mpg/parallel.hpp"

namespace mpg {
namespace {

std::size_t pair_size(const std::vector<int>& ls, const std::vector<int>& la, int i, int j) {
  return static_cast<std::size_t>(ls[i]) * ls[j] * la[i] * la[j];
}

std::size_t pair_offset(const std::vector<int>& ls, const std::vector<int>& la, int i, int j,
                        int s_i, int s_j, int a_i, int a_j) {
  return ((static_cast<std::size_t>(s_i) * ls[j] + s_j) * la[i] + a_i) * la[j] + a_j;
}

void check_dims(const std::vector<int>& ls, const std::vector<int>& la) {
  if (ls.size() != la.size() || ls.empty()) {
    throw InvalidArgument("local state and action counts must cover the same agents");
  }
}

struct LocalView {
  std::vector<int> states;
  std::vector<int> actions;
};

LocalView local_view(const FactoredTransition& locals) {
  LocalView v;
  for (const auto& l : locals.locals()) {
    v.states.push_back(l.num_states);
    v.actions.push_back(l.num_actions);
  }
  return v;
}

double self_sum(const std::vector<std::vector<double>>& self_terms, const LocalView& view,
                const std::vector<int>& s, const std::vector<int>& a) {
  double acc = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    acc += self_terms[i][static_cast<std::size_t>(s[i]) * view.actions[i] + a[i]];
  }
  return acc;
}

// sum_i sum_{j<i} r_ij
double joint_potential_sum(const PairwiseTerms& pw, const std::vector<int>& s,
                           const std::vector<int>& a) {
  double acc = 0.0;
  const int n = static_cast<int>(s.size());
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < i; ++j) acc += pw(i, j, s[i], s[j], a[i], a[j]);
  }
  return acc;
}

// sum_{j != i} r_ij
double joint_reward_sum(const PairwiseTerms& pw, int i, const std::vector<int>& s,
                        const std::vector<int>& a) {
  double acc = 0.0;
  const int n = static_cast<int>(s.size());
  for (int j = 0; j < n; ++j) {
    if (j != i) acc += pw(i, j, s[i], s[j], a[i], a[j]);
  }
  return acc;
}

using RewardFn = std::function<double(int, const std::vector<int>&, const std::vector<int>&)>;
using PhiFn = std::function<double(const std::vector<int>&, const std::vector<int>&)>;

BuiltGame assemble(const FactoredTransition& locals, double gamma,
                   const std::vector<std::vector<double>>& rho_locals, Construction construction,
                   const RewardFn& reward, const PhiFn& phi) {
  const int n = locals.num_agents();
  if (static_cast<int>(rho_locals.size()) != n) {
    throw InvalidArgument("need one local initial distribution per agent");
  }
  for (int i = 0; i < n; ++i) {
    if (static_cast<int>(rho_locals[i].size()) != locals.local(i).num_states) {
      throw InvalidArgument("local initial distribution " + std::to_string(i) +
                            " does not match local state count");
    }
  }
  ExpandedTransition expanded = expand_factored(locals);
  const JointIndexer states = locals.global_states();
  const JointIndexer actions = locals.joint_actions();

  MarkovGame::Spec spec;
  for (int s = 0; s < states.size(); ++s) {
    std::ostringstream label;
    label << '(';
    for (int i = 0; i < n; ++i) label << (i ? "," : "") << states.digit(s, i);
    label << ')';
    spec.state_labels.push_back(label.str());
  }
  for (int i = 0; i < n; ++i) {
    std::vector<std::string> labels;
    for (int a = 0; a < locals.local(i).num_actions; ++a) labels.push_back("a" + std::to_string(a));
    spec.action_labels.push_back(std::move(labels));
    spec.local_state_counts.push_back(locals.local(i).num_states);
  }
  spec.transition = std::move(expanded.probs);
  spec.gamma = gamma;
  spec.rho = product_distribution(rho_locals);

  const std::size_t cells = static_cast<std::size_t>(states.size()) * actions.size();
  spec.rewards.assign(n, std::vector<double>(cells, 0.0));
  PotentialCertificate cert;
  cert.construction = construction;
  cert.phi.assign(cells, 0.0);
  for (int s = 0; s < states.size(); ++s) {
    const auto sd = states.decode(s);
    for (int a = 0; a < actions.size(); ++a) {
      const auto ad = actions.decode(a);
      const std::size_t k = static_cast<std::size_t>(s) * actions.size() + a;
      for (int i = 0; i < n; ++i) spec.rewards[i][k] = reward(i, sd, ad);
      cert.phi[k] = phi(sd, ad);
    }
  }
  return BuiltGame{MarkovGame::create(std::move(spec)), std::move(cert)};
}

void check_self_terms(const std::vector<std::vector<double>>& self_terms, const LocalView& view) {
  if (self_terms.size() != view.states.size()) {
    throw InvalidArgument("need one self-reward tensor per agent");
  }
  for (std::size_t i = 0; i < self_terms.size(); ++i) {
    if (self_terms[i].size() != static_cast<std::size_t>(view.states[i]) * view.actions[i]) {
      throw InvalidArgument("self-reward tensor " + std::to_string(i) + " has wrong size");
    }
  }
}

void check_pairwise(const PairwiseTerms& pw, const LocalView& view) {
  if (pw.num_agents() != static_cast<int>(view.states.size())) {
    throw InvalidArgument("pairwise terms cover a different number of agents");
  }
}

}  // namespace

std::string to_string(Construction c) {
  switch (c) {
    case Construction::kSelf: return "self";
    case Construction::kJoint: return "joint";
    case Construction::kMixed: return "mixed";
    case Construction::kExternal: return "external";
  }
  return "external";
}

Construction construction_from_string(const std::string& name) {
  if (name == "self") return Construction::kSelf;
  if (name == "joint") return Construction::kJoint;
  if (name == "mixed") return Construction::kMixed;
  if (name == "external") return Construction::kExternal;
  throw InvalidArgument("unknown construction '" + name + "'");
}

PairwiseTerms PairwiseTerms::from_upper(std::vector<int> local_states, std::vector<int> local_actions,
                                        std::map<std::pair<int, int>, std::vector<double>> upper) {
  check_dims(local_states, local_actions);
  const int n = static_cast<int>(local_states.size());
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      auto it = upper.find({i, j});
      if (it == upper.end()) {
        throw InvalidArgument("missing pairwise term for pair (" + std::to_string(i) + "," +
                              std::to_string(j) + ")");
      }
      if (it->second.size() != pair_size(local_states, local_actions, i, j)) {
        throw InvalidArgument("pairwise term (" + std::to_string(i) + "," + std::to_string(j) +
                              ") has wrong size");
      }
      for (double x : it->second) {
        if (!std::isfinite(x)) throw InvalidArgument("non-finite pairwise term");
      }
    }
  }
  for (const auto& [key, _] : upper) {
    if (key.first >= key.second || key.second >= n || key.first < 0) {
      throw InvalidArgument("pairwise terms must be keyed by (i, j) with i < j < N");
    }
  }
  PairwiseTerms out;
  out.local_states_ = std::move(local_states);
  out.local_actions_ = std::move(local_actions);
  out.upper_ = std::move(upper);
  return out;
}

PairwiseTerms PairwiseTerms::from_ordered(
    std::vector<int> local_states, std::vector<int> local_actions,
    const std::map<std::pair<int, int>, std::vector<double>>& ordered) {
  check_dims(local_states, local_actions);
  const int n = static_cast<int>(local_states.size());
  std::map<std::pair<int, int>, std::vector<double>> upper;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      auto ij = ordered.find({i, j});
      auto ji = ordered.find({j, i});
      if (ij == ordered.end() || ji == ordered.end()) {
        throw InvalidArgument("ordered pairwise terms need both (" + std::to_string(i) + "," +
                              std::to_string(j) + ") and its reverse");
      }
      if (ij->second.size() != pair_size(local_states, local_actions, i, j) ||
          ji->second.size() != pair_size(local_states, local_actions, j, i)) {
        throw InvalidArgument("pairwise term size mismatch for pair (" + std::to_string(i) + "," +
                              std::to_string(j) + ")");
      }
      for (int si = 0; si < local_states[i]; ++si)
        for (int sj = 0; sj < local_states[j]; ++sj)
          for (int ai = 0; ai < local_actions[i]; ++ai)
            for (int aj = 0; aj < local_actions[j]; ++aj) {
              const double a = ij->second[pair_offset(local_states, local_actions, i, j, si, sj, ai, aj)];
              const double b = ji->second[pair_offset(local_states, local_actions, j, i, sj, si, aj, ai)];
              if (std::abs(a - b) > kConstructionTol) {
                std::ostringstream os;
                os << "asymmetric pairwise terms: r_" << i << j << "(s_i=" << si << ", s_j=" << sj
                   << ", a_i=" << ai << ", a_j=" << aj << ") = " << a << " but r_" << j << i
                   << " at the swapped index = " << b;
                throw InvalidArgument(os.str());
              }
            }
      upper[{i, j}] = ij->second;
    }
  }
  return from_upper(std::move(local_states), std::move(local_actions), std::move(upper));
}

PairwiseTerms PairwiseTerms::constant(std::vector<int> local_states, std::vector<int> local_actions,
                                      double value) {
  check_dims(local_states, local_actions);
  std::map<std::pair<int, int>, std::vector<double>> upper;
  const int n = static_cast<int>(local_states.size());
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      upper[{i, j}] = std::vector<double>(pair_size(local_states, local_actions, i, j), value);
  return from_upper(std::move(local_states), std::move(local_actions), std::move(upper));
}

double PairwiseTerms::operator()(int i, int j, int s_i, int s_j, int a_i, int a_j) const {
  if (i < j) {
    return upper_.at({i, j})[pair_offset(local_states_, local_actions_, i, j, s_i, s_j, a_i, a_j)];
  }
  if (i > j) {
    return upper_.at({j, i})[pair_offset(local_states_, local_actions_, j, i, s_j, s_i, a_j, a_i)];
  }
  throw InvalidArgument("pairwise term needs i != j");
}

FactoredTransition factor_transition(const ExpandedTransition& global,
                                     const std::vector<int>& local_states,
                                     const std::vector<int>& local_actions) {
  check_dims(local_states, local_actions);
  const JointIndexer states(local_states);
  const JointIndexer actions(local_actions);
  if (states.size() != global.num_states || actions.size() != global.num_joint_actions ||
      global.probs.size() !=
          static_cast<std::size_t>(global.num_states) * global.num_joint_actions * global.num_states) {
    throw InvalidArgument("global kernel does not match local dimensions");
  }
  const int n = static_cast<int>(local_states.size());
  std::vector<FactoredTransition::Local> locals(n);
  std::vector<std::vector<char>> seen(n);
  for (int i = 0; i < n; ++i) {
    locals[i].num_states = local_states[i];
    locals[i].num_actions = local_actions[i];
    locals[i].probs.assign(
        static_cast<std::size_t>(local_states[i]) * local_actions[i] * local_states[i], 0.0);
    seen[i].assign(static_cast<std::size_t>(local_states[i]) * local_actions[i], 0);
  }
  std::vector<double> marginal;
  for (int s = 0; s < global.num_states; ++s) {
    for (int a = 0; a < global.num_joint_actions; ++a) {
      const double* row =
          global.probs.data() + (static_cast<std::size_t>(s) * global.num_joint_actions + a) *
                                    global.num_states;
      for (int i = 0; i < n; ++i) {
        marginal.assign(local_states[i], 0.0);
        for (int next = 0; next < global.num_states; ++next) {
          marginal[states.digit(next, i)] += row[next];
        }
        const int si = states.digit(s, i);
        const int ai = actions.digit(a, i);
        const std::size_t cell = static_cast<std::size_t>(si) * local_actions[i] + ai;
        double* target = locals[i].probs.data() + cell * local_states[i];
        if (!seen[i][cell]) {
          std::copy(marginal.begin(), marginal.end(), target);
          seen[i][cell] = 1;
          continue;
        }
        for (int k = 0; k < local_states[i]; ++k) {
          if (std::abs(target[k] - marginal[k]) > kConstructionTol) {
            std::ostringstream os;
            os << "coupled transition: agent " << i << "'s next-state marginal at (s=" << s
               << ", a=" << a << ") depends on other agents";
            throw InvalidArgument(os.str());
          }
        }
      }
    }
  }
  FactoredTransition factored = FactoredTransition::create(std::move(locals));
  const ExpandedTransition rebuilt = expand_factored(factored);
  for (std::size_t k = 0; k < rebuilt.probs.size(); ++k) {
    if (std::abs(rebuilt.probs[k] - global.probs[k]) > kConstructionTol) {
      throw InvalidArgument("coupled transition: global kernel is not the product of its marginals");
    }
  }
  return factored;
}

BuiltGame build_self_reward_game(const FactoredTransition& locals,
                                 const std::vector<std::vector<double>>& self_terms, double gamma,
                                 const std::vector<std::vector<double>>& rho_locals) {
  const LocalView view = local_view(locals);
  check_self_terms(self_terms, view);
  return assemble(
      locals, gamma, rho_locals, Construction::kSelf,
      [&](int i, const std::vector<int>& s, const std::vector<int>& a) {
        return self_terms[i][static_cast<std::size_t>(s[i]) * view.actions[i] + a[i]];
      },
      [&](const std::vector<int>& s, const std::vector<int>& a) {
        return self_sum(self_terms, view, s, a);
      });
}

BuiltGame build_pairwise_symmetric_game(const FactoredTransition& locals,
                                        const PairwiseTerms& pairwise, double gamma,
                                        const std::vector<std::vector<double>>& rho_locals) {
  const LocalView view = local_view(locals);
  check_pairwise(pairwise, view);
  return assemble(
      locals, gamma, rho_locals, Construction::kJoint,
      [&](int i, const std::vector<int>& s, const std::vector<int>& a) {
        return joint_reward_sum(pairwise, i, s, a);
      },
      [&](const std::vector<int>& s, const std::vector<int>& a) {
        return joint_potential_sum(pairwise, s, a);
      });
}

BuiltGame build_mixed_game(const FactoredTransition& locals, const RewardStructure& structure,
                           double gamma, const std::vector<std::vector<double>>& rho_locals) {
  const LocalView view = local_view(locals);
  const bool has_self = !structure.self_terms.empty();
  const bool has_pairs = !structure.pairwise.empty();
  if (has_self) check_self_terms(structure.self_terms, view);
  if (has_pairs) check_pairwise(structure.pairwise, view);
  if (!has_self && structure.alpha != 0.0) {
    throw InvalidArgument("alpha != 0 requires self-reward terms");
  }
  if (!has_pairs && structure.beta != 0.0 && view.states.size() > 1) {
    throw InvalidArgument("beta != 0 requires pairwise terms");
  }
  const double alpha = structure.alpha;
  const double beta = structure.beta;
  auto self_part = [&](int i, const std::vector<int>& s, const std::vector<int>& a) {
    return has_self ? structure.self_terms[i][static_cast<std::size_t>(s[i]) * view.actions[i] + a[i]]
                    : 0.0;
  };
  return assemble(
      locals, gamma, rho_locals, Construction::kMixed,
      [&](int i, const std::vector<int>& s, const std::vector<int>& a) {
        const double joint = has_pairs ? joint_reward_sum(structure.pairwise, i, s, a) : 0.0;
        return alpha * self_part(i, s, a) + beta * joint;
      },
      [&](const std::vector<int>& s, const std::vector<int>& a) {
        const double self = has_self ? self_sum(structure.self_terms, view, s, a) : 0.0;
        const double joint = has_pairs ? joint_potential_sum(structure.pairwise, s, a) : 0.0;
        return alpha * self + beta * joint;
      });
}

double potential_value(const MarkovGame& game, const TabularPolicy& policy,
                       std::span<const double> phi) {
  return PolicyEvaluation(game, policy).total(phi);
}

std::string to_string(PolicyClass c) { return c == PolicyClass::kLocal ? "local" : "global"; }

PolicyClass policy_class_from_string(const std::string& name) {
  if (name == "global") return PolicyClass::kGlobal;
  if (name == "local") return PolicyClass::kLocal;
  throw InvalidArgument("unknown policy class '" + name + "' (expected global|local)");
}

std::vector<double> random_local_block(const MarkovGame& game, int agent, std::mt19937_64& rng) {
  if (!game.is_factored()) throw InvalidArgument("local policies need a factored game");
  const int na = game.num_actions(agent);
  const std::vector<double> local =
      random_simplex_block(game.spec().local_state_counts[agent], na, rng);
  std::vector<double> block(static_cast<std::size_t>(game.num_states()) * na);
  for (int s = 0; s < game.num_states(); ++s) {
    const int si = game.local_states().digit(s, agent);
    std::copy_n(local.begin() + static_cast<std::ptrdiff_t>(si) * na, na,
                block.begin() + static_cast<std::ptrdiff_t>(s) * na);
  }
  return block;
}

TabularPolicy random_local_policy(const MarkovGame& game, std::mt19937_64& rng) {
  std::vector<int> counts;
  std::vector<std::vector<double>> params;
  for (int i = 0; i < game.num_agents(); ++i) {
    counts.push_back(game.num_actions(i));
    params.push_back(random_local_block(game, i, rng));
  }
  return TabularPolicy::create(game.num_states(), std::move(counts), std::move(params));
}

std::vector<double> local_gradient(const MarkovGame& game, const PolicyGradient& grad, int agent) {
  if (!game.is_factored()) throw InvalidArgument("local gradients need a factored game");
  const int na = grad.num_actions;
  std::vector<double> out(static_cast<std::size_t>(game.spec().local_state_counts[agent]) * na, 0.0);
  for (int s = 0; s < grad.num_states; ++s) {
    const int si = game.local_states().digit(s, agent);
    for (int a = 0; a < na; ++a) out[static_cast<std::size_t>(si) * na + a] += grad(s, a);
  }
  return out;
}

std::vector<DeviationSpec> sample_deviations(const MarkovGame& game, int n_trials,
                                             std::uint64_t seed, PolicyClass policy_class) {
  if (n_trials < 1) throw InvalidArgument("n_trials must be >= 1");
  std::mt19937_64 rng(seed);
  std::vector<DeviationSpec> out;
  out.reserve(n_trials);
  const bool local = policy_class == PolicyClass::kLocal;
  for (int k = 0; k < n_trials; ++k) {
    const int agent = std::uniform_int_distribution<int>(0, game.num_agents() - 1)(rng);
    TabularPolicy policy = local ? random_local_policy(game, rng) : random_policy(game, rng);
    std::vector<double> deviation =
        local ? random_local_block(game, agent, rng)
              : random_simplex_block(game.num_states(), game.num_actions(agent), rng);
    out.push_back(DeviationSpec{agent, std::move(policy), std::move(deviation)});
  }
  return out;
}

namespace {

DeviationTrial run_trial(const MarkovGame& game, std::span<const double> phi,
                         const DeviationSpec& spec) {
  const TabularPolicy deviated = spec.policy.with_agent(spec.agent, spec.deviation);
  const PolicyEvaluation base(game, spec.policy);
  const PolicyEvaluation dev(game, deviated);
  const auto reward = game.rewards(spec.agent);
  const Eigen::VectorXd dv = dev.value(reward) - base.value(reward);
  const Eigen::VectorXd dphi = dev.value(phi) - base.value(phi);
  const Eigen::Map<const Eigen::VectorXd> rho(game.rho().data(), game.num_states());
  DeviationTrial t;
  t.agent = spec.agent;
  t.lhs = rho.dot(dv);
  t.rhs = rho.dot(dphi);
  t.violation = std::abs(t.lhs - t.rhs);
  t.state_violation = (dv - dphi).cwiseAbs().maxCoeff();
  return t;
}

}  // namespace

PotentialCertificate verify_mpg_trials(const MarkovGame& game, std::span<const double> phi,
                                       const std::vector<DeviationSpec>& trials, double tol) {
  if (trials.empty()) throw InvalidArgument("verification needs at least one trial");
  if (phi.size() != static_cast<std::size_t>(game.num_states()) * game.num_joint_actions()) {
    throw InvalidArgument("potential tensor does not match game dimensions");
  }
  PotentialCertificate cert;
  cert.phi.assign(phi.begin(), phi.end());
  cert.tol = tol;
  cert.trials.resize(trials.size());
  const int count = static_cast<int>(trials.size());
  MPG_PARALLEL_FOR_DYNAMIC
  for (int k = 0; k < count; ++k) cert.trials[k] = run_trial(game, phi, trials[k]);
  for (const auto& t : cert.trials) {
    cert.max_violation = std::max(cert.max_violation, t.violation);
    cert.max_state_violation = std::max(cert.max_state_violation, t.state_violation);
  }
  cert.verified = true;
  cert.passed = cert.max_violation < tol && cert.max_state_violation < tol;
  return cert;
}

PotentialCertificate verify_mpg(const MarkovGame& game, std::span<const double> phi, int n_trials,
                                std::uint64_t seed, double tol, PolicyClass policy_class) {
  PotentialCertificate cert = verify_mpg_trials(
      game, phi, sample_deviations(game, n_trials, seed, policy_class), tol);
  cert.seed = seed;
  cert.policy_class = policy_class;
  return cert;
}

GradientIdentityReport potential_gradient_identity_check(const MarkovGame& game,
                                                         std::span<const double> phi,
                                                         const TabularPolicy& policy, double tol,
                                                         PolicyClass policy_class) {
  const PolicyEvaluation eval(game, policy);
  GradientIdentityReport report;
  report.tol = tol;
  for (int i = 0; i < game.num_agents(); ++i) {
    const PolicyGradient gj = eval.gradient(game.rewards(i), i);
    const PolicyGradient gp = eval.gradient(phi, i);
    std::vector<double> a = gj.entries;
    std::vector<double> b = gp.entries;
    if (policy_class == PolicyClass::kLocal) {
      a = local_gradient(game, gj, i);
      b = local_gradient(game, gp, i);
    }
    // Only directions with zero row sum are feasible; compare there.
    const int na = gj.num_actions;
    for (std::size_t row = 0; row < a.size() / na; ++row) {
      double mean_a = 0.0, mean_b = 0.0;
      for (int k = 0; k < na; ++k) {
        mean_a += a[row * na + k];
        mean_b += b[row * na + k];
      }
      for (int k = 0; k < na; ++k) {
        a[row * na + k] -= mean_a / na;
        b[row * na + k] -= mean_b / na;
      }
    }
    double worst = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) worst = std::max(worst, std::abs(a[k] - b[k]));
    report.per_agent_max_diff.push_back(worst);
    report.max_diff = std::max(report.max_diff, worst);
  }
  report.passed = report.max_diff < tol;
  return report;
}

BuiltGame generate_game(const GeneratorSpec& spec) {
  if (spec.n_agents < 1 || spec.local_states < 1 || spec.local_actions < 1) {
    throw InvalidArgument("generator needs positive agent, state and action counts");
  }
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<FactoredTransition::Local> locals;
  std::vector<std::vector<double>> rho_locals;
  for (int i = 0; i < spec.n_agents; ++i) {
    FactoredTransition::Local l;
    l.num_states = spec.local_states;
    l.num_actions = spec.local_actions;
    l.probs = random_simplex_block(spec.local_states * spec.local_actions, spec.local_states, rng);
    locals.push_back(std::move(l));
    rho_locals.push_back(random_simplex_block(1, spec.local_states, rng));
  }
  const FactoredTransition factored = FactoredTransition::create(std::move(locals));
  const std::vector<int> ls(spec.n_agents, spec.local_states);
  const std::vector<int> la(spec.n_agents, spec.local_actions);

  std::vector<std::vector<double>> self_terms;
  for (int i = 0; i < spec.n_agents; ++i) {
    std::vector<double> t(static_cast<std::size_t>(spec.local_states) * spec.local_actions);
    for (double& x : t) x = unif(rng);
    self_terms.push_back(std::move(t));
  }
  std::map<std::pair<int, int>, std::vector<double>> upper;
  for (int i = 0; i < spec.n_agents; ++i) {
    for (int j = i + 1; j < spec.n_agents; ++j) {
      std::vector<double> t(static_cast<std::size_t>(spec.local_states) * spec.local_states *
                            spec.local_actions * spec.local_actions);
      for (double& x : t) x = unif(rng);
      upper[{i, j}] = std::move(t);
    }
  }
  switch (spec.construction) {
    case Construction::kSelf:
      return build_self_reward_game(factored, self_terms, spec.gamma, rho_locals);
    case Construction::kJoint:
      return build_pairwise_symmetric_game(factored, PairwiseTerms::from_upper(ls, la, upper),
                                           spec.gamma, rho_locals);
    case Construction::kMixed: {
      RewardStructure rs;
      rs.self_terms = std::move(self_terms);
      rs.pairwise = PairwiseTerms::from_upper(ls, la, upper);
      rs.alpha = spec.alpha;
      rs.beta = spec.beta;
      return build_mixed_game(factored, rs, spec.gamma, rho_locals);
    }
    case Construction::kExternal:
      break;
  }
  throw InvalidArgument("generator cannot produce an external construction");
}

}  // namespace mpg
