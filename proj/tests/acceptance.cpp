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

// Acceptance suite: one PASS/FAIL line per criterion. Exits 0 after
// printing unless --strict is given, in which case any FAIL exits 1.

#include <CLI11.hpp>

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include "mpg/exact_evaluator.hpp"
#include "mpg/gradient_learner.hpp"
#include "mpg/intersection_env.hpp"
#include "mpg/mpg_builder.hpp"
#include "mpg/neural_policy.hpp"
#include "mpg/study.hpp"
#include "test_support.hpp"

namespace {

using namespace mpg;
using namespace mpg::testing;

// Tolerances.
constexpr double kCertTol = 1e-8;
constexpr int kCertGames = 20;
constexpr int kCertTrials = 100;
constexpr double kExactFdTol = 1e-5;
constexpr double kFdStep = 1e-5;
constexpr double kRolloutFdTol = 1e-4;
constexpr double kIdentityTol = 1e-6;
constexpr double kStationaryTol = 1e-8;
constexpr double kNashTol = 1e-6;
constexpr double kPureNashTol = 1e-8;
constexpr double kConvergenceGap = 1e-4;
constexpr int kConvergenceIters = 50000;
constexpr double kAscentSlack = 1e-9;
constexpr double kDominationSlack = -1e-8;
constexpr int kScenarios = 100;
constexpr int kConstantCollisionCap = 5;
constexpr double kNeSpeedLo = 3.4;
constexpr double kNeSpeedHi = 5.0;
constexpr int kSingleConstantMin = 10;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

const Construction kBuilders[] = {Construction::kSelf, Construction::kJoint, Construction::kMixed};

BuiltGame schedule_game(Construction c, int k) {
  return generate_game(schedule_spec(c, k, 1000 * static_cast<std::uint64_t>(c) + k));
}

Outcome criterion1() {
  Outcome o{true, ""};
  for (Construction c : kBuilders) {
    double worst = 0.0, worst_local = 0.0;
    int passed = 0;
    for (int k = 0; k < kCertGames; ++k) {
      const auto built = schedule_game(c, k);
      const auto cert = verify_mpg(built.game, built.certificate.phi, kCertTrials, k, kCertTol);
      const auto local = verify_mpg(built.game, built.certificate.phi, kCertTrials, k, kCertTol,
                                    PolicyClass::kLocal);
      worst = std::max(worst, cert.max_violation);
      worst_local = std::max(worst_local, local.max_violation);
      passed += cert.passed;
    }
    o.pass = o.pass && passed == kCertGames;
    o.detail += to_string(c) + " " + std::to_string(passed) + "/" + std::to_string(kCertGames) +
                " max " + fmt(worst) + " (local-state policies " + fmt(worst_local) + "); ";
  }
  return o;
}

std::vector<double> rollout_fd(driving::MlpPolicy net, const driving::IntersectionState& s0,
                               const driving::EnvConfig& env, const driving::RolloutObjective& obj,
                               const driving::ControlSpec& control, const std::vector<std::size_t>& idx) {
  std::vector<double> out;
  for (std::size_t q : idx) {
    const double keep = net.params()[q];
    net.params()[q] = keep + kFdStep;
    const double up = driving::rollout_objective_and_gradient(net, s0, env, obj, control).objective;
    net.params()[q] = keep - kFdStep;
    const double down = driving::rollout_objective_and_gradient(net, s0, env, obj, control).objective;
    net.params()[q] = keep;
    out.push_back((up - down) / (2 * kFdStep));
  }
  return out;
}

Outcome criterion2() {
  double worst_exact = 0.0;
  for (std::uint64_t g = 0; g < 10; ++g) {
    const auto game = random_game(2 + g % 2, 2 + g % 3, 2 + (g / 3) % 2, 500 + g);
    std::mt19937_64 rng(g);
    const auto policy = random_policy(game, rng);
    for (int i = 0; i < game.num_agents(); ++i) {
      const auto exact = exact_policy_gradient(game, policy, i);
      worst_exact = std::max(worst_exact,
                             relative_error(fd_gradient(game, policy, game.rewards(i), i, kFdStep), exact.entries));
    }
  }
  const driving::EnvConfig env;
  driving::ControlSpec single;
  single.network_controlled.assign(4, false);
  single.network_controlled[env.ego] = true;
  single.external = [env](const driving::IntersectionState& s) { return driving::rule_based_policy(s, env); };
  struct Config {
    driving::RolloutObjective obj;
    driving::ControlSpec control;
    std::uint64_t seed;
  };
  const std::vector<Config> configs{{{driving::ObjectiveKind::kPotential, 0}, {}, 1},
                                    {{driving::ObjectiveKind::kAgent, 2}, {}, 2},
                                    {{driving::ObjectiveKind::kAgent, env.ego}, single, 3}};
  double worst_rollout = 0.0;
  for (const auto& c : configs) {
    const auto net = driving::MlpPolicy::initialize(c.seed);
    const auto s0 = driving::sample_initial_states(1, env, 2, 50 + c.seed)[0];
    std::mt19937_64 rng(c.seed);
    std::uniform_int_distribution<std::size_t> pick(0, driving::MlpPolicy::kNumParams - 1);
    std::vector<std::size_t> idx;
    for (int k = 0; k < 20; ++k) {
      // Half the probes on the output row that moves the controlled vehicle.
      const int row = c.obj.kind == driving::ObjectiveKind::kAgent ? c.obj.agent : k % 4;
      idx.push_back(k % 2 == 0 ? driving::MlpPolicy::kW3 + row * 64 + k : pick(rng));
    }
    const auto exact = driving::rollout_objective_and_gradient(net, s0, env, c.obj, c.control);
    std::vector<double> an;
    for (std::size_t q : idx) an.push_back(exact.gradient[q]);
    worst_rollout = std::max(worst_rollout, relative_error(rollout_fd(net, s0, env, c.obj, c.control, idx), an));
  }
  return {worst_exact < kExactFdTol && worst_rollout < kRolloutFdTol,
          "tabular worst rel err " + fmt(worst_exact) + " over 10 games; rollout worst rel err " +
              fmt(worst_rollout) + " over 3 configurations"};
}

Outcome criterion3() {
  double worst = 0.0, worst_local = 0.0;
  int checked = 0, passed = 0;
  for (Construction c : kBuilders) {
    for (int k = 0; k < kCertGames; ++k) {
      const auto built = schedule_game(c, k);
      std::mt19937_64 rng(k);
      const auto report = potential_gradient_identity_check(built.game, built.certificate.phi,
                                                            random_policy(built.game, rng), kIdentityTol);
      const auto local = potential_gradient_identity_check(
          built.game, built.certificate.phi, random_local_policy(built.game, rng), kIdentityTol,
          PolicyClass::kLocal);
      worst = std::max(worst, report.max_diff);
      worst_local = std::max(worst_local, local.max_diff);
      passed += report.passed;
      ++checked;
    }
  }
  return {passed == checked, std::to_string(passed) + "/" + std::to_string(checked) +
                                 " instances, max |grad J_i - grad Phi| " + fmt(worst) +
                                 " (local-state policies " + fmt(worst_local) + ")"};
}

Outcome criterion4() {
  int points = 0, forward = 0, backward = 0, violations = 0;
  double worst_forward = 0.0, worst_backward = 0.0;
  for (int g = 0; g < 5; ++g) {
    GeneratorSpec spec;
    spec.seed = 400 + g;
    const auto built = generate_game(spec);
    const auto& game = built.game;
    std::vector<TabularPolicy> test_points = enumerate_deterministic(game);
    std::vector<TabularPolicy> anchors;
    for (const auto& p : test_points) {
      const auto ex = exploitability(game, p);
      if (*std::max_element(ex.begin(), ex.end()) < kPureNashTol) anchors.push_back(p);
    }
    LearnConfig config;
    config.stationarity_tol = 1e-10;
    config.max_iters = kConvergenceIters;
    for (int r = 0; r < 3; ++r) {
      std::mt19937_64 rng(g * 10 + r);
      anchors.push_back(train(game, std::nullopt, config, random_policy(game, rng)).final_policy);
    }
    for (const auto& a : anchors) {
      test_points.push_back(a);
      for (int i = 0; i < game.num_agents(); ++i) {
        test_points.push_back(mix_uniform(a, i, 0.1));
        test_points.push_back(mix_uniform(a, i, 1e-3));
      }
    }
    for (const auto& p : test_points) {
      ++points;
      const double gap = stationarity_gap(game, p);
      const auto ex = exploitability(game, p);
      const double worst = *std::max_element(ex.begin(), ex.end());
      if (gap < kStationaryTol) {
        ++forward;
        worst_forward = std::max(worst_forward, worst);
        violations += !(worst < kNashTol);
      }
      if (worst < kStationaryTol) {
        ++backward;
        worst_backward = std::max(worst_backward, gap);
        violations += !(gap < kNashTol);
      }
    }
  }
  return {violations == 0 && forward > 0 && backward > 0,
          std::to_string(points) + " points; gap<1e-8 at " + std::to_string(forward) +
              " (max exploitability " + fmt(worst_forward) + "), exploitability<1e-8 at " +
              std::to_string(backward) + " (max gap " + fmt(worst_backward) + ")"};
}

Outcome criterion5() {
  double worst = 0.0;
  const Construction kinds[] = {Construction::kMixed, Construction::kMixed, Construction::kJoint,
                                Construction::kJoint, Construction::kMixed};
  for (int g = 0; g < 5; ++g) {
    GeneratorSpec spec;
    spec.construction = kinds[g];
    spec.seed = 200 + g;
    if (g == 4) spec.local_actions = 3;
    const auto built = generate_game(spec);
    double best = -1e300;
    std::optional<TabularPolicy> arg;
    for (const auto& p : enumerate_deterministic(built.game)) {
      const double v = potential_value(built.game, p, built.certificate.phi);
      if (v > best) {
        best = v;
        arg = p;
      }
    }
    const auto ex = exploitability(built.game, *arg);
    worst = std::max(worst, *std::max_element(ex.begin(), ex.end()));
  }
  return {worst < kPureNashTol, "max exploitability of the deterministic Phi-maximizer " + fmt(worst) + " over 5 games"};
}

Outcome criterion6() {
  int converged = 0;
  double worst_drop = 0.0;
  std::string stalled;
  for (int g = 0; g < 10; ++g) {
    const auto built = generate_game(schedule_spec(Construction::kMixed, g, 100 + g));
    const std::span<const double> phi(built.certificate.phi);
    LearnConfig config;
    config.mode = LearnMode::kPotential;
    config.eta = 0.01;
    config.max_iters = kConvergenceIters;
    config.stationarity_tol = kConvergenceGap;
    const auto trace = train(built.game, phi, config);
    if (trace.converged) {
      ++converged;
    } else {
      stalled += " game " + std::to_string(g) + " gap " + fmt(trace.final_gap);
    }
    LearnConfig slow = config;
    slow.eta = 1e-3;
    slow.max_iters = 2000;
    const auto small = train(built.game, phi, slow);
    for (std::size_t t = 1; t < small.records.size(); ++t) {
      worst_drop = std::max(worst_drop, small.records[t - 1].potential - small.records[t].potential);
    }
  }
  return {converged == 10 && worst_drop <= kAscentSlack,
          std::to_string(converged) + "/10 reached gap<1e-4;" + (stalled.empty() ? "" : " stalled:" + stalled + ";") +
              " largest Phi decrease at eta=1e-3 " + fmt(worst_drop)};
}

Outcome criterion7() {
  double worst = 1e300;
  int games = 0;
  for (int g = 0; g < 5; ++g) {
    GeneratorSpec spec;
    spec.n_agents = 2 + g % 2;
    spec.seed = 300 + g;
    const auto built = generate_game(spec);
    if (!check_full_visitation(built.game, 20, g).satisfied) continue;
    ++games;
    std::mt19937_64 rng(g);
    for (int k = 0; k < 100; ++k) {
      const auto policy = random_policy(built.game, rng);
      const int agent = k % spec.n_agents;
      const auto dev = random_simplex_block(built.game.num_states(), built.game.num_actions(agent), rng);
      worst = std::min(worst, gradient_domination_slack(built.game, policy, agent, dev));
    }
  }
  return {games == 5 && worst >= kDominationSlack,
          std::to_string(games) + "/5 games satisfy full visitation; min slack " + fmt(worst)};
}

struct Driving {
  driving::TrainReport marl, single;
  driving::ComparisonReport grid;
};

Driving run_driving(std::uint64_t seed) {
  const driving::EnvConfig env;
  const driving::TrainConfig train;
  Driving d{driving::train_marl(env, train, seed), driving::train_single_agent(env, train, seed), {}};
  d.grid = driving::run_compare(d.marl.net, d.single.net, kScenarios, seed, env);
  return d;
}

std::string row_text(const driving::StudyRow& r) {
  return to_string(r.surrounding) + " " + std::to_string(r.collisions) + "/" + std::to_string(r.scenarios) +
         " at " + fmt(r.avg_ego_speed) + " m/s";
}

Outcome criterion8(const Driving& d) {
  const auto& ne = d.grid.grid[0][0].row;
  const auto& rule = d.grid.grid[0][1].row;
  const auto& cst = d.grid.grid[0][2].row;
  const bool pass = ne.collisions == 0 && rule.collisions == 0 && cst.collisions <= kConstantCollisionCap &&
                    ne.avg_ego_speed > rule.avg_ego_speed && rule.avg_ego_speed > cst.avg_ego_speed &&
                    ne.avg_ego_speed >= kNeSpeedLo && ne.avg_ego_speed <= kNeSpeedHi;
  return {pass, "MARL " + row_text(ne) + "; " + row_text(rule) + "; " + row_text(cst) + "; training " +
                    std::to_string(d.marl.episodes) + " episodes (" + d.marl.stop_reason + ")"};
}

Outcome criterion9(const Driving& d) {
  bool pass = true;
  std::string detail;
  for (int s = 0; s < 3; ++s) {
    const auto& m = d.grid.grid[0][s].row;
    const auto& x = d.grid.grid[1][s].row;
    pass = pass && m.collisions <= x.collisions && x.avg_ego_speed < m.avg_ego_speed;
    detail += "single " + row_text(x) + " vs MARL " + std::to_string(m.collisions) + " at " +
              fmt(m.avg_ego_speed) + "; ";
  }
  pass = pass && d.grid.grid[1][2].row.collisions >= kSingleConstantMin;
  return {pass, detail};
}

Outcome criterion10() {
  const driving::EnvConfig env;
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> pos(-40.0, 40.0), vel(-8.0, 8.0), act(-env.g, env.g);
  long symmetric_checks = 0, decoupling_checks = 0;
  bool symmetric = true, decoupled = true;
  for (int trial = 0; trial < 2000; ++trial) {
    driving::IntersectionState s;
    for (int i = 0; i < 4; ++i) s.vehicles.push_back({pos(rng), vel(rng)});
    for (int i = 0; i < 4; ++i) {
      for (int j = 0; j < 4; ++j) {
        if (i == j) continue;
        ++symmetric_checks;
        symmetric = symmetric && std::bit_cast<std::uint64_t>(driving::pairwise_reward(s, i, j, env)) ==
                                     std::bit_cast<std::uint64_t>(driving::pairwise_reward(s, j, i, env));
      }
    }
    std::vector<double> a(4);
    for (double& x : a) x = act(rng);
    const auto base = driving::step_dynamics(s, a, env);
    for (int j = 0; j < 4; ++j) {
      auto b = a;
      b[j] = act(rng);
      const auto other = driving::step_dynamics(s, b, env);
      for (int i = 0; i < 4; ++i) {
        if (i == j) continue;
        ++decoupling_checks;
        decoupled = decoupled &&
                    std::bit_cast<std::uint64_t>(other.vehicles[i].p) == std::bit_cast<std::uint64_t>(base.vehicles[i].p) &&
                    std::bit_cast<std::uint64_t>(other.vehicles[i].v) == std::bit_cast<std::uint64_t>(base.vehicles[i].v);
      }
    }
  }
  return {symmetric && decoupled, std::to_string(symmetric_checks) + " symmetry checks " +
                                      (symmetric ? "exact" : "BROKEN") + ", " + std::to_string(decoupling_checks) +
                                      " counterfactual decoupling checks " + (decoupled ? "bit-exact" : "BROKEN")};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  bool strict = false;
  bool skip_driving = false;
  std::uint64_t seed = 0;
  app.add_flag("--strict", strict, "exit 1 when any criterion fails");
  app.add_flag("--skip-driving", skip_driving, "skip the driving training criteria (8, 9)");
  app.add_option("--seed", seed, "master seed for driving training and studies");
  CLI11_PARSE(app, argc, argv);

  int failures = 0;
  auto report = [&](int id, const std::function<Outcome()>& fn) {
    const auto start = std::chrono::steady_clock::now();
    const Outcome o = fn();
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failures += !o.pass;
    std::cout << "CRITERION " << id << ": " << (o.pass ? "PASS" : "FAIL") << "  " << o.detail << " ["
              << fmt(secs) << " s]" << std::endl;
  };
  report(1, criterion1);
  report(2, criterion2);
  report(3, criterion3);
  report(4, criterion4);
  report(5, criterion5);
  report(6, criterion6);
  report(7, criterion7);
  if (skip_driving) {
    std::cout << "CRITERION 8: SKIPPED\nCRITERION 9: SKIPPED" << std::endl;
  } else {
    Driving d;
    report(8, [&] {
      d = run_driving(seed);
      return criterion8(d);
    });
    report(9, [&] { return criterion9(d); });
  }
  report(10, criterion10);
  std::cout << failures << " criteria failed" << (strict ? "" : " (report mode)") << std::endl;
  return strict && failures > 0 ? 1 : 0;
}
