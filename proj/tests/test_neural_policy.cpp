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

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "mpg/errors.hpp"
#include "mpg/intersection_env.hpp"
#include "mpg/neural_policy.hpp"

namespace mpg::driving {
namespace {

MlpPolicy::Input random_input(std::mt19937_64& rng, double scale) {
  std::uniform_real_distribution<double> unif(-scale, scale);
  MlpPolicy::Input x;
  for (double& v : x) v = unif(rng);
  return x;
}

double rel_err(const std::vector<double>& a, const std::vector<double>& b) {
  double diff = 0.0, norm = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    diff += (a[k] - b[k]) * (a[k] - b[k]);
    norm += b[k] * b[k];
  }
  return std::sqrt(diff) / std::max(std::sqrt(norm), 1e-300);
}

TEST(Forward, ZeroNetworkOutputsZero) {
  const MlpPolicy net;
  std::mt19937_64 rng(1);
  const auto out = net.forward(random_input(rng, 30.0));
  for (double y : out) EXPECT_EQ(y, 0.0);
}

TEST(Forward, OutputsSaturateWithinBound) {
  std::mt19937_64 rng(2);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    MlpPolicy net = MlpPolicy::initialize(seed);
    for (double& w : net.params()) w *= 50.0;
    for (int k = 0; k < 50; ++k) {
      for (double y : net.forward(random_input(rng, 1e6))) EXPECT_LE(std::abs(y), 9.81);
    }
  }
}

TEST(Forward, RejectsNonFiniteInput) {
  const MlpPolicy net = MlpPolicy::initialize(3);
  MlpPolicy::Input x{};
  x[4] = std::numeric_limits<double>::infinity();
  EXPECT_THROW(net.forward(x), InvalidArgument);
}

TEST(Forward, InitializationIsSeededAndBounded) {
  const auto a = MlpPolicy::initialize(4), b = MlpPolicy::initialize(4), c = MlpPolicy::initialize(5);
  EXPECT_TRUE(std::equal(a.params().begin(), a.params().end(), b.params().begin()));
  EXPECT_FALSE(std::equal(a.params().begin(), a.params().end(), c.params().begin()));
  for (std::size_t k = MlpPolicy::kW2; k < MlpPolicy::kB2; ++k) EXPECT_LE(std::abs(a.params()[k]), 1.0 / 8.0);
  EXPECT_EQ(a.params().size(), 8u * 64 + 64 + 64 * 64 + 64 + 4 * 64 + 4);
}

// Backward of a random linear functional of the outputs against central
// differences on parameters and inputs.
TEST(Backward, MatchesFiniteDifferences) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  MlpPolicy net = MlpPolicy::initialize(7);
  const auto x = random_input(rng, 20.0);
  MlpPolicy::Output w;
  for (double& v : w) v = unif(rng);
  auto loss = [&](const MlpPolicy& n, const MlpPolicy::Input& in) {
    const auto y = n.forward(in);
    double acc = 0.0;
    for (int k = 0; k < 4; ++k) acc += w[k] * y[k];
    return acc;
  };
  MlpPolicy::Cache cache;
  net.forward(x, cache);
  std::vector<double> grad(MlpPolicy::kNumParams, 0.0);
  const auto dx = net.backward(cache, w, grad);

  const double h = 1e-6;
  std::vector<double> fd, an;
  std::uniform_int_distribution<std::size_t> pick(0, MlpPolicy::kNumParams - 1);
  for (int k = 0; k < 200; ++k) {
    const std::size_t q = pick(rng);
    const double keep = net.params()[q];
    net.params()[q] = keep + h;
    const double up = loss(net, x);
    net.params()[q] = keep - h;
    const double down = loss(net, x);
    net.params()[q] = keep;
    fd.push_back((up - down) / (2 * h));
    an.push_back(grad[q]);
  }
  EXPECT_LT(rel_err(fd, an), 1e-5);

  std::vector<double> fdx, anx;
  for (int k = 0; k < 8; ++k) {
    auto xp = x, xm = x;
    xp[k] += h;
    xm[k] -= h;
    fdx.push_back((loss(net, xp) - loss(net, xm)) / (2 * h));
    anx.push_back(dx[k]);
  }
  EXPECT_LT(rel_err(fdx, anx), 1e-5);
}

struct FdCase {
  RolloutObjective objective;
  bool single_agent;
  std::uint64_t seed;
};

class RolloutGradientFd : public ::testing::TestWithParam<FdCase> {};

TEST_P(RolloutGradientFd, MatchesCentralDifferences) {
  const auto& param = GetParam();
  const EnvConfig env;
  MlpPolicy net = MlpPolicy::initialize(param.seed);
  const auto s0 = sample_initial_states(1, env, 2, param.seed + 100)[0];
  ControlSpec control;
  if (param.single_agent) {
    control.network_controlled.assign(4, false);
    control.network_controlled[env.ego] = true;
    control.external = [env](const IntersectionState& s) { return rule_based_policy(s, env); };
  }
  const auto exact = rollout_objective_and_gradient(net, s0, env, param.objective, control);
  std::mt19937_64 rng(param.seed);
  std::uniform_int_distribution<std::size_t> pick(0, MlpPolicy::kNumParams - 1);
  const double h = 1e-5;
  std::vector<double> fd, an;
  for (int k = 0; k < 20; ++k) {
    // Single-agent runs only move through the ego output row; keep half
    // the probes there so the comparison is not dominated by zeros.
    std::size_t q = pick(rng);
    if (param.single_agent && k % 2 == 0) q = MlpPolicy::kW3 + env.ego * 64 + k;
    const double keep = net.params()[q];
    net.params()[q] = keep + h;
    const double up = rollout_objective_and_gradient(net, s0, env, param.objective, control).objective;
    net.params()[q] = keep - h;
    const double down = rollout_objective_and_gradient(net, s0, env, param.objective, control).objective;
    net.params()[q] = keep;
    fd.push_back((up - down) / (2 * h));
    an.push_back(exact.gradient[q]);
  }
  EXPECT_LT(rel_err(fd, an), 1e-4);
}

INSTANTIATE_TEST_SUITE_P(
    Configurations, RolloutGradientFd,
    ::testing::Values(FdCase{{ObjectiveKind::kPotential, 0}, false, 11},
                      FdCase{{ObjectiveKind::kPotential, 0}, false, 12},
                      FdCase{{ObjectiveKind::kAgent, 1}, false, 13},
                      FdCase{{ObjectiveKind::kAgent, 2}, false, 14},
                      FdCase{{ObjectiveKind::kAgent, 1}, true, 15}));

TEST(RolloutObjective, NearOptimumWithZeroNetwork) {
  const EnvConfig env;
  const MlpPolicy net;
  IntersectionState s;
  for (int i = 0; i < 4; ++i) s.vehicles.push_back({env.direction(i) * 1e9 * (i + 1), env.desired_speeds[i]});
  const auto r = rollout_objective_and_gradient(net, s, env, {});
  EXPECT_LT(std::abs(r.objective), 1e-4);
  for (double g : r.gradient) EXPECT_TRUE(std::isfinite(g));
}

TEST(RolloutObjective, PotentialRecomputedFromTrajectory) {
  const EnvConfig env;
  const MlpPolicy net = MlpPolicy::initialize(21);
  for (const auto& s0 : sample_initial_states(5, env, 2, 22)) {
    const auto r = rollout_objective_and_gradient(net, s0, env, {});
    const auto traj = rollout(make_joint_policy(net), s0, env);
    double total = 0.0, disc = 1.0;
    for (int t = 0; t < env.horizon_steps; ++t) {
      const auto& s = traj.states[t];
      double self = 0.0, pairs = 0.0;
      for (int i = 0; i < 4; ++i) {
        self += self_reward(s, i, env);
        for (int j = i + 1; j < 4; ++j) pairs += pairwise_reward(s, i, j, env);
      }
      total += disc * (env.omega_self * self + env.omega_joint * pairs);
      disc *= env.gamma;
    }
    EXPECT_NEAR(r.objective, total, 1e-10 * std::max(1.0, std::abs(total)));
    EXPECT_NEAR(r.objective, traj.potential_return, 1e-10 * std::max(1.0, std::abs(total)));
  }
}

// When no output reads vehicle i's state, the parameters feeding only
// output i move vehicle i alone and the potential gradient along them is
// agent i's own gradient.
TEST(RolloutObjective, PotentialGradientMatchesOwnGradientWhenDecoupled) {
  const EnvConfig env;
  for (int i = 0; i < 4; ++i) {
    MlpPolicy net = MlpPolicy::initialize(30 + i);
    for (int r = 0; r < 64; ++r) {
      net.params()[MlpPolicy::kW1 + r * 8 + 2 * i] = 0.0;
      net.params()[MlpPolicy::kW1 + r * 8 + 2 * i + 1] = 0.0;
    }
    const auto s0 = sample_initial_states(1, env, 2, 40 + i)[0];
    const auto phi = rollout_objective_and_gradient(net, s0, env, {ObjectiveKind::kPotential, 0});
    const auto own = rollout_objective_and_gradient(net, s0, env, {ObjectiveKind::kAgent, i});
    std::vector<double> a, b;
    for (int r = 0; r < 64; ++r) {
      a.push_back(phi.gradient[MlpPolicy::kW3 + i * 64 + r]);
      b.push_back(own.gradient[MlpPolicy::kW3 + i * 64 + r]);
    }
    a.push_back(phi.gradient[MlpPolicy::kB3 + i]);
    b.push_back(own.gradient[MlpPolicy::kB3 + i]);
    EXPECT_LT(rel_err(a, b), 1e-10) << "vehicle " << i;
  }
}

TEST(RolloutObjective, ExternalPolicyRequired) {
  const EnvConfig env;
  ControlSpec control;
  control.network_controlled = {false, true, false, false};
  const auto s0 = sample_initial_states(1, env, 2, 1)[0];
  EXPECT_THROW(rollout_objective_and_gradient(MlpPolicy(), s0, env, {}, control), InvalidArgument);
}

TEST(Adam, ZeroGradientDecaysMoments) {
  std::vector<double> p{1.0, -2.0};
  auto st = AdamState::for_params(2);
  st.m = {0.5, -0.5};
  st.v = {0.25, 0.25};
  adam_step(p, std::vector<double>{0.0, 0.0}, st, false);
  EXPECT_DOUBLE_EQ(st.m[0], 0.45);
  EXPECT_DOUBLE_EQ(st.v[0], 0.25 * 0.999);
  EXPECT_EQ(st.step, 1);
  st = AdamState::for_params(2);
  const std::vector<double> keep = p;
  adam_step(p, std::vector<double>{0.0, 0.0}, st, true);
  EXPECT_EQ(p, keep);
}

TEST(Adam, ScalarTrace) {
  // Step 1 with g = 2: m_hat = 2, v_hat = 4, update lr * 2 / (2 + eps).
  std::vector<double> p{0.0};
  auto st = AdamState::for_params(1);
  adam_step(p, std::vector<double>{2.0}, st, false);
  EXPECT_DOUBLE_EQ(p[0], -1e-3 * 2.0 / (2.0 + 1e-8));
  // Step 2 with g = -1.
  const double m = 0.9 * 0.2 + 0.1 * -1.0;
  const double v = 0.999 * 0.004 + 0.001 * 1.0;
  const double m_hat = m / (1 - 0.81), v_hat = v / (1 - 0.999 * 0.999);
  const double expected = p[0] - 1e-3 * m_hat / (std::sqrt(v_hat) + 1e-8);
  adam_step(p, std::vector<double>{-1.0}, st, false);
  EXPECT_NEAR(p[0], expected, 1e-18);
  std::vector<double> q{0.0};
  auto up = AdamState::for_params(1);
  adam_step(q, std::vector<double>{2.0}, up, true);
  EXPECT_DOUBLE_EQ(q[0], 1e-3 * 2.0 / (2.0 + 1e-8));
}

TEST(Adam, ShapeMismatch) {
  std::vector<double> p{0.0, 1.0};
  auto st = AdamState::for_params(1);
  EXPECT_THROW(adam_step(p, std::vector<double>{1.0, 1.0}, st, true), InvalidArgument);
}

TrainConfig small_train() {
  TrainConfig t;
  t.max_episodes = 25;
  t.batch_size = 4;
  t.eval_batch_size = 16;
  return t;
}

TEST(Training, MarlIsDeterministicAndImproves) {
  const EnvConfig env;
  const auto a = train_marl(env, small_train(), 3);
  const auto b = train_marl(env, small_train(), 3);
  EXPECT_EQ(a.objectives, b.objectives);
  EXPECT_TRUE(std::equal(a.net.params().begin(), a.net.params().end(), b.net.params().begin()));
  EXPECT_EQ(a.episodes, 25);
  EXPECT_EQ(a.objectives.size(), 25u);
  EXPECT_EQ(a.stop_reason, "max-episodes");
  EXPECT_GT(a.final_eval_objective, a.initial_eval_objective);
}

TEST(Training, SingleAgentImprovesEgoObjective) {
  const EnvConfig env;
  const auto r = train_single_agent(env, small_train(), 4);
  EXPECT_EQ(r.mode, TrainMode::kSingleAgent);
  EXPECT_GT(r.final_eval_objective, r.initial_eval_objective);
}

TEST(Training, GradientNormStop) {
  const EnvConfig env;
  auto t = small_train();
  t.grad_norm_tol = 1e300;
  const auto r = train_marl(env, t, 5);
  EXPECT_EQ(r.episodes, 1);
  EXPECT_EQ(r.stop_reason, "gradient-norm");
  EXPECT_EQ(r.adam.step, 0);
}

TEST(Training, RejectsWrongVehicleCount) {
  EnvConfig env;
  env.lanes.pop_back();
  env.desired_speeds.pop_back();
  EXPECT_THROW(train_marl(env, small_train(), 0), InvalidArgument);
}

}  // namespace
}  // namespace mpg::driving
