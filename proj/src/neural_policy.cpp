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

#include "mpg/neural_policy.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>

#include "mpg/errors.hpp"
#include "mpg/parallel.hpp"

namespace mpg::driving {
namespace {

double leaky(double z) { return z > 0.0 ? z : MlpPolicy::kLeakySlope * z; }
double leaky_slope(double z) { return z > 0.0 ? 1.0 : MlpPolicy::kLeakySlope; }

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

void require_four_vehicles(const EnvConfig& config) {
  if (config.num_vehicles() != MlpPolicy::kOutputs) {
    throw InvalidArgument("the policy network drives exactly four vehicles");
  }
}

MlpPolicy::Input to_input(const IntersectionState& s) {
  MlpPolicy::Input x{};
  for (int i = 0; i < MlpPolicy::kOutputs; ++i) {
    x[2 * i] = s.vehicles[i].p;
    x[2 * i + 1] = s.vehicles[i].v;
  }
  return x;
}

// Adds d(step reward)/d(state) * weight into grad (laid out p_1, v_1, ...).
void accumulate_reward_gradient(const IntersectionState& s, const EnvConfig& config,
                                const RolloutObjective& objective, double weight,
                                std::span<double> grad) {
  const int n = s.size();
  auto self_term = [&](int i) {
    grad[2 * i + 1] += weight * config.omega_self * -2.0 * (s.vehicles[i].v - config.desired_speeds[i]);
  };
  auto pair_term = [&](int i, int j) {
    const auto [xi, yi] = world_position(s, i, config);
    const auto [xj, yj] = world_position(s, j, config);
    const double dx = xi - xj;
    const double dy = yi - yj;
    const double d = std::sqrt(dx * dx + dy * dy);
    if (d == 0.0) return;
    const double denom = d + config.epsilon;
    const double c = weight * config.omega_joint / (denom * denom * d);
    // d r_ij / d (x_i, y_i) = c * (dx, dy); the lane axis picks the component.
    grad[2 * i] += c * (config.lanes[i].axis == Axis::kX ? dx : dy);
    grad[2 * j] -= c * (config.lanes[j].axis == Axis::kX ? dx : dy);
  };
  if (objective.kind == ObjectiveKind::kPotential) {
    for (int i = 0; i < n; ++i) {
      self_term(i);
      for (int j = 0; j < i; ++j) pair_term(i, j);
    }
  } else {
    const int i = objective.agent;
    self_term(i);
    for (int j = 0; j < n; ++j) {
      if (j != i) pair_term(i, j);
    }
  }
}

double step_objective(const IntersectionState& s, const EnvConfig& config,
                      const RolloutObjective& objective) {
  return objective.kind == ObjectiveKind::kPotential ? potential_step_value(s, config)
                                                     : total_step_reward(s, objective.agent, config);
}

}  // namespace

MlpPolicy::Input default_input_scale() {
  MlpPolicy::Input scale{};
  for (int i = 0; i < MlpPolicy::kOutputs; ++i) {
    scale[2 * i] = 1.0 / 20.0;
    scale[2 * i + 1] = 1.0 / 5.0;
  }
  return scale;
}

MlpPolicy::MlpPolicy() : params_(kNumParams, 0.0), input_scale_(default_input_scale()) {}

MlpPolicy MlpPolicy::initialize(std::uint64_t seed) {
  MlpPolicy net;
  std::mt19937_64 rng(seed);
  auto fill = [&](std::size_t begin, std::size_t count, int fan_in) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> unif(-bound, bound);
    for (std::size_t k = 0; k < count; ++k) net.params_[begin + k] = unif(rng);
  };
  fill(kW1, kHidden * kInputs, kInputs);
  fill(kB1, kHidden, kInputs);
  fill(kW2, kHidden * kHidden, kHidden);
  fill(kB2, kHidden, kHidden);
  fill(kW3, kOutputs * kHidden, kHidden);
  fill(kB3, kOutputs, kHidden);
  return net;
}

MlpPolicy::Output MlpPolicy::forward(const Input& input) const {
  Cache cache;
  return forward(input, cache);
}

MlpPolicy::Output MlpPolicy::forward(const Input& input, Cache& c) const {
  for (int k = 0; k < kInputs; ++k) {
    if (!std::isfinite(input[k])) throw InvalidArgument("non-finite network input");
    c.x[k] = input[k] * input_scale_[k];
  }
  const double* p = params_.data();
  for (int r = 0; r < kHidden; ++r) {
    double acc = p[kB1 + r];
    const double* w = p + kW1 + static_cast<std::size_t>(r) * kInputs;
    for (int k = 0; k < kInputs; ++k) acc += w[k] * c.x[k];
    c.z1[r] = acc;
    c.h1[r] = leaky(acc);
  }
  for (int r = 0; r < kHidden; ++r) {
    double acc = p[kB2 + r];
    const double* w = p + kW2 + static_cast<std::size_t>(r) * kHidden;
    for (int k = 0; k < kHidden; ++k) acc += w[k] * c.h1[k];
    c.z2[r] = acc;
    c.h2[r] = leaky(acc);
  }
  for (int r = 0; r < kOutputs; ++r) {
    double acc = p[kB3 + r];
    const double* w = p + kW3 + static_cast<std::size_t>(r) * kHidden;
    for (int k = 0; k < kHidden; ++k) acc += w[k] * c.h2[k];
    c.z3[r] = acc;
    c.out[r] = kOutputScale * std::tanh(acc);
  }
  return c.out;
}

MlpPolicy::Input MlpPolicy::backward(const Cache& c, const Output& out_grad,
                                     std::span<double> g) const {
  if (g.size() != kNumParams) throw InvalidArgument("parameter gradient has wrong size");
  const double* p = params_.data();
  std::array<double, kOutputs> dz3{};
  for (int r = 0; r < kOutputs; ++r) {
    const double t = std::tanh(c.z3[r]);
    dz3[r] = out_grad[r] * kOutputScale * (1.0 - t * t);
  }
  std::array<double, kHidden> dh2{};
  for (int r = 0; r < kOutputs; ++r) {
    if (dz3[r] == 0.0) continue;
    g[kB3 + r] += dz3[r];
    double* gw = g.data() + kW3 + static_cast<std::size_t>(r) * kHidden;
    const double* w = p + kW3 + static_cast<std::size_t>(r) * kHidden;
    for (int k = 0; k < kHidden; ++k) {
      gw[k] += dz3[r] * c.h2[k];
      dh2[k] += w[k] * dz3[r];
    }
  }
  std::array<double, kHidden> dz2{};
  for (int k = 0; k < kHidden; ++k) dz2[k] = dh2[k] * leaky_slope(c.z2[k]);
  std::array<double, kHidden> dh1{};
  for (int r = 0; r < kHidden; ++r) {
    g[kB2 + r] += dz2[r];
    double* gw = g.data() + kW2 + static_cast<std::size_t>(r) * kHidden;
    const double* w = p + kW2 + static_cast<std::size_t>(r) * kHidden;
    for (int k = 0; k < kHidden; ++k) {
      gw[k] += dz2[r] * c.h1[k];
      dh1[k] += w[k] * dz2[r];
    }
  }
  Input dx{};
  for (int r = 0; r < kHidden; ++r) {
    const double dz1 = dh1[r] * leaky_slope(c.z1[r]);
    g[kB1 + r] += dz1;
    double* gw = g.data() + kW1 + static_cast<std::size_t>(r) * kInputs;
    const double* w = p + kW1 + static_cast<std::size_t>(r) * kInputs;
    for (int k = 0; k < kInputs; ++k) {
      gw[k] += dz1 * c.x[k];
      dx[k] += w[k] * dz1;
    }
  }
  for (int k = 0; k < kInputs; ++k) dx[k] *= input_scale_[k];
  return dx;
}

RolloutGradient rollout_objective_and_gradient(const MlpPolicy& net, const IntersectionState& s0,
                                               const EnvConfig& config,
                                               const RolloutObjective& objective,
                                               const ControlSpec& control) {
  config.validate();
  require_four_vehicles(config);
  if (s0.size() != config.num_vehicles()) throw InvalidArgument("state does not match config");
  if (objective.kind == ObjectiveKind::kAgent &&
      (objective.agent < 0 || objective.agent >= config.num_vehicles())) {
    throw InvalidArgument("objective agent out of range");
  }
  const int n = config.num_vehicles();
  const int horizon = config.horizon_steps;
  bool any_external = false;
  bool any_network = false;
  for (int i = 0; i < n; ++i) (control.controls(i) ? any_network : any_external) = true;
  if (any_external && !control.external) {
    throw InvalidArgument("uncontrolled vehicles need an external policy");
  }

  std::vector<IntersectionState> states;
  states.reserve(horizon + 1);
  states.push_back(s0);
  std::vector<MlpPolicy::Cache> caches(any_network ? horizon : 0);
  // d(applied action)/d(network output): 1 inside the bound, 0 when clamped.
  std::vector<std::array<double, MlpPolicy::kOutputs>> pass(horizon);
  RolloutGradient result;
  double discount = 1.0;
  for (int t = 0; t < horizon; ++t) {
    const IntersectionState& s = states.back();
    const double r = step_objective(s, config, objective);
    if (!std::isfinite(r)) throw NumericalFault("non-finite objective term", t);
    result.objective += discount * r;
    Actions a(n, 0.0);
    Actions ext;
    if (any_external) ext = control.external(s);
    MlpPolicy::Output out{};
    if (any_network) out = net.forward(to_input(s), caches[t]);
    for (int i = 0; i < n; ++i) {
      const double raw = control.controls(i) ? out[i] : ext[i];
      if (!std::isfinite(raw)) throw NumericalFault("non-finite action", t);
      a[i] = std::clamp(raw, -config.g, config.g);
      pass[t][i] = (control.controls(i) && std::abs(raw) <= config.g) ? 1.0 : 0.0;
    }
    states.push_back(step_dynamics(s, a, config));
    discount *= config.gamma;
  }

  result.gradient.assign(MlpPolicy::kNumParams, 0.0);
  std::vector<double> lam(2 * n, 0.0);  // d objective / d x_{t+1}
  std::vector<double> next_lam(2 * n);
  std::vector<double> discounts(horizon);
  discount = 1.0;
  for (int t = 0; t < horizon; ++t, discount *= config.gamma) discounts[t] = discount;
  for (int t = horizon - 1; t >= 0; --t) {
    std::fill(next_lam.begin(), next_lam.end(), 0.0);
    accumulate_reward_gradient(states[t], config, objective, discounts[t], next_lam);
    for (int i = 0; i < n; ++i) {
      next_lam[2 * i] += lam[2 * i];
      next_lam[2 * i + 1] += lam[2 * i] * config.dt + lam[2 * i + 1];
    }
    if (any_network) {
      MlpPolicy::Output out_grad{};
      bool nonzero = false;
      for (int i = 0; i < n; ++i) {
        out_grad[i] = pass[t][i] * lam[2 * i + 1] * config.dt;
        nonzero = nonzero || out_grad[i] != 0.0;
      }
      if (nonzero) {
        const auto dx = net.backward(caches[t], out_grad, result.gradient);
        for (int k = 0; k < 2 * n; ++k) next_lam[k] += dx[k];
      }
    }
    lam.swap(next_lam);
    for (double x : lam) {
      if (!std::isfinite(x)) throw NumericalFault("non-finite adjoint", t);
    }
  }
  return result;
}

RolloutGradient batch_objective_and_gradient(const MlpPolicy& net,
                                             const std::vector<IntersectionState>& batch,
                                             const EnvConfig& config,
                                             const RolloutObjective& objective,
                                             const ControlSpec& control) {
  if (batch.empty()) throw InvalidArgument("empty batch");
  const int count = static_cast<int>(batch.size());
  std::vector<RolloutGradient> parts(count);
  std::vector<std::string> errors(count);
  MPG_PARALLEL_FOR_DYNAMIC
  for (int k = 0; k < count; ++k) {
    try {
      parts[k] = rollout_objective_and_gradient(net, batch[k], config, objective, control);
    } catch (const std::exception& e) {
      errors[k] = e.what();
    }
  }
  for (int k = 0; k < count; ++k) {
    if (!errors[k].empty()) throw NumericalFault("scenario " + std::to_string(k) + ": " + errors[k], -1);
  }
  RolloutGradient mean;
  mean.gradient.assign(MlpPolicy::kNumParams, 0.0);
  for (const auto& part : parts) {
    mean.objective += part.objective;
    for (std::size_t q = 0; q < mean.gradient.size(); ++q) mean.gradient[q] += part.gradient[q];
  }
  mean.objective /= count;
  for (double& x : mean.gradient) x /= count;
  return mean;
}

JointPolicy make_joint_policy(const MlpPolicy& net, const ControlSpec& control) {
  return [net, control](const IntersectionState& s) {
    if (s.size() != MlpPolicy::kOutputs) throw InvalidArgument("network needs four vehicles");
    const auto out = net.forward(to_input(s));
    Actions a(out.begin(), out.end());
    bool any_external = false;
    for (int i = 0; i < s.size(); ++i) any_external = any_external || !control.controls(i);
    if (any_external) {
      const Actions ext = control.external(s);
      for (int i = 0; i < s.size(); ++i) {
        if (!control.controls(i)) a[i] = ext[i];
      }
    }
    return a;
  };
}

AdamState AdamState::for_params(std::size_t n, double lr) {
  AdamState s;
  s.m.assign(n, 0.0);
  s.v.assign(n, 0.0);
  s.lr = lr;
  return s;
}

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               bool ascent) {
  if (params.size() != grads.size() || state.m.size() != params.size() ||
      state.v.size() != params.size()) {
    throw InvalidArgument("Adam shapes do not match");
  }
  ++state.step;
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t k = 0; k < params.size(); ++k) {
    const double g = ascent ? -grads[k] : grads[k];
    state.m[k] = state.beta1 * state.m[k] + (1.0 - state.beta1) * g;
    state.v[k] = state.beta2 * state.v[k] + (1.0 - state.beta2) * g * g;
    const double m_hat = state.m[k] / c1;
    const double v_hat = state.v[k] / c2;
    params[k] -= state.lr * m_hat / (std::sqrt(v_hat) + state.eps);
  }
}

void TrainConfig::validate() const {
  if (max_episodes < 1) throw InvalidArgument("max_episodes must be >= 1");
  if (batch_size < 1) throw InvalidArgument("batch_size must be >= 1");
  if (!(learning_rate > 0.0)) throw InvalidArgument("learning_rate must be > 0");
  if (!(grad_norm_tol >= 0.0)) throw InvalidArgument("grad_norm_tol must be >= 0");
  if (strata < 1) throw InvalidArgument("strata must be >= 1");
  if (eval_batch_size < 1) throw InvalidArgument("eval_batch_size must be >= 1");
}

std::string to_string(TrainMode mode) { return mode == TrainMode::kMarl ? "marl" : "single"; }

std::uint64_t episode_seed(std::uint64_t master_seed, int episode) {
  return splitmix64(master_seed + static_cast<std::uint64_t>(episode));
}

namespace {

TrainReport run_training(TrainMode mode, const EnvConfig& env, const TrainConfig& train,
                         std::uint64_t seed) {
  env.validate();
  train.validate();
  require_four_vehicles(env);
  const auto start = std::chrono::steady_clock::now();

  RolloutObjective objective;
  ControlSpec control;
  if (mode == TrainMode::kSingleAgent) {
    objective = {ObjectiveKind::kAgent, env.ego};
    control.network_controlled.assign(env.num_vehicles(), false);
    control.network_controlled[env.ego] = true;
    control.external = [env](const IntersectionState& s) { return rule_based_policy(s, env); };
  }

  TrainReport report;
  report.mode = mode;
  report.env = env;
  report.train = train;
  report.seed = seed;
  report.net = MlpPolicy::initialize(splitmix64(seed ^ 0x5EEDULL));
  report.adam = AdamState::for_params(MlpPolicy::kNumParams, train.learning_rate);

  const auto eval_batch =
      sample_initial_states(train.eval_batch_size, env, train.strata, splitmix64(~seed));
  try {
    report.initial_eval_objective =
        batch_objective_and_gradient(report.net, eval_batch, env, objective, control).objective;
    report.stop_reason = "max-episodes";
    for (int ep = 0; ep < train.max_episodes; ++ep) {
      const auto batch =
          sample_initial_states(train.batch_size, env, train.strata, episode_seed(seed, ep));
      const RolloutGradient rg =
          batch_objective_and_gradient(report.net, batch, env, objective, control);
      double norm = 0.0;
      for (double x : rg.gradient) norm += x * x;
      norm = std::sqrt(norm);
      report.objectives.push_back(rg.objective);
      report.grad_norms.push_back(norm);
      report.episodes = ep + 1;
      if (norm < train.grad_norm_tol) {
        report.stop_reason = "gradient-norm";
        break;
      }
      adam_step(report.net.params(), rg.gradient, report.adam, /*ascent=*/true);
    }
    report.final_eval_objective =
        batch_objective_and_gradient(report.net, eval_batch, env, objective, control).objective;
  } catch (const NumericalFault& e) {
    report.stop_reason = std::string("numerical-fault: ") + e.what();
  }
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace

TrainReport train_marl(const EnvConfig& env, const TrainConfig& train, std::uint64_t seed) {
  return run_training(TrainMode::kMarl, env, train, seed);
}

TrainReport train_single_agent(const EnvConfig& env, const TrainConfig& train, std::uint64_t seed) {
  return run_training(TrainMode::kSingleAgent, env, train, seed);
}

}  // namespace mpg::driving
