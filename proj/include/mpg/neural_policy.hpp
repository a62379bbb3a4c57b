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

#ifndef MPG_NEURAL_POLICY_HPP_
#define MPG_NEURAL_POLICY_HPP_

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mpg/intersection_env.hpp"

namespace mpg::driving {

// 8 -> 64 (LeakyReLU) -> 64 (LeakyReLU) -> 4 (tanh * 9.81), one shared
// network producing all four vehicles' accelerations from the joint state.
// Inputs are multiplied elementwise by a fixed `input_scale` before the
// first layer.
class MlpPolicy {
 public:
  static constexpr int kInputs = 8;
  static constexpr int kHidden = 64;
  static constexpr int kOutputs = 4;
  static constexpr double kOutputScale = 9.81;
  static constexpr double kLeakySlope = 0.01;
  static constexpr std::size_t kNumParams =
      kHidden * kInputs + kHidden + kHidden * kHidden + kHidden + kOutputs * kHidden + kOutputs;

  using Input = std::array<double, kInputs>;
  using Output = std::array<double, kOutputs>;

  // All parameters zero; default input scale.
  MlpPolicy();
  // Uniform fan-in initialization: U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
  static MlpPolicy initialize(std::uint64_t seed);

  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }
  const Input& input_scale() const { return input_scale_; }
  void set_input_scale(const Input& scale) { input_scale_ = scale; }

  // Activations kept for the backward pass.
  struct Cache {
    Input x{};
    std::array<double, kHidden> z1{}, h1{}, z2{}, h2{};
    std::array<double, kOutputs> z3{};
    Output out{};
  };

  Output forward(const Input& input) const;
  Output forward(const Input& input, Cache& cache) const;
  // Accumulates d(loss)/d(params) into `param_grad` (size kNumParams) given
  // d(loss)/d(output); returns d(loss)/d(input).
  Input backward(const Cache& cache, const Output& out_grad, std::span<double> param_grad) const;

  // Offsets into params().
  static constexpr std::size_t kW1 = 0;
  static constexpr std::size_t kB1 = kW1 + kHidden * kInputs;
  static constexpr std::size_t kW2 = kB1 + kHidden;
  static constexpr std::size_t kB2 = kW2 + kHidden * kHidden;
  static constexpr std::size_t kW3 = kB2 + kHidden;
  static constexpr std::size_t kB3 = kW3 + kOutputs * kHidden;

 private:
  std::vector<double> params_;
  Input input_scale_;
};

// Positions scaled by 1/20 m, velocities by 1/5 m/s.
MlpPolicy::Input default_input_scale();

enum class ObjectiveKind { kPotential, kAgent };

struct RolloutObjective {
  ObjectiveKind kind = ObjectiveKind::kPotential;
  int agent = 0;  // used when kind == kAgent
};

// Which vehicles the network drives. Other vehicles follow `external`,
// whose actions are treated as constants for differentiation.
struct ControlSpec {
  std::vector<bool> network_controlled;  // empty = all vehicles
  JointPolicy external;

  bool controls(int i) const { return network_controlled.empty() || network_controlled[i]; }
};

struct RolloutGradient {
  double objective = 0.0;
  std::vector<double> gradient;  // d objective / d params
};

// Discounted objective over the horizon and its exact reverse-mode gradient
// through the network, the Euler dynamics and the reward expressions.
RolloutGradient rollout_objective_and_gradient(const MlpPolicy& net, const IntersectionState& s0,
                                               const EnvConfig& config,
                                               const RolloutObjective& objective,
                                               const ControlSpec& control = {});

// Batch mean of the above. Per-scenario gradients are computed in parallel
// into separate buffers and reduced in scenario order.
RolloutGradient batch_objective_and_gradient(const MlpPolicy& net,
                                             const std::vector<IntersectionState>& batch,
                                             const EnvConfig& config,
                                             const RolloutObjective& objective,
                                             const ControlSpec& control = {});

// Joint policy: network outputs for controlled vehicles, `external` for the rest.
JointPolicy make_joint_policy(const MlpPolicy& net, const ControlSpec& control = {});

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::int64_t step = 0;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  static AdamState for_params(std::size_t n, double lr = 1e-3);
};

// Bias-corrected Adam. With ascent=true the update climbs the gradient.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               bool ascent);

struct TrainConfig {
  int max_episodes = 5000;
  int batch_size = 16;
  double learning_rate = 1e-3;
  double grad_norm_tol = 1e-3;
  int strata = 2;
  // Fixed batch used to report objective before and after training.
  int eval_batch_size = 64;
  void validate() const;
};

enum class TrainMode { kMarl, kSingleAgent };
std::string to_string(TrainMode mode);

struct TrainReport {
  TrainMode mode = TrainMode::kMarl;
  std::vector<double> objectives;  // batch mean per episode, pre-update
  std::vector<double> grad_norms;
  double initial_eval_objective = 0.0;
  double final_eval_objective = 0.0;
  int episodes = 0;
  std::string stop_reason;
  double wall_seconds = 0.0;
  MlpPolicy net;
  AdamState adam;
  EnvConfig env;
  TrainConfig train;
  std::uint64_t seed = 0;
};

// Seed of the initial-state batch for `episode`.
std::uint64_t episode_seed(std::uint64_t master_seed, int episode);

// Potential ascent: every vehicle follows the network, objective = Phi.
TrainReport train_marl(const EnvConfig& env, const TrainConfig& train, std::uint64_t seed);
// Ego-only objective; surrounding vehicles follow the rule-based policy.
TrainReport train_single_agent(const EnvConfig& env, const TrainConfig& train, std::uint64_t seed);

}  // namespace mpg::driving

#endif  // MPG_NEURAL_POLICY_HPP_
