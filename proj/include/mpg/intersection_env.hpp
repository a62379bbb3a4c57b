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

#ifndef MPG_INTERSECTION_ENV_HPP_
#define MPG_INTERSECTION_ENV_HPP_

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace mpg::driving {

enum class Axis { kX, kY };

// A straight lane through the intersection center. Vehicles on an x-lane
// sit at y = lateral_offset and vice versa.
struct Lane {
  Axis axis = Axis::kX;
  double lateral_offset = 0.0;
};

struct VehicleState {
  double p = 0.0;  // position along the lane axis, m
  double v = 0.0;  // signed velocity along the lane axis, m/s
};

struct IntersectionState {
  std::vector<VehicleState> vehicles;

  int size() const { return static_cast<int>(vehicles.size()); }
  // (p_1, v_1, ..., p_N, v_N)
  std::vector<double> flatten() const;
  static IntersectionState from_flat(std::span<const double> flat);
};

struct EnvConfig {
  double dt = 0.5;
  int horizon_steps = 40;
  double gamma = 0.99;
  double g = 9.81;
  double epsilon = 1e-5;
  std::vector<double> desired_speeds{5.0, -5.0, -5.0, 5.0};
  double omega_self = 1.0;
  double omega_joint = 100.0;
  double collision_distance = 2.0;
  // Vehicles 1/3 on the vertical axis, 2/4 on the horizontal axis;
  // right-hand traffic for the signed desired speeds above.
  std::vector<Lane> lanes{{Axis::kY, 1.75}, {Axis::kX, 1.75}, {Axis::kY, -1.75}, {Axis::kX, -1.75}};
  // Zero-based index of the ego vehicle ("vehicle 2").
  int ego = 1;
  // Initial positions: this many meters before the center, along travel.
  double spawn_min = 12.0;
  double spawn_max = 30.0;
  // Initial speeds as fractions of |desired speed|.
  double speed_min_fraction = 0.6;
  double speed_max_fraction = 1.2;
  // Rule-based policy constants.
  double rule_gain = 2.0;
  double rule_stop_margin = 2.0;

  int num_vehicles() const { return static_cast<int>(lanes.size()); }
  // +1 or -1: direction of travel along the lane axis.
  double direction(int i) const { return desired_speeds[i] >= 0.0 ? 1.0 : -1.0; }
  // Half-width of the region where crossing lanes can come within the
  // collision distance of each other.
  double conflict_half_width() const;
  void validate() const;
};

using Actions = std::vector<double>;
using JointPolicy = std::function<Actions(const IntersectionState&)>;

struct Trajectory {
  std::vector<IntersectionState> states;  // horizon + 1 entries
  std::vector<Actions> actions;           // horizon entries, after clamping
  std::vector<std::vector<double>> rewards;  // [t][vehicle], total_step_reward
  std::vector<double> potentials;            // [t], potential_step_value
  std::vector<double> returns;               // discounted, per vehicle
  double potential_return = 0.0;
  bool collision = false;
  int collision_step = -1;
  std::pair<int, int> collision_pair{-1, -1};

  // Time-mean of |v| of `vehicle` over all stored states.
  double mean_speed(int vehicle) const;
};

// World coordinates of vehicle i's center.
std::pair<double, double> world_position(const IntersectionState& state, int i,
                                         const EnvConfig& config);

// Euler point-mass update: p += v dt, then v += a dt. |a_i| must be <= g.
IntersectionState step_dynamics(const IntersectionState& state, std::span<const double> actions,
                                const EnvConfig& config);

double self_reward(const IntersectionState& state, int i, const EnvConfig& config);
double pairwise_reward(const IntersectionState& state, int i, int j, const EnvConfig& config);
double total_step_reward(const IntersectionState& state, int i, const EnvConfig& config);
double potential_step_value(const IntersectionState& state, const EnvConfig& config);

struct CollisionCheck {
  bool collision = false;
  std::pair<int, int> pair{-1, -1};  // (ego, other), zero-based
};
// True iff some vehicle is closer than collision_distance to the ego.
CollisionCheck detect_collision(const IntersectionState& state, const EnvConfig& config);

Actions clamp_actions(Actions actions, const EnvConfig& config);

// Runs the full horizon (collision latches, the episode continues).
Trajectory rollout(const JointPolicy& policy, const IntersectionState& s0, const EnvConfig& config);

// First-come-first-served: a vehicle yields (brakes to stop before the
// conflict zone) while some crossing-lane vehicle that has not cleared the
// zone is nearer to the center; otherwise it tracks its desired speed.
Actions rule_based_policy(const IntersectionState& state, const EnvConfig& config);
Actions constant_speed_policy(const IntersectionState& state);

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

// Stratified sampling: every dimension is cut into strata[d] equal
// intervals with one uniform draw in each; n points are then drawn without
// replacement from the Cartesian product of the per-dimension draws.
std::vector<std::vector<double>> sample_stratified(int n, const std::vector<Range>& ranges,
                                                   const std::vector<int>& strata,
                                                   std::uint64_t seed);

// Per-dimension ranges for (p_1, v_1, ..., p_N, v_N) from the config.
std::vector<Range> initial_state_ranges(const EnvConfig& config);

std::vector<IntersectionState> sample_initial_states(int n, const EnvConfig& config, int strata,
                                                     std::uint64_t seed);

}  // namespace mpg::driving

#endif  // MPG_INTERSECTION_ENV_HPP_
