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

#include "mpg/intersection_env.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>
#include <unordered_set>

#include "mpg/errors.hpp"

namespace mpg::driving {

std::vector<double> IntersectionState::flatten() const {
  std::vector<double> out;
  out.reserve(vehicles.size() * 2);
  for (const auto& v : vehicles) {
    out.push_back(v.p);
    out.push_back(v.v);
  }
  return out;
}

IntersectionState IntersectionState::from_flat(std::span<const double> flat) {
  if (flat.size() % 2 != 0) throw InvalidArgument("flat state needs (p, v) pairs");
  IntersectionState s;
  for (std::size_t k = 0; k < flat.size(); k += 2) s.vehicles.push_back({flat[k], flat[k + 1]});
  return s;
}

double EnvConfig::conflict_half_width() const {
  double widest = 0.0;
  for (const auto& lane : lanes) widest = std::max(widest, std::abs(lane.lateral_offset));
  return widest + collision_distance;
}

void EnvConfig::validate() const {
  if (!(dt > 0.0)) throw InvalidArgument("dt must be > 0");
  if (horizon_steps < 1) throw InvalidArgument("horizon_steps must be >= 1");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw InvalidArgument("gamma must lie in [0,1]");
  if (!(g > 0.0)) throw InvalidArgument("action bound g must be > 0");
  if (!(epsilon > 0.0)) throw InvalidArgument("epsilon must be > 0");
  if (lanes.empty() || desired_speeds.size() != lanes.size()) {
    throw InvalidArgument("need one desired speed per lane");
  }
  if (ego < 0 || ego >= num_vehicles()) throw InvalidArgument("ego index out of range");
  if (!(collision_distance > 0.0)) throw InvalidArgument("collision_distance must be > 0");
  if (!(spawn_min <= spawn_max) || !(speed_min_fraction <= speed_max_fraction)) {
    throw InvalidArgument("initial-state ranges must have lo <= hi");
  }
}

double Trajectory::mean_speed(int vehicle) const {
  if (states.empty()) return 0.0;
  double acc = 0.0;
  for (const auto& s : states) acc += std::abs(s.vehicles[vehicle].v);
  return acc / static_cast<double>(states.size());
}

std::pair<double, double> world_position(const IntersectionState& state, int i,
                                         const EnvConfig& config) {
  const Lane& lane = config.lanes[i];
  const double p = state.vehicles[i].p;
  return lane.axis == Axis::kX ? std::pair{p, lane.lateral_offset}
                               : std::pair{lane.lateral_offset, p};
}

IntersectionState step_dynamics(const IntersectionState& state, std::span<const double> actions,
                                const EnvConfig& config) {
  if (static_cast<int>(actions.size()) != state.size()) {
    throw InvalidArgument("need one action per vehicle");
  }
  IntersectionState next = state;
  for (int i = 0; i < state.size(); ++i) {
    const double a = actions[i];
    if (!(std::abs(a) <= config.g)) {
      throw InvalidArgument("action of vehicle " + std::to_string(i) + " outside [-g, g]: " +
                            std::to_string(a));
    }
    next.vehicles[i].p = state.vehicles[i].p + state.vehicles[i].v * config.dt;
    next.vehicles[i].v = state.vehicles[i].v + a * config.dt;
  }
  return next;
}

double self_reward(const IntersectionState& state, int i, const EnvConfig& config) {
  const double e = state.vehicles[i].v - config.desired_speeds[i];
  return -(e * e);
}

double pairwise_reward(const IntersectionState& state, int i, int j, const EnvConfig& config) {
  if (i == j) throw InvalidArgument("pairwise reward needs i != j");
  const auto [xi, yi] = world_position(state, i, config);
  const auto [xj, yj] = world_position(state, j, config);
  const double dx = xi - xj;
  const double dy = yi - yj;
  return -1.0 / (std::sqrt(dx * dx + dy * dy) + config.epsilon);
}

double total_step_reward(const IntersectionState& state, int i, const EnvConfig& config) {
  double joint = 0.0;
  for (int j = 0; j < state.size(); ++j) {
    if (j != i) joint += pairwise_reward(state, i, j, config);
  }
  return config.omega_self * self_reward(state, i, config) + config.omega_joint * joint;
}

double potential_step_value(const IntersectionState& state, const EnvConfig& config) {
  double self = 0.0;
  double joint = 0.0;
  for (int i = 0; i < state.size(); ++i) {
    self += self_reward(state, i, config);
    for (int j = 0; j < i; ++j) joint += pairwise_reward(state, i, j, config);
  }
  return config.omega_self * self + config.omega_joint * joint;
}

CollisionCheck detect_collision(const IntersectionState& state, const EnvConfig& config) {
  CollisionCheck out;
  const int ego = config.ego;
  const auto [xe, ye] = world_position(state, ego, config);
  for (int j = 0; j < state.size(); ++j) {
    if (j == ego) continue;
    const auto [xj, yj] = world_position(state, j, config);
    if (std::hypot(xe - xj, ye - yj) < config.collision_distance) {
      out.collision = true;
      out.pair = {ego, j};
      return out;
    }
  }
  return out;
}

Actions clamp_actions(Actions actions, const EnvConfig& config) {
  for (double& a : actions) a = std::clamp(a, -config.g, config.g);
  return actions;
}

Trajectory rollout(const JointPolicy& policy, const IntersectionState& s0, const EnvConfig& config) {
  config.validate();
  if (s0.size() != config.num_vehicles()) throw InvalidArgument("state does not match config");
  Trajectory traj;
  traj.states.reserve(config.horizon_steps + 1);
  traj.states.push_back(s0);
  traj.returns.assign(config.num_vehicles(), 0.0);
  auto check = [&](const IntersectionState& s, int t) {
    if (traj.collision) return;
    const CollisionCheck c = detect_collision(s, config);
    if (c.collision) {
      traj.collision = true;
      traj.collision_step = t;
      traj.collision_pair = c.pair;
    }
  };
  check(s0, 0);
  double discount = 1.0;
  for (int t = 0; t < config.horizon_steps; ++t) {
    const IntersectionState& s = traj.states.back();
    Actions raw = policy(s);
    if (static_cast<int>(raw.size()) != config.num_vehicles()) {
      throw PolicyFault("policy returned " + std::to_string(raw.size()) + " actions");
    }
    for (int i = 0; i < config.num_vehicles(); ++i) {
      if (!std::isfinite(raw[i])) {
        throw PolicyFault("non-finite action for vehicle " + std::to_string(i) + " at step " +
                          std::to_string(t));
      }
    }
    Actions a = clamp_actions(std::move(raw), config);
    std::vector<double> r(config.num_vehicles());
    for (int i = 0; i < config.num_vehicles(); ++i) {
      r[i] = total_step_reward(s, i, config);
      traj.returns[i] += discount * r[i];
    }
    const double phi = potential_step_value(s, config);
    traj.potential_return += discount * phi;
    traj.potentials.push_back(phi);
    traj.rewards.push_back(std::move(r));
    IntersectionState next = step_dynamics(s, a, config);
    traj.actions.push_back(std::move(a));
    traj.states.push_back(std::move(next));
    check(traj.states.back(), t + 1);
    discount *= config.gamma;
  }
  return traj;
}

Actions rule_based_policy(const IntersectionState& state, const EnvConfig& config) {
  const int n = state.size();
  const double clear = config.conflict_half_width();
  const double stop_line = -(clear + config.rule_stop_margin);
  std::vector<double> progress(n), speed(n);
  for (int i = 0; i < n; ++i) {
    progress[i] = config.direction(i) * state.vehicles[i].p;
    speed[i] = config.direction(i) * state.vehicles[i].v;
  }
  auto cleared = [&](int i) { return progress[i] > clear; };
  auto ahead_of = [&](int j, int i) {
    const double dj = std::abs(progress[j]);
    const double di = std::abs(progress[i]);
    return dj < di || (dj == di && j < i);
  };

  Actions out(n, 0.0);
  for (int i = 0; i < n; ++i) {
    bool yield = false;
    if (!cleared(i) && progress[i] < stop_line) {
      for (int j = 0; j < n && !yield; ++j) {
        if (j == i || config.lanes[j].axis == config.lanes[i].axis || cleared(j)) continue;
        yield = ahead_of(j, i);
      }
    }
    double accel;
    if (!yield) {
      accel = config.rule_gain * (std::abs(config.desired_speeds[i]) - speed[i]);
    } else {
      const double remaining = stop_line - progress[i];
      if (speed[i] > 0.0 && remaining > 0.1) {
        accel = -speed[i] * speed[i] / (2.0 * remaining);
      } else {
        accel = config.rule_gain * (0.0 - speed[i]);
      }
    }
    out[i] = config.direction(i) * std::clamp(accel, -config.g, config.g);
  }
  return out;
}

Actions constant_speed_policy(const IntersectionState& state) {
  return Actions(state.size(), 0.0);
}

std::vector<std::vector<double>> sample_stratified(int n, const std::vector<Range>& ranges,
                                                   const std::vector<int>& strata,
                                                   std::uint64_t seed) {
  if (ranges.size() != strata.size() || ranges.empty()) {
    throw InvalidArgument("need one strata count per dimension");
  }
  if (n < 0) throw InvalidArgument("sample count must be >= 0");
  std::uint64_t total = 1;
  for (std::size_t d = 0; d < strata.size(); ++d) {
    if (strata[d] < 1) throw InvalidArgument("strata must be >= 1 in every dimension");
    if (!(ranges[d].lo <= ranges[d].hi)) throw InvalidArgument("range lo must be <= hi");
    if (total > (std::uint64_t{1} << 40)) throw InvalidArgument("too many strata combinations");
    total *= static_cast<std::uint64_t>(strata[d]);
  }
  if (static_cast<std::uint64_t>(n) > total) {
    throw InvalidArgument("requested " + std::to_string(n) + " samples but only " +
                          std::to_string(total) + " stratified combinations exist");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<std::vector<double>> draws(ranges.size());
  for (std::size_t d = 0; d < ranges.size(); ++d) {
    const double width = (ranges[d].hi - ranges[d].lo) / strata[d];
    for (int k = 0; k < strata[d]; ++k) draws[d].push_back(ranges[d].lo + (k + unif(rng)) * width);
  }
  // Floyd's algorithm for n distinct combination indices, then a shuffle.
  std::vector<std::uint64_t> picked;
  std::unordered_set<std::uint64_t> seen;
  for (std::uint64_t j = total - static_cast<std::uint64_t>(n); j < total; ++j) {
    const std::uint64_t t = std::uniform_int_distribution<std::uint64_t>(0, j)(rng);
    const std::uint64_t choice = seen.count(t) ? j : t;
    seen.insert(choice);
    picked.push_back(choice);
  }
  std::sort(picked.begin(), picked.end());
  std::shuffle(picked.begin(), picked.end(), rng);

  std::vector<std::vector<double>> out;
  out.reserve(picked.size());
  for (std::uint64_t index : picked) {
    std::vector<double> point(ranges.size());
    for (int d = static_cast<int>(ranges.size()) - 1; d >= 0; --d) {
      point[d] = draws[d][index % strata[d]];
      index /= strata[d];
    }
    out.push_back(std::move(point));
  }
  return out;
}

std::vector<Range> initial_state_ranges(const EnvConfig& config) {
  std::vector<Range> out;
  for (int i = 0; i < config.num_vehicles(); ++i) {
    const double dir = config.direction(i);
    const double speed = std::abs(config.desired_speeds[i]);
    const double p1 = -dir * config.spawn_max;
    const double p2 = -dir * config.spawn_min;
    out.push_back({std::min(p1, p2), std::max(p1, p2)});
    const double v1 = dir * speed * config.speed_min_fraction;
    const double v2 = dir * speed * config.speed_max_fraction;
    out.push_back({std::min(v1, v2), std::max(v1, v2)});
  }
  return out;
}

std::vector<IntersectionState> sample_initial_states(int n, const EnvConfig& config, int strata,
                                                     std::uint64_t seed) {
  const auto ranges = initial_state_ranges(config);
  const auto points =
      sample_stratified(n, ranges, std::vector<int>(ranges.size(), strata), seed);
  std::vector<IntersectionState> out;
  out.reserve(points.size());
  for (const auto& p : points) out.push_back(IntersectionState::from_flat(p));
  return out;
}

}  // namespace mpg::driving
