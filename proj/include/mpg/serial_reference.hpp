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

#ifndef MPG_SERIAL_REFERENCE_HPP_
#define MPG_SERIAL_REFERENCE_HPP_

// Single-threaded reference versions of the OpenMP kernels. Kept for the
// parallel-vs-serial agreement tests and the benchmark target.

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "mpg/exact_evaluator.hpp"
#include "mpg/mpg_builder.hpp"
#include "mpg/neural_policy.hpp"
#include "mpg/study.hpp"
#include "mpg/tabular_game.hpp"

namespace mpg::serial {

Eigen::MatrixXd induced_transition(const MarkovGame& game, const TabularPolicy& policy);

PolicyGradient policy_gradient(const MarkovGame& game, const TabularPolicy& policy,
                               std::span<const double> reward, int agent);

PotentialCertificate verify_mpg_trials(const MarkovGame& game, std::span<const double> phi,
                                       const std::vector<DeviationSpec>& trials, double tol);

driving::RolloutGradient batch_objective_and_gradient(
    const driving::MlpPolicy& net, const std::vector<driving::IntersectionState>& batch,
    const driving::EnvConfig& config, const driving::RolloutObjective& objective,
    const driving::ControlSpec& control = {});

driving::StudyReport run_study(const driving::MlpPolicy& net, const std::string& label,
                               driving::Surrounding surrounding, int n, std::uint64_t seed,
                               const driving::EnvConfig& env);

}  // namespace mpg::serial

#endif  // MPG_SERIAL_REFERENCE_HPP_
