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

#ifndef MPG_IO_HPP_
#define MPG_IO_HPP_

// JSON and CSV persistence for games, certificates, traces, configs,
// checkpoints and study reports.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mpg/gradient_learner.hpp"
#include "mpg/intersection_env.hpp"
#include "mpg/mpg_builder.hpp"
#include "mpg/neural_policy.hpp"
#include "mpg/study.hpp"
#include "mpg/tabular_game.hpp"

namespace mpg::io {

using json = nlohmann::json;

inline constexpr int kCheckpointVersion = 1;

// Writes to a sibling temp file, then renames over `path`.
void write_text_atomic(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);
json read_json(const std::filesystem::path& path);

// Game files. Dynamics come either as a full "transition" [s][a][s'] with
// "rho", or as per-agent "local_transitions" [s_i][a_i][s_i'] with
// "rho_locals". "rewards" is [agent][s][a]; "potential" [s][a] is optional.
struct LoadedGame {
  MarkovGame game;
  std::optional<std::vector<double>> potential;
};
LoadedGame game_from_json(const json& j);
json game_to_json(const MarkovGame& game, const std::vector<double>* potential = nullptr);

GeneratorSpec generator_from_json(const json& j);
json generator_to_json(const GeneratorSpec& spec);

json certificate_to_json(const PotentialCertificate& cert);
json identity_to_json(const GradientIdentityReport& report);

LearnConfig learn_config_from_json(const json& j, LearnConfig base = {});
json learn_config_to_json(const LearnConfig& config);
std::string trace_csv(const LearnTrace& trace);
json policy_to_json(const TabularPolicy& policy);

// Missing keys keep the values of `base`.
driving::EnvConfig env_config_from_json(const json& j, driving::EnvConfig base = {});
json env_config_to_json(const driving::EnvConfig& config);
driving::TrainConfig train_config_from_json(const json& j, driving::TrainConfig base = {});
json train_config_to_json(const driving::TrainConfig& config);

struct Checkpoint {
  driving::TrainMode mode = driving::TrainMode::kMarl;
  driving::MlpPolicy net;
  driving::AdamState adam;
  driving::EnvConfig env;
  driving::TrainConfig train;
  std::uint64_t seed = 0;
};
json checkpoint_to_json(const Checkpoint& ckpt);
// Throws InvalidArgument on version or layer-shape mismatch.
Checkpoint checkpoint_from_json(const json& j);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);
Checkpoint checkpoint_from_report(const driving::TrainReport& report);

std::string train_log_csv(const driving::TrainReport& report);
json train_summary_to_json(const driving::TrainReport& report);

std::string study_csv(const driving::StudyReport& report);
json study_summary_to_json(const driving::StudyReport& report);
json compare_to_json(const driving::ComparisonReport& report);

}  // namespace mpg::io

#endif  // MPG_IO_HPP_
