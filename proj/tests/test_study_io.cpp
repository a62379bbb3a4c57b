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

#include <filesystem>
#include <sstream>

#include "mpg/errors.hpp"
#include "mpg/io.hpp"
#include "mpg/study.hpp"
#include "test_support.hpp"

namespace mpg {
namespace {

namespace fs = std::filesystem;
using driving::EnvConfig;
using driving::MlpPolicy;
using driving::Surrounding;

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("mpgkit_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

io::Checkpoint sample_checkpoint() {
  io::Checkpoint c;
  c.net = MlpPolicy::initialize(1);
  c.adam = driving::AdamState::for_params(MlpPolicy::kNumParams);
  std::vector<double> g(MlpPolicy::kNumParams);
  for (std::size_t k = 0; k < g.size(); ++k) g[k] = std::sin(static_cast<double>(k));
  driving::adam_step(c.net.params(), g, c.adam, true);
  c.env.omega_joint = 37.5;
  c.train.max_episodes = 123;
  c.seed = 0xFFFFFFFFFFFFFFFFULL;
  c.mode = driving::TrainMode::kSingleAgent;
  return c;
}

TEST(Checkpoint, RoundTripIsExact) {
  const auto dir = scratch_dir("ckpt");
  const auto c = sample_checkpoint();
  io::save_checkpoint(dir / "nested" / "ckpt.json", c);
  const auto back = io::load_checkpoint(dir / "nested" / "ckpt.json");
  EXPECT_TRUE(std::equal(c.net.params().begin(), c.net.params().end(), back.net.params().begin()));
  EXPECT_EQ(back.adam.m, c.adam.m);
  EXPECT_EQ(back.adam.v, c.adam.v);
  EXPECT_EQ(back.adam.step, 1);
  EXPECT_EQ(back.seed, c.seed);
  EXPECT_EQ(back.mode, driving::TrainMode::kSingleAgent);
  EXPECT_EQ(back.env.omega_joint, 37.5);
  EXPECT_EQ(back.train.max_episodes, 123);
  EXPECT_EQ(io::env_config_to_json(back.env), io::env_config_to_json(c.env));
  EXPECT_EQ(back.net.input_scale(), c.net.input_scale());
  EXPECT_FALSE(fs::exists(dir / "nested" / "ckpt.json.tmp"));
}

TEST(Checkpoint, RejectsShapeMismatches) {
  const auto good = io::checkpoint_to_json(sample_checkpoint());
  EXPECT_NO_THROW(io::checkpoint_from_json(good));

  auto layers = good;
  layers["layers"][1] = {32, 64};
  EXPECT_THROW(io::checkpoint_from_json(layers), InvalidArgument);

  auto params = good;
  params["params"].erase(params["params"].size() - 1);
  EXPECT_THROW(io::checkpoint_from_json(params), InvalidArgument);

  auto moments = good;
  moments["adam"]["m"].erase(0);
  EXPECT_THROW(io::checkpoint_from_json(moments), InvalidArgument);

  auto vehicles = good;
  vehicles["env"]["lanes"].erase(3);
  vehicles["env"]["desired_speeds"].erase(3);
  EXPECT_THROW(io::checkpoint_from_json(vehicles), InvalidArgument);

  auto format = good;
  format["format"] = "something-else";
  EXPECT_THROW(io::checkpoint_from_json(format), InvalidArgument);

  auto version = good;
  version["version"] = io::kCheckpointVersion + 1;
  EXPECT_THROW(io::checkpoint_from_json(version), InvalidArgument);
}

TEST(Checkpoint, MalformedFileIsInputError) {
  const auto dir = scratch_dir("bad");
  io::write_text_atomic(dir / "x.json", "{ not json");
  EXPECT_THROW(io::load_checkpoint(dir / "x.json"), InvalidArgument);
}

TEST(EnvConfigJson, RoundTripAndUnknownKeys) {
  EnvConfig c;
  c.dt = 0.25;
  c.lanes[2] = {driving::Axis::kX, -3.0};
  const auto back = io::env_config_from_json(io::env_config_to_json(c));
  EXPECT_EQ(back.dt, 0.25);
  EXPECT_EQ(back.lanes[2].axis, driving::Axis::kX);
  EXPECT_EQ(back.lanes[2].lateral_offset, -3.0);
  EXPECT_THROW(io::env_config_from_json({{"omega3", 1.0}}), InvalidArgument);
  EXPECT_EQ(io::env_config_from_json({{"omega_joint", 1.0}}).omega_joint, 1.0);
}

TEST(GameJson, RoundTripPreservesGame) {
  const auto built = generate_game(testing::schedule_spec(Construction::kMixed, 5, 3));
  const auto j = io::game_to_json(built.game, &built.certificate.phi);
  const auto loaded = io::game_from_json(io::json::parse(j.dump()));
  const auto& a = built.game.spec();
  const auto& b = loaded.game.spec();
  EXPECT_EQ(a.transition, b.transition);
  EXPECT_EQ(a.rewards, b.rewards);
  EXPECT_EQ(a.rho, b.rho);
  EXPECT_EQ(a.gamma, b.gamma);
  EXPECT_EQ(a.local_state_counts, b.local_state_counts);
  ASSERT_TRUE(loaded.potential.has_value());
  EXPECT_EQ(*loaded.potential, built.certificate.phi);
}

TEST(GameJson, FactoredForm) {
  // Agent 0: one state, two actions. Agent 1: two states, one action.
  const auto j = io::json::parse(R"({
    "gamma": 0.5,
    "local_transitions": [[[[1.0], [1.0]]], [[[0.5, 0.5]], [[1.0, 0.0]]]],
    "rho_locals": [[1.0], [0.5, 0.5]],
    "rewards": [[[1, 2], [3, 4]], [[0, 0], [0, 0]]]
  })");
  const auto loaded = io::game_from_json(j);
  EXPECT_EQ(loaded.game.num_states(), 2);
  EXPECT_EQ(loaded.game.num_actions(0), 2);
  EXPECT_EQ(loaded.game.num_actions(1), 1);
  EXPECT_TRUE(loaded.game.is_factored());
  EXPECT_FALSE(loaded.potential.has_value());
}

TEST(GameJson, MalformedInputs) {
  EXPECT_THROW(io::game_from_json(io::json::array()), InvalidArgument);
  EXPECT_THROW(io::game_from_json({{"gamma", 0.9}}), InvalidArgument);
  const auto built = generate_game(GeneratorSpec{});
  auto j = io::game_to_json(built.game);
  j["rewards"].erase(0);
  EXPECT_THROW(io::game_from_json(j), InvalidArgument);
  j = io::game_to_json(built.game);
  j["transition"][0][0][0] = 2.0;
  EXPECT_THROW(io::game_from_json(j), InvalidArgument);
}

TEST(LearnJson, OverridesAndValidation) {
  const auto c = io::learn_config_from_json({{"eta", 0.5}, {"mode", "potential"}});
  EXPECT_EQ(c.eta, 0.5);
  EXPECT_EQ(c.mode, LearnMode::kPotential);
  EXPECT_EQ(io::learn_config_from_json(io::learn_config_to_json(c)).eta, 0.5);
  EXPECT_THROW(io::learn_config_from_json({{"mode", "sideways"}}), InvalidArgument);
}

TEST(TraceCsv, OneRowPerRecord) {
  const auto built = generate_game(GeneratorSpec{});
  LearnConfig config;
  config.max_iters = 7;
  const auto trace = train(built.game, std::nullopt, config);
  const std::string csv = io::trace_csv(trace);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), static_cast<long>(trace.records.size()) + 1);
  EXPECT_EQ(csv.rfind("iteration,", 0), 0u);
}

TEST(Study, StrataCoverScenarios) {
  EXPECT_EQ(driving::strata_for(100, 8), 2);
  EXPECT_EQ(driving::strata_for(256, 8), 2);
  EXPECT_EQ(driving::strata_for(257, 8), 3);
  EXPECT_EQ(driving::strata_for(1, 8), 2);
}

TEST(Study, FarApartScenarioIsSafe) {
  const EnvConfig env;
  driving::IntersectionState s;
  for (int i = 0; i < 4; ++i) s.vehicles.push_back({env.direction(i) * 1000.0 * (i + 1), env.desired_speeds[i]});
  const auto policy = driving::matchup_policy(MlpPolicy::initialize(2), Surrounding::kNe, env);
  const auto rec = driving::evaluate_scenario(policy, s, env, 0, 5);
  EXPECT_FALSE(rec.collision);
  EXPECT_EQ(rec.seed, 5u);
  EXPECT_EQ(rec.mean_speeds.size(), 4u);
}

TEST(Study, ReportInvariantsAndDeterminism) {
  const EnvConfig env;
  const auto net = MlpPolicy::initialize(3);
  const auto a = driving::run_study(net, "x", Surrounding::kRule, 30, 9, env);
  const auto b = driving::run_study(net, "x", Surrounding::kRule, 30, 9, env);
  EXPECT_EQ(a.row.scenarios, 30);
  EXPECT_LE(a.row.collisions, a.row.scenarios);
  EXPECT_EQ(a.row.collisions, b.row.collisions);
  EXPECT_EQ(a.row.avg_ego_speed, b.row.avg_ego_speed);
  double speed = 0.0;
  int hits = 0;
  for (const auto& rec : a.scenarios) {
    speed += rec.mean_speeds[env.ego];
    hits += rec.collision;
    if (rec.collision) {
      EXPECT_NE(rec.collision_with, env.ego);
    }
  }
  EXPECT_EQ(hits, a.row.collisions);
  EXPECT_DOUBLE_EQ(speed / 30.0, a.row.avg_ego_speed);
  EXPECT_EQ(io::study_summary_to_json(a).dump(), io::study_summary_to_json(b).dump());
  const std::string csv = io::study_csv(a);
  EXPECT_NE(csv.find("#"), std::string::npos);
  EXPECT_THROW(driving::run_study(net, "x", Surrounding::kRule, 0, 9, env), InvalidArgument);
}

TEST(Study, SurroundingNames) {
  for (auto s : {Surrounding::kNe, Surrounding::kRule, Surrounding::kConstant}) {
    EXPECT_EQ(driving::surrounding_from_string(driving::to_string(s)), s);
  }
  EXPECT_THROW(driving::surrounding_from_string("aggressive"), InvalidArgument);
}

TEST(Compare, GridShapeAndConsistency) {
  const EnvConfig env;
  const auto marl = MlpPolicy::initialize(4), single = MlpPolicy::initialize(5);
  const auto report = driving::run_compare(marl, single, 20, 11, env);
  ASSERT_EQ(report.grid.size(), 2u);
  int cells = 0;
  for (const auto& row : report.grid) cells += static_cast<int>(row.size());
  EXPECT_EQ(cells, 6);
  const auto standalone = driving::run_study(marl, "marl", Surrounding::kNe, 20, 11, env);
  EXPECT_EQ(report.grid[0][0].row.collisions, standalone.row.collisions);
  EXPECT_EQ(report.grid[0][0].row.avg_ego_speed, standalone.row.avg_ego_speed);
  EXPECT_EQ(io::study_csv(report.grid[0][0]), io::study_csv(standalone));
  // Shared scenarios across cells.
  for (const auto& row : report.grid)
    for (const auto& cell : row)
      for (int k = 0; k < 20; ++k)
        EXPECT_EQ(cell.scenarios[k].initial.flatten(), standalone.scenarios[k].initial.flatten());
  const auto j = io::compare_to_json(report);
  EXPECT_EQ(j.dump(), io::compare_to_json(driving::run_compare(marl, single, 20, 11, env)).dump());
}

}  // namespace
}  // namespace mpg
