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

// OpenMP kernels against their serial twins.

#include <benchmark/benchmark.h>

#include <random>

#include "mpg/exact_evaluator.hpp"
#include "mpg/mpg_builder.hpp"
#include "mpg/serial_reference.hpp"
#include "mpg/study.hpp"

namespace {

using namespace mpg;

BuiltGame bench_game(int n_agents) {
  GeneratorSpec spec;
  spec.n_agents = n_agents;
  spec.local_states = 3;
  spec.local_actions = 3;
  spec.seed = 1;
  return generate_game(spec);
}

void BM_InducedTransition(benchmark::State& state) {
  const auto built = bench_game(static_cast<int>(state.range(0)));
  std::mt19937_64 rng(2);
  const auto policy = random_policy(built.game, rng);
  for (auto _ : state) benchmark::DoNotOptimize(induced_transition(built.game, policy));
}

void BM_InducedTransitionSerial(benchmark::State& state) {
  const auto built = bench_game(static_cast<int>(state.range(0)));
  std::mt19937_64 rng(2);
  const auto policy = random_policy(built.game, rng);
  for (auto _ : state) benchmark::DoNotOptimize(serial::induced_transition(built.game, policy));
}

void BM_PolicyGradient(benchmark::State& state) {
  const auto built = bench_game(static_cast<int>(state.range(0)));
  std::mt19937_64 rng(3);
  const auto policy = random_policy(built.game, rng);
  for (auto _ : state) benchmark::DoNotOptimize(exact_policy_gradient(built.game, policy, 0));
}

void BM_PolicyGradientSerial(benchmark::State& state) {
  const auto built = bench_game(static_cast<int>(state.range(0)));
  std::mt19937_64 rng(3);
  const auto policy = random_policy(built.game, rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(serial::policy_gradient(built.game, policy, built.game.rewards(0), 0));
  }
}

void BM_CertificateTrials(benchmark::State& state) {
  const auto built = bench_game(3);
  const auto trials = sample_deviations(built.game, static_cast<int>(state.range(0)), 4);
  for (auto _ : state) benchmark::DoNotOptimize(verify_mpg_trials(built.game, built.certificate.phi, trials));
}

void BM_CertificateTrialsSerial(benchmark::State& state) {
  const auto built = bench_game(3);
  const auto trials = sample_deviations(built.game, static_cast<int>(state.range(0)), 4);
  for (auto _ : state) {
    benchmark::DoNotOptimize(serial::verify_mpg_trials(built.game, built.certificate.phi, trials, 1e-8));
  }
}

void BM_BatchRolloutGradient(benchmark::State& state) {
  const driving::EnvConfig env;
  const auto net = driving::MlpPolicy::initialize(5);
  const auto batch = driving::sample_initial_states(static_cast<int>(state.range(0)), env, 2, 6);
  for (auto _ : state) benchmark::DoNotOptimize(driving::batch_objective_and_gradient(net, batch, env, {}));
}

void BM_BatchRolloutGradientSerial(benchmark::State& state) {
  const driving::EnvConfig env;
  const auto net = driving::MlpPolicy::initialize(5);
  const auto batch = driving::sample_initial_states(static_cast<int>(state.range(0)), env, 2, 6);
  for (auto _ : state) benchmark::DoNotOptimize(serial::batch_objective_and_gradient(net, batch, env, {}));
}

void BM_Study(benchmark::State& state) {
  const driving::EnvConfig env;
  const auto net = driving::MlpPolicy::initialize(7);
  for (auto _ : state) {
    benchmark::DoNotOptimize(driving::run_study(net, "bench", driving::Surrounding::kRule,
                                                static_cast<int>(state.range(0)), 8, env));
  }
}

void BM_StudySerial(benchmark::State& state) {
  const driving::EnvConfig env;
  const auto net = driving::MlpPolicy::initialize(7);
  for (auto _ : state) {
    benchmark::DoNotOptimize(serial::run_study(net, "bench", driving::Surrounding::kRule,
                                               static_cast<int>(state.range(0)), 8, env));
  }
}

BENCHMARK(BM_InducedTransition)->Arg(2)->Arg(3);
BENCHMARK(BM_InducedTransitionSerial)->Arg(2)->Arg(3);
BENCHMARK(BM_PolicyGradient)->Arg(2)->Arg(3);
BENCHMARK(BM_PolicyGradientSerial)->Arg(2)->Arg(3);
BENCHMARK(BM_CertificateTrials)->Arg(100);
BENCHMARK(BM_CertificateTrialsSerial)->Arg(100);
BENCHMARK(BM_BatchRolloutGradient)->Arg(16)->Arg(64);
BENCHMARK(BM_BatchRolloutGradientSerial)->Arg(16)->Arg(64);
BENCHMARK(BM_Study)->Arg(100);
BENCHMARK(BM_StudySerial)->Arg(100);

}  // namespace

BENCHMARK_MAIN();
