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

// mpg: command-line front end.
//
// Exit codes: 0 success/pass, 1 certified-fail, 2 input error,
// 3 non-convergence (or a numerical fault during driving training).

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <random>
#include <string>

#include "mpg/errors.hpp"
#include "mpg/gradient_learner.hpp"
#include "mpg/io.hpp"
#include "mpg/mpg_builder.hpp"
#include "mpg/neural_policy.hpp"
#include "mpg/study.hpp"

namespace fs = std::filesystem;
using mpg::io::json;

namespace {

constexpr int kExitPass = 0;
constexpr int kExitCertifiedFail = 1;
constexpr int kExitInput = 2;
constexpr int kExitNonConvergence = 3;

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = "out";
  std::optional<int> scenarios;
  std::optional<int> trials;
  std::optional<std::string> surrounding;
  std::vector<std::string> checkpoints;
};

struct Run {
  json config = json::object();
  fs::path base;  // directory of the config file, for relative paths

  fs::path resolve(const std::string& p) const {
    const fs::path path(p);
    return path.is_absolute() ? path : base / path;
  }
};

Run load_run(const Options& opt) {
  Run run;
  if (!opt.config.empty()) {
    run.config = mpg::io::read_json(opt.config);
    if (!run.config.is_object()) throw mpg::InvalidArgument("config must be a JSON object");
    run.base = fs::path(opt.config).parent_path();
  }
  return run;
}

template <typename T>
T pick(const std::optional<T>& flag, const json& config, const char* key, T fallback) {
  if (flag) return *flag;
  if (config.contains(key)) return config.at(key).get<T>();
  return fallback;
}

struct GameSource {
  mpg::MarkovGame game;
  std::optional<std::vector<double>> potential;
  json echo;
};

GameSource load_game(const Run& run) {
  const json& c = run.config;
  if (c.contains("game")) {
    const json& g = c.at("game");
    json doc = g.is_string() ? mpg::io::read_json(run.resolve(g.get<std::string>())) : g;
    auto loaded = mpg::io::game_from_json(doc);
    return {std::move(loaded.game), std::move(loaded.potential), g.is_string() ? g : json("inline")};
  }
  if (c.contains("generator")) {
    const mpg::GeneratorSpec spec = mpg::io::generator_from_json(c.at("generator"));
    auto built = mpg::generate_game(spec);
    return {std::move(built.game), std::move(built.certificate.phi),
            {{"generator", mpg::io::generator_to_json(spec)}}};
  }
  throw mpg::InvalidArgument("config needs a 'game' file or a 'generator' block");
}

void write_json(const fs::path& path, const json& j) {
  mpg::io::write_text_atomic(path, j.dump(2) + "\n");
}

int cmd_certify(const Options& opt) {
  const Run run = load_run(opt);
  GameSource src = load_game(run);
  if (!src.potential) throw mpg::InvalidArgument("game carries no 'potential' to certify");
  const std::uint64_t seed = pick<std::uint64_t>(opt.seed, run.config, "seed", 0);
  const int trials = pick<int>(opt.trials, run.config, "trials", 100);
  if (trials < 1) throw mpg::InvalidArgument("--trials must be >= 1");

  const mpg::PolicyClass policy_class =
      mpg::policy_class_from_string(run.config.value("policy_class", std::string("global")));

  mpg::PotentialCertificate cert =
      mpg::verify_mpg(src.game, *src.potential, trials, seed, 1e-8, policy_class);
  std::mt19937_64 rng(seed ^ 0x1D);
  const mpg::TabularPolicy probe = policy_class == mpg::PolicyClass::kLocal
                                       ? mpg::random_local_policy(src.game, rng)
                                       : mpg::random_policy(src.game, rng);
  const auto identity = mpg::potential_gradient_identity_check(src.game, *src.potential, probe,
                                                               1e-6, policy_class);
  const bool pass = cert.passed && identity.passed;

  json report = {{"source", src.echo},
                 {"seed", seed},
                 {"trials", trials},
                 {"passed", pass},
                 {"certificate", mpg::io::certificate_to_json(cert)},
                 {"gradient_identity", mpg::io::identity_to_json(identity)}};
  write_json(fs::path(opt.out) / "certificate.json", report);
  std::cout << std::setprecision(6) << "certify: " << (pass ? "PASS" : "FAIL")
            << "  policies=" << to_string(policy_class)
            << "  max_violation=" << cert.max_violation
            << "  max_state_violation=" << cert.max_state_violation
            << "  gradient_identity_max_diff=" << identity.max_diff << "\n";
  return pass ? kExitPass : kExitCertifiedFail;
}

int cmd_train_tabular(const Options& opt) {
  const Run run = load_run(opt);
  GameSource src = load_game(run);
  const mpg::LearnConfig config =
      mpg::io::learn_config_from_json(run.config.value("learn", json::object()));
  std::optional<std::span<const double>> phi;
  if (config.mode == mpg::LearnMode::kPotential) {
    if (!src.potential) throw mpg::InvalidArgument("potential mode needs a game with a 'potential'");
    phi = std::span<const double>(*src.potential);
  }
  const mpg::LearnTrace trace = mpg::train(src.game, phi, config);
  const auto exploit = mpg::exploitability(src.game, trace.final_policy);

  const fs::path out(opt.out);
  mpg::io::write_text_atomic(out / "trace.csv", mpg::io::trace_csv(trace));
  write_json(out / "policy.json", mpg::io::policy_to_json(trace.final_policy));
  write_json(out / "summary.json", {{"source", src.echo},
                                    {"learn", mpg::io::learn_config_to_json(config)},
                                    {"iterations", trace.records.size()},
                                    {"final_gap", trace.final_gap},
                                    {"converged", trace.converged},
                                    {"exploitability", exploit}});
  std::cout << std::setprecision(6) << "train-tabular: " << (trace.converged ? "converged" : "not converged")
            << "  iterations=" << trace.records.size() << "  final_gap=" << trace.final_gap
            << "  exploitability=";
  for (std::size_t i = 0; i < exploit.size(); ++i) std::cout << (i ? "," : "") << exploit[i];
  std::cout << "\n";
  return trace.converged ? kExitPass : kExitNonConvergence;
}

int cmd_train_driving(const Options& opt, mpg::driving::TrainMode mode) {
  const Run run = load_run(opt);
  const auto env = mpg::io::env_config_from_json(run.config.value("env", json::object()));
  const auto train = mpg::io::train_config_from_json(run.config.value("train", json::object()));
  const std::uint64_t seed = pick<std::uint64_t>(opt.seed, run.config, "seed", 0);
  const auto report = mode == mpg::driving::TrainMode::kMarl
                          ? mpg::driving::train_marl(env, train, seed)
                          : mpg::driving::train_single_agent(env, train, seed);

  const fs::path out(opt.out);
  mpg::io::save_checkpoint(out / "checkpoint.json", mpg::io::checkpoint_from_report(report));
  mpg::io::write_text_atomic(out / "train_log.csv", mpg::io::train_log_csv(report));
  write_json(out / "train_summary.json", mpg::io::train_summary_to_json(report));
  std::cout << std::setprecision(6) << to_string(mode) << ": episodes=" << report.episodes
            << "  stop=" << report.stop_reason
            << "  eval_objective " << report.initial_eval_objective << " -> "
            << report.final_eval_objective << "\n";
  const bool fault = report.stop_reason.rfind("numerical-fault", 0) == 0;
  return fault ? kExitNonConvergence : kExitPass;
}

std::string checkpoint_arg(const Options& opt, const Run& run, std::size_t index, const char* key) {
  if (opt.checkpoints.size() > index) return opt.checkpoints[index];
  if (run.config.contains(key)) return run.resolve(run.config.at(key).get<std::string>()).string();
  throw mpg::InvalidArgument(std::string("missing checkpoint (positional argument or '") + key + "')");
}

// A config 'env' block must agree with the environment the checkpoint was trained in.
void check_env(const Run& run, const mpg::io::Checkpoint& ckpt, const std::string& path) {
  if (!run.config.contains("env")) return;
  const auto env = mpg::io::env_config_from_json(run.config.at("env"), ckpt.env);
  if (mpg::io::env_config_to_json(env) != mpg::io::env_config_to_json(ckpt.env)) {
    throw mpg::InvalidArgument("config env does not match the env recorded in " + path);
  }
}

void print_row(const mpg::driving::StudyReport& r) {
  std::cout << std::setprecision(5) << r.policy_label << " vs " << to_string(r.row.surrounding)
            << ": collisions " << r.row.collisions << "/" << r.row.scenarios
            << "  avg ego speed " << r.row.avg_ego_speed << " m/s\n";
}

int cmd_study(const Options& opt) {
  const Run run = load_run(opt);
  const std::string path = checkpoint_arg(opt, run, 0, "checkpoint");
  const auto ckpt = mpg::io::load_checkpoint(path);
  check_env(run, ckpt, path);
  const auto surrounding = mpg::driving::surrounding_from_string(
      pick<std::string>(opt.surrounding, run.config, "surrounding", "ne"));
  const int n = pick<int>(opt.scenarios, run.config, "scenarios", 100);
  const std::uint64_t seed = pick<std::uint64_t>(opt.seed, run.config, "seed", 0);
  const auto report =
      mpg::driving::run_study(ckpt.net, to_string(ckpt.mode), surrounding, n, seed, ckpt.env);

  const fs::path out(opt.out);
  const std::string stem = "study_" + to_string(surrounding);
  mpg::io::write_text_atomic(out / (stem + ".csv"), mpg::io::study_csv(report));
  json summary = mpg::io::study_summary_to_json(report);
  summary["checkpoint"] = path;
  write_json(out / (stem + ".json"), summary);
  print_row(report);
  return kExitPass;
}

int cmd_compare(const Options& opt) {
  const Run run = load_run(opt);
  const std::string marl_path = checkpoint_arg(opt, run, 0, "marl_checkpoint");
  const std::string single_path = checkpoint_arg(opt, run, 1, "single_checkpoint");
  const auto marl = mpg::io::load_checkpoint(marl_path);
  const auto single = mpg::io::load_checkpoint(single_path);
  check_env(run, marl, marl_path);
  check_env(run, single, single_path);
  if (mpg::io::env_config_to_json(marl.env) != mpg::io::env_config_to_json(single.env)) {
    throw mpg::InvalidArgument("the two checkpoints were trained in different environments");
  }
  const int n = pick<int>(opt.scenarios, run.config, "scenarios", 100);
  const std::uint64_t seed = pick<std::uint64_t>(opt.seed, run.config, "seed", 0);
  const auto report = mpg::driving::run_compare(marl.net, single.net, n, seed, marl.env);

  const fs::path out(opt.out);
  for (const auto& row : report.grid) {
    for (const auto& cell : row) {
      mpg::io::write_text_atomic(
          out / ("compare_" + cell.policy_label + "_" + to_string(cell.row.surrounding) + ".csv"),
          mpg::io::study_csv(cell));
      print_row(cell);
    }
  }
  json summary = mpg::io::compare_to_json(report);
  summary["marl_checkpoint"] = marl_path;
  summary["single_checkpoint"] = single_path;
  write_json(out / "compare.json", summary);
  return kExitPass;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Markov potential game toolkit"};
  app.require_subcommand(1);
  Options opt;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opt.config, "JSON run configuration")->check(CLI::ExistingFile);
    sub->add_option("--seed", opt.seed, "master seed");
    sub->add_option("--out", opt.out, "output directory")->capture_default_str();
  };
  auto* certify = app.add_subcommand("certify", "verify the potential identity of a game");
  add_common(certify);
  certify->add_option("--trials", opt.trials, "random deviation trials (default 100)");
  auto* tabular = app.add_subcommand("train-tabular", "projected gradient play on a tabular game");
  add_common(tabular);
  auto* marl = app.add_subcommand("train-marl", "potential ascent for the intersection network");
  add_common(marl);
  auto* single = app.add_subcommand("train-single", "ego-only training against rule-based traffic");
  add_common(single);
  auto* study = app.add_subcommand("study", "scenario study of one checkpoint");
  add_common(study);
  study->add_option("checkpoint", opt.checkpoints, "checkpoint file")->expected(0, 1);
  study->add_option("--scenarios", opt.scenarios, "number of scenarios (default 100)");
  study->add_option("--surrounding", opt.surrounding, "ne|rule|constant")
      ->check(CLI::IsMember({"ne", "rule", "constant"}));
  auto* compare = app.add_subcommand("compare", "MARL vs single-agent grid over all surroundings");
  add_common(compare);
  compare->add_option("checkpoints", opt.checkpoints, "MARL and single-agent checkpoints")
      ->expected(0, 2);
  compare->add_option("--scenarios", opt.scenarios, "number of scenarios (default 100)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInput;
  }

  try {
    if (*certify) return cmd_certify(opt);
    if (*tabular) return cmd_train_tabular(opt);
    if (*marl) return cmd_train_driving(opt, mpg::driving::TrainMode::kMarl);
    if (*single) return cmd_train_driving(opt, mpg::driving::TrainMode::kSingleAgent);
    if (*study) return cmd_study(opt);
    if (*compare) return cmd_compare(opt);
  } catch (const mpg::InvalidArgument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const mpg::PreconditionFailed& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }
  return kExitInput;
}
