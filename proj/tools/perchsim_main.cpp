// Copyright 2026 The perchsim Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cstdint>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "perchsim/cli.hpp"

int main(int argc, char** argv) {
  using perchsim::cli::Subcommand;
  CLI::App app{"perchsim: perching gripper statics, target selection, planning and missions"};
  app.require_subcommand(1);

  const std::map<std::string, std::pair<Subcommand, std::string>> commands = {
      {"statics", {Subcommand::kStatics, "capacity sweep and crossover diameter"}},
      {"select-eval", {Subcommand::kSelectEval, "perch-point localization error vs distance"}},
      {"plan", {Subcommand::kPlan, "minimum-snap trajectory"}},
      {"mission", {Subcommand::kMission, "full perching mission simulation"}},
  };
  std::map<CLI::App*, Subcommand> lookup;
  for (const auto& [name, info] : commands) {
    CLI::App* sub = app.add_subcommand(name, info.second);
    sub->add_option("--config", "JSON run configuration")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", "output directory")->default_str("out");
    sub->add_option("--seed", "random seed (overrides the config)")
        ->check(CLI::NonNegativeNumber);
    sub->add_flag("--strict", "treat planner warnings as errors");
    sub->add_flag("-v,--verbose", "more diagnostics on stderr");
    lookup[sub] = info.first;
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : perchsim::cli::kExitConfig;
  }

  CLI::App* chosen = app.get_subcommands().front();
  perchsim::cli::Options options;
  options.subcommand = lookup.at(chosen);
  options.config = chosen->get_option("--config")->as<std::string>();
  if (chosen->count("--out") > 0) options.out_dir = chosen->get_option("--out")->as<std::string>();
  if (chosen->count("--seed") > 0) {
    options.seed = chosen->get_option("--seed")->as<std::uint64_t>();
  }
  options.strict = chosen->count("--strict") > 0;
  options.verbosity = static_cast<int>(chosen->count("-v"));
  return perchsim::cli::run(options, std::cerr);
}
