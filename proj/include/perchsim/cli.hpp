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

#ifndef PERCHSIM_CLI_HPP_
#define PERCHSIM_CLI_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>

namespace perchsim::cli {

enum class Subcommand { kStatics, kSelectEval, kPlan, kMission };

struct Options {
  Subcommand subcommand = Subcommand::kStatics;
  std::filesystem::path config;
  std::filesystem::path out_dir = "out";
  std::optional<std::uint64_t> seed;  // overrides the config seed
  bool strict = false;
  int verbosity = 0;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitPlanner = 3;
inline constexpr int kExitSelection = 4;
inline constexpr int kExitCapacity = 5;

// Runs one subcommand, writing artifacts under options.out_dir and
// diagnostics to `err`. Returns the process exit code.
int run(const Options& options, std::ostream& err);

int cmd_statics(const Options& options, std::ostream& err);
int cmd_select_eval(const Options& options, std::ostream& err);
int cmd_plan(const Options& options, std::ostream& err);
int cmd_mission(const Options& options, std::ostream& err);

}  // namespace perchsim::cli

#endif  // PERCHSIM_CLI_HPP_
