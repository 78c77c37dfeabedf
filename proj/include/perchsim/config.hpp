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

#ifndef PERCHSIM_CONFIG_HPP_
#define PERCHSIM_CONFIG_HPP_

// JSON run configuration. Every schema problem is reported as
// Errc::kConfigSchema with a "file:line: /json/pointer: message" text.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "perchsim/planner.hpp"
#include "perchsim/scene.hpp"
#include "perchsim/simctrl.hpp"
#include "perchsim/statics.hpp"
#include "perchsim/vision.hpp"

namespace perchsim::config {

struct StaticsRun {
  statics::MechanismSpec mechanism;
  double d_min = 0.0;
  double d_max = 0.0;
  int steps = 0;
};

struct SelectEvalRun {
  scene::SceneSpec scene;
  scene::CameraModel camera;
  vision::LocalizationParams params;
};

struct PlanRun {
  planner::BoundaryState start;
  planner::BoundaryState end;
  std::vector<Eigen::Vector3d> waypoints;
  std::optional<std::vector<double>> durations;  // allocated when absent
  double avg_speed = 1.0;
  double min_segment_duration = 0.5;
  double sample_rate = 100.0;  // Hz
};

struct MissionRun {
  simctrl::MissionConfig mission;
  statics::MechanismSpec mechanism;
};

struct RunConfig {
  std::filesystem::path path;
  std::uint64_t seed = 0;
};

RunConfig load_run(const std::filesystem::path& path);
StaticsRun load_statics(const std::filesystem::path& path);
SelectEvalRun load_select_eval(const std::filesystem::path& path);
PlanRun load_plan(const std::filesystem::path& path);
MissionRun load_mission(const std::filesystem::path& path);

// Maps every JSON pointer in `text` to the 1-based line where its value
// starts. Assumes `text` is syntactically valid JSON.
std::vector<std::pair<std::string, int>> locate_pointers(const std::string& text);

}  // namespace perchsim::config

#endif  // PERCHSIM_CONFIG_HPP_
