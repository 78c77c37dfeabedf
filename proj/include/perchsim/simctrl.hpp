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

#ifndef PERCHSIM_SIMCTRL_HPP_
#define PERCHSIM_SIMCTRL_HPP_

// Point-mass quadrotor, PID position loop and the perching mission.

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "perchsim/planner.hpp"
#include "perchsim/scene.hpp"
#include "perchsim/statics.hpp"
#include "perchsim/vision.hpp"

namespace perchsim::simctrl {

inline constexpr double kGravity = 9.80665;

struct QuadState {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  Eigen::Vector3d velocity = Eigen::Vector3d::Zero();
  double time = 0.0;
};

// Semi-implicit Euler: v += a dt, then p += v dt.
QuadState step_dynamics(const QuadState& state, const Eigen::Vector3d& accel,
                        double dt);

struct PidGains {
  Eigen::Vector3d kp = Eigen::Vector3d::Zero();
  Eigen::Vector3d ki = Eigen::Vector3d::Zero();
  Eigen::Vector3d kd = Eigen::Vector3d::Zero();
  double integrator_clamp = 1.0;              // m s, per axis
  double output_clamp = 0.5 * kGravity;       // m/s^2, per axis

  void validate() const;
};

struct PidMemory {
  Eigen::Vector3d integral = Eigen::Vector3d::Zero();
};

struct Reference {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  Eigen::Vector3d velocity = Eigen::Vector3d::Zero();
  Eigen::Vector3d acceleration = Eigen::Vector3d::Zero();
};

// a = a_ref + kp e + ki int(e) + kd e_v, per axis. The integral advances by
// e * dt before use and both it and the output are clamped.
Eigen::Vector3d pid_track(const Reference& ref, const QuadState& state,
                          const PidGains& gains, PidMemory& memory, double dt);

enum class GripperState { kOpen, kClosed };

struct GripperEvent {
  double time;
  GripperState state;  // state after the event
  double cumulative_energy;
};

// Opening pulls the tendon and costs energy; the closed state is the
// passive equilibrium and costs nothing to enter or hold.
class GripperModel {
 public:
  explicit GripperModel(double energy_per_open,
                        GripperState initial = GripperState::kClosed);

  void open(double time);
  void close(double time);

  GripperState state() const { return state_; }
  double cumulative_energy() const { return energy_; }
  double energy_per_open() const { return energy_per_open_; }
  const std::vector<GripperEvent>& events() const { return events_; }

 private:
  double energy_per_open_;
  GripperState state_;
  double energy_ = 0.0;
  std::vector<GripperEvent> events_;
};

enum class Stage { kTakeOff, kPlan, kTrack, kPerch, kResume };
std::string to_string(Stage stage);
std::string to_string(GripperState state);

enum class Outcome {
  kPerched,
  kSelectionFailed,
  kCapacityExceeded,
  kTriggerMissed,
  kPlannerFailed,
};
std::string to_string(Outcome outcome);

struct MissionConfig {
  scene::SceneSpec scene;
  scene::CameraModel camera;  // intrinsics; the pose is set in flight

  double hover_height = 1.5;         // m
  double selection_distance = 4.0;   // m from the trunk axis
  double approach_azimuth = 3.141592653589793;  // trunk -> hover direction
  double takeoff_duration = 4.0;     // s
  double hover_settle = 2.0;         // s
  double plan_hold = 0.5;            // s spent hovering per selection attempt
  int max_selection_retries = 3;

  double mask_flip_rate = 0.0;
  int min_pixels = 20;
  vision::SelectionParams selection;

  double engagement_offset = 0.05;   // approach point below the perch point, m
  double pre_approach_drop = 0.3;    // pre-approach point below the approach point, m
  double avg_speed = 1.0;            // m/s
  double approach_speed = 0.1;       // m/s on the final climb to the branch
  double min_segment_duration = 0.5; // s
  double trigger_radius = 0.05;      // m
  double track_timeout = 3.0;        // s allowed after the trajectory ends

  double perch_duration = 60.0;      // s
  bool resume = true;
  double resume_descent = 1.0;       // m

  double control_rate = 200.0;       // Hz
  double sim_step = 1e-3;            // s
  double actuator_lag = 0.06;        // s, first-order response of the plant
  double position_noise = 0.0;       // m, std of measurement noise
  PidGains gains;
  double gripper_energy_per_open = 1.0;  // J

  void validate() const;
};

struct LogRow {
  double t;
  Stage stage;
  Eigen::Vector3d ref;
  Eigen::Vector3d act;
};

struct StageEvent {
  double t;
  Stage stage;
};

struct MissionLog {
  std::vector<LogRow> rows;
  std::vector<StageEvent> stages;
  std::vector<GripperEvent> gripper_events;
  Outcome outcome = Outcome::kSelectionFailed;
  std::string detail;

  int selection_attempts = 0;
  std::optional<vision::PerchPoint> perch_point;
  std::optional<planner::Trajectory> trajectory;
  std::optional<double> branch_diameter;
  std::optional<double> capacity;
  std::optional<statics::Regime> regime;
  double final_energy = 0.0;
};

MissionLog run_mission(const MissionConfig& config,
                       const statics::MechanismSpec& mech, std::uint64_t seed);

struct TrackingSummary {
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();     // per-axis |ref - act|
  Eigen::Vector3d std_dev = Eigen::Vector3d::Zero();  // sample std
  double mean_3d = 0.0;
  double std_3d = 0.0;
  int samples = 0;
};

// Statistics over Track-stage rows; throws kInsufficientData below 2 rows.
TrackingSummary summarize(const MissionLog& log);

// Header: t_s,stage,ref_x_m,ref_y_m,ref_z_m,act_x_m,act_y_m,act_z_m
void write_log_csv(const MissionLog& log, std::ostream& out);
std::string summary_json(const MissionLog& log);
std::string gripper_events_json(const MissionLog& log);

int exit_code(Outcome outcome);

}  // namespace perchsim::simctrl

#endif  // PERCHSIM_SIMCTRL_HPP_
