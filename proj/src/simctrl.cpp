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

#include "perchsim/simctrl.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <json.hpp>

#include "perchsim/error.hpp"
#include "perchsim/format.hpp"
#include "perchsim/rng.hpp"

namespace perchsim::simctrl {
namespace {

using Eigen::Vector3d;
using Json = nlohmann::ordered_json;

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(Errc::kInvalidArgument, what);
}

double distance_to_axis(const scene::Cylinder& c, const Vector3d& p) {
  const double s = std::clamp((p - c.origin).dot(c.direction), 0.0, c.length);
  return (p - c.point_at(s)).norm();
}

Vector3d axis_point_at_height(const scene::Cylinder& trunk, double z) {
  if (std::abs(trunk.direction.z()) < 1e-12) return trunk.origin;
  return trunk.point_at((z - trunk.origin.z()) / trunk.direction.z());
}

Json vec_json(const Vector3d& v) { return Json::array({v.x(), v.y(), v.z()}); }

Json axes_json(const Vector3d& v, double norm) {
  Json j;
  j["x"] = v.x();
  j["y"] = v.y();
  j["z"] = v.z();
  j["3d"] = norm;
  return j;
}

class Flight {
 public:
  Flight(const MissionConfig& cfg, std::uint64_t seed, MissionLog& log)
      : cfg_(cfg), log_(log), noise_(seed ^ 0x9e3779b97f4a7c15ULL) {
    dt_ctrl_ = 1.0 / cfg.control_rate;
    substeps_ = std::max(1L, std::lround(dt_ctrl_ / cfg.sim_step));
    dt_sim_ = dt_ctrl_ / static_cast<double>(substeps_);
    lag_alpha_ = cfg.actuator_lag > 0.0 ? -std::expm1(-dt_sim_ / cfg.actuator_lag) : 1.0;
  }

  double now() const { return static_cast<double>(tick_) * dt_ctrl_; }
  const QuadState& state() const { return state_; }
  void place(const Vector3d& p) {
    state_.position = p;
    state_.velocity.setZero();
  }

  void enter(Stage s) { log_.stages.push_back({now(), s}); }

  void control_step(const Reference& ref, Stage stage) {
    QuadState measured = state_;
    if (cfg_.position_noise > 0.0) {
      for (int i = 0; i < 3; ++i) measured.position[i] += cfg_.position_noise * noise_.normal();
    }
    const Vector3d cmd = pid_track(ref, measured, cfg_.gains, memory_, dt_ctrl_);
    for (long s = 0; s < substeps_; ++s) {
      applied_ += lag_alpha_ * (cmd - applied_);
      state_ = step_dynamics(state_, applied_, dt_sim_);
    }
    ++tick_;
    state_.time = now();
    log_.rows.push_back({now(), stage, ref.position, state_.position});
  }

  void hold(const Vector3d& p, double duration, Stage stage) {
    Reference ref;
    ref.position = p;
    const long ticks = std::lround(duration / dt_ctrl_);
    for (long i = 0; i < ticks; ++i) control_step(ref, stage);
  }

  // Motors off, state pinned in place.
  void freeze(double duration, Stage stage) {
    state_.velocity.setZero();
    applied_.setZero();
    memory_ = PidMemory{};
    const long ticks = std::lround(duration / dt_ctrl_);
    for (long i = 0; i < ticks; ++i) {
      ++tick_;
      state_.time = now();
      log_.rows.push_back({now(), stage, state_.position, state_.position});
    }
  }

  // Follows `traj`; with a target, returns once within `radius` of it or
  // false after the trajectory end plus `timeout`.
  bool follow(const planner::Trajectory& traj, Stage stage,
              const std::optional<Vector3d>& target, double radius, double timeout) {
    const double total = traj.total_duration();
    const long end_tick = std::lround(total / dt_ctrl_);
    const long last_tick = target ? end_tick + std::lround(timeout / dt_ctrl_) : end_tick;
    for (long k = 1; k <= last_tick; ++k) {
      const double t = static_cast<double>(k) * dt_ctrl_;
      Reference ref;
      if (t < total) {
        ref.position = planner::evaluate(traj, t, 0);
        ref.velocity = planner::evaluate(traj, t, 1);
        ref.acceleration = planner::evaluate(traj, t, 2);
      } else {
        ref.position = planner::evaluate(traj, total, 0);
      }
      control_step(ref, stage);
      if (target && (state_.position - *target).norm() <= radius) return true;
    }
    return !target;
  }

  void reset_controller() { memory_ = PidMemory{}; }

 private:
  const MissionConfig& cfg_;
  MissionLog& log_;
  Rng noise_;
  QuadState state_;
  Vector3d applied_ = Vector3d::Zero();
  PidMemory memory_;
  long tick_ = 0;
  long substeps_ = 1;
  double dt_ctrl_ = 0.0;
  double dt_sim_ = 0.0;
  double lag_alpha_ = 1.0;
};

planner::Trajectory single(const Vector3d& a, const Vector3d& b, double duration) {
  planner::Trajectory t;
  t.segments.push_back(planner::plan_single(planner::BoundaryState::at_rest(a),
                                            planner::BoundaryState::at_rest(b), duration));
  t.waypoints = {a, b};
  return t;
}

}  // namespace

QuadState step_dynamics(const QuadState& state, const Vector3d& accel, double dt) {
  if (!(dt > 0.0)) throw Error(Errc::kInvalidArgument, "dt must be > 0");
  QuadState next = state;
  next.velocity += accel * dt;
  next.position += next.velocity * dt;
  next.time += dt;
  return next;
}

void PidGains::validate() const {
  require((kp.array() >= 0).all() && (ki.array() >= 0).all() && (kd.array() >= 0).all(),
          "PID gains must be >= 0");
  require(integrator_clamp > 0.0, "integrator_clamp must be > 0");
  require(output_clamp > 0.0, "output_clamp must be > 0");
}

Vector3d pid_track(const Reference& ref, const QuadState& state,
                   const PidGains& gains, PidMemory& memory, double dt) {
  const Vector3d e = ref.position - state.position;
  const Vector3d ev = ref.velocity - state.velocity;
  memory.integral = (memory.integral + e * dt)
                        .cwiseMax(-gains.integrator_clamp)
                        .cwiseMin(gains.integrator_clamp);
  const Vector3d a = ref.acceleration + gains.kp.cwiseProduct(e) +
                     gains.ki.cwiseProduct(memory.integral) + gains.kd.cwiseProduct(ev);
  return a.cwiseMax(-gains.output_clamp).cwiseMin(gains.output_clamp);
}

GripperModel::GripperModel(double energy_per_open, GripperState initial)
    : energy_per_open_(energy_per_open), state_(initial) {
  require(energy_per_open >= 0.0, "gripper energy per open must be >= 0");
}

void GripperModel::open(double time) {
  if (state_ == GripperState::kOpen) return;
  state_ = GripperState::kOpen;
  energy_ += energy_per_open_;
  events_.push_back({time, state_, energy_});
}

void GripperModel::close(double time) {
  if (state_ == GripperState::kClosed) return;
  state_ = GripperState::kClosed;
  events_.push_back({time, state_, energy_});
}

std::string to_string(Stage stage) {
  switch (stage) {
    case Stage::kTakeOff: return "TakeOff";
    case Stage::kPlan: return "Plan";
    case Stage::kTrack: return "Track";
    case Stage::kPerch: return "Perch";
    case Stage::kResume: return "Resume";
  }
  return "?";
}

std::string to_string(GripperState state) {
  return state == GripperState::kOpen ? "Open" : "Closed";
}

std::string to_string(Outcome outcome) {
  switch (outcome) {
    case Outcome::kPerched: return "Perched";
    case Outcome::kSelectionFailed: return "SelectionFailed";
    case Outcome::kCapacityExceeded: return "CapacityExceeded";
    case Outcome::kTriggerMissed: return "TriggerMissed";
    case Outcome::kPlannerFailed: return "PlannerFailed";
  }
  return "?";
}

int exit_code(Outcome outcome) {
  switch (outcome) {
    case Outcome::kPerched: return 0;
    case Outcome::kTriggerMissed:
    case Outcome::kPlannerFailed: return 3;
    case Outcome::kSelectionFailed: return 4;
    case Outcome::kCapacityExceeded: return 5;
  }
  return 3;
}

void MissionConfig::validate() const {
  scene.validate();
  camera.validate();
  gains.validate();
  require(hover_height > 0.0, "hover_height must be > 0");
  require(selection_distance > 0.0, "selection_distance must be > 0");
  require(takeoff_duration > 0.0, "takeoff_duration must be > 0");
  require(hover_settle >= 0.0 && plan_hold >= 0.0, "hold times must be >= 0");
  require(max_selection_retries >= 0, "max_selection_retries must be >= 0");
  require(mask_flip_rate >= 0.0 && mask_flip_rate < 0.5, "mask_flip_rate must be in [0, 0.5)");
  require(min_pixels >= 1, "min_pixels must be >= 1");
  require(engagement_offset >= 0.0, "engagement_offset must be >= 0");
  require(pre_approach_drop > 0.0, "pre_approach_drop must be > 0");
  require(avg_speed > 0.0 && approach_speed > 0.0 && min_segment_duration > 0.0,
          "speeds and min_segment_duration must be > 0");
  require(trigger_radius > 0.0, "trigger_radius must be > 0");
  require(track_timeout >= 0.0 && perch_duration >= 0.0, "durations must be >= 0");
  require(resume_descent > 0.0, "resume_descent must be > 0");
  require(control_rate > 0.0, "control_rate must be > 0");
  require(sim_step > 0.0 && sim_step < 1.0 / control_rate, "sim_step must be in (0, 1/control_rate)");
  const double ratio = 1.0 / (control_rate * sim_step);
  require(std::abs(ratio - std::round(ratio)) < 1e-6,
          "control period must be a whole number of sim steps");
  require(actuator_lag >= 0.0 && position_noise >= 0.0, "actuator_lag and position_noise must be >= 0");
  require(gripper_energy_per_open >= 0.0, "gripper_energy_per_open must be >= 0");
}

MissionLog run_mission(const MissionConfig& cfg, const statics::MechanismSpec& mech,
                       std::uint64_t seed) {
  cfg.validate();
  mech.validate();
  MissionLog log;
  Flight flight(cfg, seed, log);
  GripperModel gripper(cfg.gripper_energy_per_open);
  auto finish = [&](Outcome outcome, std::string detail) {
    log.outcome = outcome;
    log.detail = std::move(detail);
    log.gripper_events = gripper.events();
    log.final_energy = gripper.cumulative_energy();
    return log;
  };

  const Vector3d hover =
      vision::placed_camera(cfg.scene, cfg.camera, cfg.selection_distance,
                            cfg.hover_height, cfg.approach_azimuth)
          .centre();
  const Vector3d ground(hover.x(), hover.y(), 0.0);
  flight.place(ground);

  flight.enter(Stage::kTakeOff);
  flight.follow(single(ground, hover, cfg.takeoff_duration), Stage::kTakeOff,
                std::nullopt, 0.0, 0.0);
  flight.hold(hover, cfg.hover_settle, Stage::kTakeOff);

  std::optional<vision::PerchPoint> perch;
  std::string last_failure;
  for (int attempt = 0; attempt <= cfg.max_selection_retries && !perch; ++attempt) {
    flight.enter(Stage::kPlan);
    flight.hold(hover, cfg.plan_hold, Stage::kPlan);
    log.selection_attempts = attempt + 1;
    const Vector3d eye = flight.state().position;
    scene::CameraModel cam = cfg.camera;
    cam.pose = scene::CameraPose::look_at(eye, axis_point_at_height(cfg.scene.trunk, eye.z()));
    const scene::RenderedView view = scene::corrupt_mask(
        scene::render(cfg.scene, cam), cfg.mask_flip_rate,
        seed + static_cast<std::uint64_t>(attempt));
    const auto blobs = vision::extract_components(view, cfg.min_pixels);
    try {
      perch = vision::select_perch_point(blobs, view, cam, cfg.selection);
    } catch (const Error& e) {
      if (e.code() != Errc::kNoTrunkDetected && e.code() != Errc::kNoBranchDetected) throw;
      last_failure = e.what();
    }
  }
  if (!perch) {
    return finish(Outcome::kSelectionFailed,
                  "selection failed after " + std::to_string(log.selection_attempts) +
                      " attempts: " + last_failure);
  }
  log.perch_point = perch;
  gripper.open(flight.now());

  const Vector3d approach = perch->position - Vector3d(0.0, 0.0, cfg.engagement_offset);
  const Vector3d pre = approach - Vector3d(0.0, 0.0, cfg.pre_approach_drop);
  try {
    const std::vector<double> durations = {
        planner::allocate_times({hover, pre}, cfg.avg_speed, cfg.min_segment_duration)[0],
        planner::allocate_times({pre, approach}, cfg.approach_speed, cfg.min_segment_duration)[0]};
    log.trajectory = planner::plan_waypoints(planner::BoundaryState::at_rest(hover),
                                             planner::BoundaryState::at_rest(approach), {pre},
                                             durations);
  } catch (const Error& e) {
    return finish(Outcome::kPlannerFailed, e.what());
  }

  flight.enter(Stage::kTrack);
  if (!flight.follow(*log.trajectory, Stage::kTrack, approach, cfg.trigger_radius,
                     cfg.track_timeout)) {
    return finish(Outcome::kTriggerMissed, "perch trigger radius never reached");
  }

  flight.enter(Stage::kPerch);
  gripper.close(flight.now());
  const scene::Cylinder* branch = nullptr;
  double best = std::numeric_limits<double>::infinity();
  for (const scene::Cylinder& b : cfg.scene.branches) {
    const double d = distance_to_axis(b, perch->position);
    if (d < best) {
      best = d;
      branch = &b;
    }
  }
  log.branch_diameter = 2.0 * branch->radius;
  std::string grasp_note;
  bool holds = false;
  try {
    const statics::GraspAnalysis g =
        statics::analyze_grasp(mech, {*log.branch_diameter, mech.platform_weight});
    log.capacity = g.capacity;
    log.regime = g.regime;
    holds = g.holds;
    if (!holds) grasp_note = "capacity below platform weight";
  } catch (const Error& e) {
    if (e.code() != Errc::kBelowRange && e.code() != Errc::kAboveRange &&
        e.code() != Errc::kNoContactConfiguration && e.code() != Errc::kNegativeNormalForce) {
      throw;
    }
    log.capacity = 0.0;
    grasp_note = std::string(to_string(e.code())) + ": " + e.what();
  }
  if (!holds) return finish(Outcome::kCapacityExceeded, grasp_note);

  flight.freeze(cfg.perch_duration, Stage::kPerch);

  if (cfg.resume) {
    flight.enter(Stage::kResume);
    gripper.open(flight.now());
    flight.reset_controller();
    const Vector3d from = flight.state().position;
    const Vector3d to = from - Vector3d(0.0, 0.0, cfg.resume_descent);
    const double duration =
        planner::allocate_times({from, to}, cfg.avg_speed, cfg.min_segment_duration)[0];
    flight.follow(single(from, to, duration), Stage::kResume, std::nullopt, 0.0, 0.0);
  }
  return finish(Outcome::kPerched, "");
}

TrackingSummary summarize(const MissionLog& log) {
  std::vector<Vector3d> errors;
  for (const LogRow& r : log.rows) {
    if (r.stage == Stage::kTrack) errors.push_back((r.ref - r.act).cwiseAbs());
  }
  if (errors.size() < 2) {
    throw Error(Errc::kInsufficientData, "need at least two tracking samples");
  }
  const double n = static_cast<double>(errors.size());
  TrackingSummary s;
  s.samples = static_cast<int>(errors.size());
  for (const Vector3d& e : errors) {
    s.mean += e;
    s.mean_3d += e.norm();
  }
  s.mean /= n;
  s.mean_3d /= n;
  Vector3d ss = Vector3d::Zero();
  double ss3 = 0.0;
  for (const Vector3d& e : errors) {
    ss += (e - s.mean).cwiseAbs2();
    ss3 += (e.norm() - s.mean_3d) * (e.norm() - s.mean_3d);
  }
  s.std_dev = (ss / (n - 1.0)).cwiseSqrt();
  s.std_3d = std::sqrt(ss3 / (n - 1.0));
  return s;
}

void write_log_csv(const MissionLog& log, std::ostream& out) {
  out << "t_s,stage,ref_x_m,ref_y_m,ref_z_m,act_x_m,act_y_m,act_z_m\n";
  for (const LogRow& r : log.rows) {
    out << format_number(r.t) << ',' << to_string(r.stage);
    for (int i = 0; i < 3; ++i) out << ',' << format_number(r.ref[i]);
    for (int i = 0; i < 3; ++i) out << ',' << format_number(r.act[i]);
    out << '\n';
  }
}

std::string summary_json(const MissionLog& log) {
  Json j;
  j["outcome"] = to_string(log.outcome);
  j["detail"] = log.detail;
  j["selection_attempts"] = log.selection_attempts;
  j["perch_point_m"] = log.perch_point ? vec_json(log.perch_point->position) : Json();
  j["branch_diameter_m"] = log.branch_diameter ? Json(*log.branch_diameter) : Json();
  j["capacity_N"] = log.capacity ? Json(*log.capacity) : Json();
  j["regime"] = log.regime ? Json(statics::to_string(*log.regime)) : Json();
  j["trajectory_durations_s"] = log.trajectory ? Json(log.trajectory->durations()) : Json();
  try {
    const TrackingSummary s = summarize(log);
    Json t;
    t["samples"] = s.samples;
    t["mean_error_m"] = axes_json(s.mean, s.mean_3d);
    t["std_error_m"] = axes_json(s.std_dev, s.std_3d);
    j["tracking"] = t;
  } catch (const Error&) {
    j["tracking"] = Json();
  }
  Json stages = Json::array();
  for (const StageEvent& e : log.stages) {
    stages.push_back({{"t", e.t}, {"stage", to_string(e.stage)}});
  }
  j["stages"] = stages;
  j["gripper_energy_J"] = log.final_energy;
  return j.dump(2) + "\n";
}

std::string gripper_events_json(const MissionLog& log) {
  Json events = Json::array();
  for (const GripperEvent& e : log.gripper_events) {
    events.push_back({{"t", e.time},
                      {"state", to_string(e.state)},
                      {"cumulative_energy_J", e.cumulative_energy}});
  }
  return events.dump(2) + "\n";
}

}  // namespace perchsim::simctrl
