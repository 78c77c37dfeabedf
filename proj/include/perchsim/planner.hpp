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

#ifndef PERCHSIM_PLANNER_HPP_
#define PERCHSIM_PLANNER_HPP_

// Minimum-snap trajectories built from degree-7 polynomial segments.
//
// Every segment is solved in normalized time tau = t / T and stored with
// physical-time coefficients, so p(t) = sum_k c_k t^k for t in [0, T].

#include <string>
#include <vector>

#include <Eigen/Core>

#include "perchsim/error.hpp"

namespace perchsim::planner {

struct BoundaryState {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  Eigen::Vector3d velocity = Eigen::Vector3d::Zero();
  Eigen::Vector3d acceleration = Eigen::Vector3d::Zero();
  Eigen::Vector3d jerk = Eigen::Vector3d::Zero();

  static BoundaryState at_rest(const Eigen::Vector3d& position);
  void validate() const;
  // Column n holds the n-th derivative.
  Eigen::Matrix<double, 3, 4> derivatives() const;
};

using Coefficients = Eigen::Matrix<double, 3, 8>;  // row per axis, ascending

struct PolySegment {
  Coefficients coeffs = Coefficients::Zero();
  double duration = 0.0;

  // order-th time derivative at local time t in [0, duration].
  Eigen::Vector3d evaluate(double t, int order) const;
  double snap_cost() const;
};

struct Trajectory {
  std::vector<PolySegment> segments;
  // Positions at every segment boundary, start and end included.
  std::vector<Eigen::Vector3d> waypoints;
  std::vector<Errc> warnings;

  double total_duration() const;
  std::vector<double> durations() const;
  double snap_cost() const;
};

PolySegment plan_single(const BoundaryState& start, const BoundaryState& end,
                        double duration);

// `durations` has one entry per segment (waypoints.size() + 1). An empty
// waypoint list yields the plan_single segment unchanged.
Trajectory plan_waypoints(const BoundaryState& start, const BoundaryState& end,
                          const std::vector<Eigen::Vector3d>& waypoints,
                          const std::vector<double>& durations);

inline constexpr double kIllConditionedRatio = 1e3;

// Segment-wise durations over consecutive points: distance / avg_speed,
// never below min_duration.
std::vector<double> allocate_times(const std::vector<Eigen::Vector3d>& points,
                                   double avg_speed, double min_duration = 0.5);

// Boundary times resolve to the earlier segment.
Eigen::Vector3d evaluate(const Trajectory& traj, double t, int order);

// Builds segments from prescribed derivatives 0..3 at every knot.
Trajectory trajectory_from_knots(const std::vector<Eigen::Matrix<double, 3, 4>>& knots,
                                 const std::vector<double>& durations);

// Derivatives 0..3 at every segment boundary.
std::vector<Eigen::Matrix<double, 3, 4>> knot_derivatives(const Trajectory& traj);

double max_acceleration(const Trajectory& traj, int samples_per_segment = 200);

std::string to_json(const Trajectory& traj);
Trajectory trajectory_from_json(const std::string& text);

}  // namespace perchsim::planner

#endif  // PERCHSIM_PLANNER_HPP_
