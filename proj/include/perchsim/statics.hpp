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

#ifndef PERCHSIM_STATICS_HPP_
#define PERCHSIM_STATICS_HPP_

// Static grasp model of the tendon-driven gripper on a cylindrical branch.
//
// Small and medium branches are held by the two claws hooking over the top;
// the capacity is then bounded by the curved-beam strength of the claw tip.
// Large branches are held by friction: the arm is modelled in the branch
// cross-section as a chain of straight segments, each tangent to the branch
// circle, and the elastic joints press the segments onto the bark.
//
// Frame of the 2D model: the branch centre sits at (0, radius); the base
// plate lies on the x axis and touches the branch at the origin. The right
// half-arm starts at the origin, runs along +x and wraps counter-clockwise;
// the left half-arm is its mirror image. Moments are z-components of
// r x F with r measured from the joint to the point of application.

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace perchsim::statics {

struct ClawGeometry {
  double sigma_uts = 0.0;            // ultimate tensile stress, Pa
  double area = 0.0;                 // cross-section area, m^2
  double neutral_axis_radius = 0.0;  // R, m
  double stress_radius = 0.0;        // r, radius where stress is evaluated, m
  double centroid_radius = 0.0;      // r-bar, m
  double moment_arm = 0.0;           // L, m
  double curvature_diameter = 0.0;   // inner diameter of the claw hook, m

  void validate() const;
};

struct JointSpec {
  double stiffness = 0.0;   // N*m/rad
  double rest_angle = 0.0;  // interior angle between segments when unloaded
  double open_angle = 0.0;  // interior angle at the fully-open stop

  void validate() const;
};

// Diameter limits of the three interaction profiles. The claw-hang upper
// limit is the claw curvature diameter.
struct Clearances {
  double min_diameter = 0.0;
  double wrap_clearance = 0.0;
  double max_open_clearance = 0.0;
};

// One half-arm. segment_lengths[0] is half of the base plate and the last
// entry is the claw. joints[j - 1] and friction_mu[j - 1] belong to segment j.
struct ArmChain {
  std::vector<double> segment_lengths;
  std::vector<JointSpec> joints;
  std::vector<double> friction_mu;
  Clearances clearances;

  std::size_t wrapping_segments() const { return joints.size(); }
  void validate() const;
};

struct MechanismSpec {
  ClawGeometry claw;
  ArmChain chain;
  double platform_weight = 0.0;  // N
  // Claw tips hooking into bark cracks on large branches.
  bool bark_interlock = false;

  void validate() const;
};

struct BranchSpec {
  double diameter = 0.0;        // m
  double weight_to_hold = 0.0;  // N

  void validate() const;
};

enum class Regime { kClawHang, kMediumWrap, kLargeFullContact };
enum class Side { kRight, kLeft };

std::string to_string(Regime regime);
std::optional<Regime> regime_from_string(const std::string& name);

struct RegimeBounds {
  double min_diameter;
  double claw_hang_max;
  double medium_wrap_max;
  double max_diameter;
};

// Per-segment arrays below are indexed by wrapping segment: entry k belongs
// to segment k + 1 of the chain (the base half is not stored).
struct ContactSolution {
  Regime regime = Regime::kLargeFullContact;
  Side side = Side::kRight;
  double branch_radius = 0.0;

  std::vector<Eigen::Vector2d> joint_points;  // proximal joint of the segment
  std::vector<Eigen::Vector2d> segment_directions;
  std::vector<double> tangent_lengths;  // joint to contact, along the segment
  std::vector<bool> in_contact;
  // Tangency point for contacting segments, closest approach otherwise.
  std::vector<Eigen::Vector2d> contact_points;
  std::vector<Eigen::Vector2d> normal_directions;    // outward from the centre
  std::vector<Eigen::Vector2d> friction_directions;  // tangent, +y component
  std::vector<double> delta_thetas;                  // opening from rest, rad
  std::vector<double> joint_moments;                 // k * delta_theta
  std::vector<double> normal_forces;
  std::vector<double> friction_forces;
  // lever_vectors[j][i] = contact_points[i] - joint_points[j] for i >= j.
  std::vector<std::vector<Eigen::Vector2d>> lever_vectors;

  // Segments (1-based chain index) whose contact was released while solving.
  std::vector<int> released;
  bool forces_solved = false;
  // Whole gripper (both halves): 2 * sum of vertical friction components.
  double capacity = 0.0;
  // Vertical reaction on one half of the base plate that closes the force
  // balance at capacity load; positive when the branch pushes the base down.
  double base_reaction = 0.0;
};

struct CascadeOptions {
  // Release contacts that would need tension and re-solve. When false a
  // negative normal force raises Errc::kNegativeNormalForce instead.
  bool release_tension_contacts = true;
  double angle_tolerance = 1e-10;
  int max_newton_iterations = 100;
};

// Curved-beam strength of one claw, N.
double claw_strength(const ClawGeometry& geom);

RegimeBounds regime_bounds(const ArmChain& chain, const ClawGeometry& claw);

// Throws Errc::kBelowRange / Errc::kAboveRange outside the mechanism range.
Regime classify_regime(double diameter, const ArmChain& chain,
                       const ClawGeometry& claw);

// Geometry of the fully wrapped half-arm; forces are left at zero.
ContactSolution solve_tangent_chain(const ArmChain& chain,
                                    const BranchSpec& branch,
                                    Side side = Side::kRight);

ContactSolution cascade_equilibrium(const ContactSolution& geometry,
                                    const ArmChain& chain,
                                    const CascadeOptions& options = {});

struct GraspAnalysis {
  Regime regime;
  double claw_strength;
  double capacity;
  bool holds;
  std::optional<ContactSolution> contact;  // large branches only
};

GraspAnalysis analyze_grasp(const MechanismSpec& spec, const BranchSpec& branch);

double payload_capacity(const MechanismSpec& spec, const BranchSpec& branch);

struct SweepRow {
  double diameter;
  std::optional<double> capacity;
  std::optional<Regime> regime;
  std::string note;  // empty, "below_range", "above_range" or "no_contact"
};

std::vector<SweepRow> capacity_sweep(const MechanismSpec& spec, double d_min,
                                     double d_max, int steps);

// First diameter in the sweep range at which capacity drops below `weight`,
// refined by bisection between the bracketing sweep rows.
std::optional<double> crossover_diameter(const MechanismSpec& spec,
                                         const std::vector<SweepRow>& rows,
                                         double weight);

}  // namespace perchsim::statics

#endif  // PERCHSIM_STATICS_HPP_
