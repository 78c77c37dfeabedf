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

#include "perchsim/statics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <Eigen/Dense>

#include "perchsim/error.hpp"

namespace perchsim::statics {
namespace {

using Eigen::Vector2d;

constexpr double kPi = std::numbers::pi;

double cross(const Vector2d& a, const Vector2d& b) {
  return a.x() * b.y() - a.y() * b.x();
}

Vector2d rotate(const Vector2d& v, double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  return {c * v.x() - s * v.y(), s * v.x() + c * v.y()};
}

[[noreturn]] void fail(Errc code, const std::string& msg) {
  throw Error(code, msg);
}

double side_sign(Side side) { return side == Side::kRight ? 1.0 : -1.0; }

// Free segments carry an unknown opening angle; all others are tangent.
ContactSolution layout(const ArmChain& chain, double radius, Side side,
                       const std::vector<bool>& is_free,
                       const std::vector<double>& free_deflection) {
  const std::size_t m = chain.wrapping_segments();
  const double s = side_sign(side);
  const Vector2d centre(0.0, radius);

  ContactSolution sol;
  sol.side = side;
  sol.branch_radius = radius;
  sol.joint_points.resize(m);
  sol.segment_directions.resize(m);
  sol.tangent_lengths.resize(m);
  sol.in_contact.resize(m);
  sol.contact_points.resize(m);
  sol.normal_directions.resize(m);
  sol.friction_directions.resize(m);
  sol.delta_thetas.resize(m);
  sol.joint_moments.assign(m, 0.0);
  sol.normal_forces.assign(m, 0.0);
  sol.friction_forces.assign(m, 0.0);

  Vector2d dir(s, 0.0);
  Vector2d joint = chain.segment_lengths[0] * dir;

  for (std::size_t k = 0; k < m; ++k) {
    const double length = chain.segment_lengths[k + 1];
    const JointSpec& spec = chain.joints[k];
    const double rest_turn = kPi - spec.rest_angle;

    Vector2d next_dir;
    double turn;
    if (is_free[k]) {
      turn = rest_turn - free_deflection[k];
      next_dir = rotate(dir, s * turn);
    } else {
      const Vector2d w = centre - joint;
      const double dist = w.norm();
      if (dist <= radius * (1.0 + 1e-12)) {
        std::ostringstream msg;
        msg << "joint " << k + 1 << " lies on or inside the branch circle";
        fail(Errc::kNoContactConfiguration, msg.str());
      }
      const double half_angle = std::asin(radius / dist);
      next_dir = rotate(w / dist, -s * half_angle);
      turn = s * std::atan2(cross(dir, next_dir), dir.dot(next_dir));
    }

    const double interior = kPi - turn;
    if (interior > spec.open_angle) {
      std::ostringstream msg;
      msg << "joint " << k + 1 << " would open to " << interior
          << " rad, past its stop at " << spec.open_angle << " rad";
      fail(Errc::kNoContactConfiguration, msg.str());
    }

    sol.joint_points[k] = joint;
    sol.segment_directions[k] = next_dir;
    sol.delta_thetas[k] = rest_turn - turn;
    sol.in_contact[k] = !is_free[k];

    double along = (centre - joint).dot(next_dir);
    if (!is_free[k]) {
      if (along <= 0.0 || along > length) {
        std::ostringstream msg;
        msg << "tangency point of segment " << k + 1
            << " falls outside the segment";
        fail(Errc::kNoContactConfiguration, msg.str());
      }
    } else {
      along = std::clamp(along, 0.0, length);
    }
    const Vector2d point = joint + along * next_dir;
    sol.tangent_lengths[k] = along;
    sol.contact_points[k] = point;
    sol.normal_directions[k] = (point - centre).normalized();
    sol.friction_directions[k] = next_dir.y() >= 0.0 ? next_dir : -next_dir;

    joint += length * next_dir;
    dir = next_dir;
  }

  sol.lever_vectors.assign(m, std::vector<Vector2d>(m, Vector2d::Zero()));
  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t i = j; i < m; ++i) {
      sol.lever_vectors[j][i] = sol.contact_points[i] - sol.joint_points[j];
    }
  }
  return sol;
}

// Top-down moment balance. Fills forces of contacting segments and returns
// the unbalanced moment at each free joint.
std::vector<double> cascade(ContactSolution& sol, const ArmChain& chain) {
  const std::size_t m = sol.joint_points.size();
  const double s = side_sign(sol.side);
  std::vector<Vector2d> force(m, Vector2d::Zero());
  std::vector<double> residual(m, 0.0);

  for (std::size_t jj = m; jj-- > 0;) {
    const double moment = chain.joints[jj].stiffness * sol.delta_thetas[jj];
    sol.joint_moments[jj] = moment;
    double distal = 0.0;
    for (std::size_t i = jj + 1; i < m; ++i) {
      distal += cross(sol.lever_vectors[jj][i], force[i]);
    }
    if (sol.in_contact[jj]) {
      const double mu = chain.friction_mu[jj];
      const Vector2d unit_force =
          sol.normal_directions[jj] + mu * sol.friction_directions[jj];
      const double arm = cross(sol.lever_vectors[jj][jj], unit_force);
      const double normal = -(s * moment + distal) / arm;
      sol.normal_forces[jj] = normal;
      sol.friction_forces[jj] = mu * normal;
      force[jj] = normal * unit_force;
    } else {
      sol.normal_forces[jj] = 0.0;
      sol.friction_forces[jj] = 0.0;
      residual[jj] = s * moment + distal;
    }
  }
  return residual;
}

// Newton iteration on the opening angles of the free joints, starting from
// `initial` (the last contact configuration).
ContactSolution solve_free_joints(const ArmChain& chain, double radius,
                                  Side side, const std::vector<bool>& is_free,
                                  const std::vector<double>& initial,
                                  const CascadeOptions& options) {
  const std::size_t m = chain.wrapping_segments();
  std::vector<std::size_t> free_idx;
  for (std::size_t k = 0; k < m; ++k) {
    if (is_free[k]) free_idx.push_back(k);
  }
  std::vector<double> deflection = initial;

  auto evaluate = [&](const std::vector<double>& defl, ContactSolution* out) {
    ContactSolution sol = layout(chain, radius, side, is_free, defl);
    std::vector<double> full = cascade(sol, chain);
    Eigen::VectorXd r(free_idx.size());
    for (std::size_t q = 0; q < free_idx.size(); ++q) r[q] = full[free_idx[q]];
    if (out != nullptr) *out = std::move(sol);
    return r;
  };

  ContactSolution sol;
  Eigen::VectorXd r = evaluate(deflection, &sol);
  if (free_idx.empty()) return sol;

  const std::size_t q = free_idx.size();
  for (int iter = 0; iter < options.max_newton_iterations; ++iter) {
    Eigen::MatrixXd jac(q, q);
    constexpr double kStep = 1e-7;
    for (std::size_t c = 0; c < q; ++c) {
      std::vector<double> plus = deflection;
      std::vector<double> minus = deflection;
      plus[free_idx[c]] += kStep;
      minus[free_idx[c]] -= kStep;
      jac.col(c) = (evaluate(plus, nullptr) - evaluate(minus, nullptr)) /
                   (2.0 * kStep);
    }
    Eigen::VectorXd step = jac.colPivHouseholderQr().solve(-r);

    // Backtrack until the residual does not grow.
    double scale = 1.0;
    std::vector<double> trial = deflection;
    Eigen::VectorXd trial_r;
    ContactSolution trial_sol;
    for (int k = 0; k < 30; ++k) {
      trial = deflection;
      for (std::size_t c = 0; c < q; ++c) {
        trial[free_idx[c]] += scale * step[c];
      }
      try {
        trial_r = evaluate(trial, &trial_sol);
        if (trial_r.norm() <= r.norm() || scale < 1e-6) break;
      } catch (const Error&) {
        if (scale < 1e-6) throw;
      }
      scale *= 0.5;
    }
    deflection = trial;
    r = trial_r;
    sol = std::move(trial_sol);
    if ((scale * step).cwiseAbs().maxCoeff() < options.angle_tolerance &&
        r.cwiseAbs().maxCoeff() < 1e-9) {
      return sol;
    }
  }
  fail(Errc::kNoContactConfiguration,
       "free-joint equilibrium did not converge");
}

void finalize(ContactSolution& sol) {
  double vertical_friction = 0.0;
  double vertical_normal = 0.0;
  for (std::size_t k = 0; k < sol.normal_forces.size(); ++k) {
    if (!sol.in_contact[k]) continue;
    vertical_friction += sol.friction_forces[k] * sol.friction_directions[k].y();
    vertical_normal += sol.normal_forces[k] * sol.normal_directions[k].y();
  }
  sol.capacity = 2.0 * vertical_friction;
  sol.base_reaction = vertical_normal;
  sol.forces_solved = true;
}

}  // namespace

void ClawGeometry::validate() const {
  if (!(sigma_uts >= 0.0) || !(area > 0.0) || !(moment_arm > 0.0) ||
      !(curvature_diameter > 0.0) || !(stress_radius > 0.0)) {
    fail(Errc::kInvalidGeometry,
         "claw geometry needs sigma_uts >= 0 and positive area, radii, "
         "moment arm and curvature diameter");
  }
  if (!(stress_radius < neutral_axis_radius) ||
      !(neutral_axis_radius < centroid_radius)) {
    fail(Errc::kInvalidGeometry,
         "claw cross-section must satisfy r < R < r_bar");
  }
}

void JointSpec::validate() const {
  if (!(stiffness > 0.0)) {
    fail(Errc::kInvalidArgument, "joint stiffness must be positive");
  }
  if (!(rest_angle > 0.0 && rest_angle < kPi)) {
    fail(Errc::kInvalidArgument, "joint rest angle must lie in (0, pi)");
  }
  if (!(open_angle > rest_angle && open_angle <= kPi)) {
    fail(Errc::kInvalidArgument,
         "joint open angle must lie in (rest_angle, pi]");
  }
}

void ArmChain::validate() const {
  if (segment_lengths.size() < 3) {
    fail(Errc::kInvalidArgument, "arm chain needs at least 3 segments");
  }
  for (double l : segment_lengths) {
    if (!(l > 0.0)) fail(Errc::kInvalidArgument, "segment lengths must be > 0");
  }
  if (joints.size() + 1 != segment_lengths.size()) {
    fail(Errc::kInvalidArgument, "need one joint fewer than segments");
  }
  if (friction_mu.size() != joints.size()) {
    fail(Errc::kInvalidArgument,
         "need one friction coefficient per wrapping segment");
  }
  for (const JointSpec& j : joints) j.validate();
  for (double mu : friction_mu) {
    if (!(mu > 0.0 && mu <= 2.0)) {
      fail(Errc::kInvalidArgument, "friction coefficients must lie in (0, 2]");
    }
  }
}

void MechanismSpec::validate() const {
  claw.validate();
  chain.validate();
  if (!(platform_weight >= 0.0)) {
    fail(Errc::kInvalidArgument, "platform weight must be >= 0");
  }
  const RegimeBounds b = regime_bounds(chain, claw);
  if (!(0.0 < b.min_diameter && b.min_diameter < b.claw_hang_max &&
        b.claw_hang_max < b.medium_wrap_max &&
        b.medium_wrap_max < b.max_diameter)) {
    fail(Errc::kInvalidArgument,
         "clearances must satisfy 0 < min < claw curvature < wrap < max open");
  }
}

void BranchSpec::validate() const {
  if (!(diameter > 0.0)) {
    fail(Errc::kInvalidArgument, "branch diameter must be > 0");
  }
  if (!(weight_to_hold >= 0.0)) {
    fail(Errc::kInvalidArgument, "weight to hold must be >= 0");
  }
}

std::string to_string(Regime regime) {
  switch (regime) {
    case Regime::kClawHang: return "ClawHang";
    case Regime::kMediumWrap: return "MediumWrap";
    case Regime::kLargeFullContact: return "LargeFullContact";
  }
  return "Unknown";
}

std::optional<Regime> regime_from_string(const std::string& name) {
  for (Regime r : {Regime::kClawHang, Regime::kMediumWrap,
                   Regime::kLargeFullContact}) {
    if (to_string(r) == name) return r;
  }
  return std::nullopt;
}

double claw_strength(const ClawGeometry& geom) {
  geom.validate();
  const double r = geom.stress_radius;
  const double big_r = geom.neutral_axis_radius;
  return geom.sigma_uts * geom.area * r * (geom.centroid_radius - big_r) /
         ((big_r - r) * geom.moment_arm);
}

RegimeBounds regime_bounds(const ArmChain& chain, const ClawGeometry& claw) {
  return {chain.clearances.min_diameter, claw.curvature_diameter,
          chain.clearances.wrap_clearance,
          chain.clearances.max_open_clearance};
}

Regime classify_regime(double diameter, const ArmChain& chain,
                       const ClawGeometry& claw) {
  if (!(diameter > 0.0)) {
    fail(Errc::kInvalidArgument, "branch diameter must be > 0");
  }
  const RegimeBounds b = regime_bounds(chain, claw);
  if (diameter < b.min_diameter) {
    std::ostringstream msg;
    msg << "diameter " << diameter << " m is below the mechanism minimum "
        << b.min_diameter << " m";
    fail(Errc::kBelowRange, msg.str());
  }
  if (diameter > b.max_diameter) {
    std::ostringstream msg;
    msg << "diameter " << diameter << " m exceeds the open-claw clearance "
        << b.max_diameter << " m";
    fail(Errc::kAboveRange, msg.str());
  }
  if (diameter < b.claw_hang_max) return Regime::kClawHang;
  if (diameter < b.medium_wrap_max) return Regime::kMediumWrap;
  return Regime::kLargeFullContact;
}

ContactSolution solve_tangent_chain(const ArmChain& chain,
                                    const BranchSpec& branch, Side side) {
  chain.validate();
  branch.validate();
  const std::size_t m = chain.wrapping_segments();
  ContactSolution sol = layout(chain, 0.5 * branch.diameter, side,
                               std::vector<bool>(m, false),
                               std::vector<double>(m, 0.0));
  for (std::size_t k = 0; k < m; ++k) {
    sol.joint_moments[k] = chain.joints[k].stiffness * sol.delta_thetas[k];
  }
  return sol;
}

ContactSolution cascade_equilibrium(const ContactSolution& geometry,
                                    const ArmChain& chain,
                                    const CascadeOptions& options) {
  chain.validate();
  const std::size_t m = chain.wrapping_segments();
  if (geometry.joint_points.size() != m) {
    fail(Errc::kInvalidArgument, "contact geometry does not match the chain");
  }
  const double radius = geometry.branch_radius;
  std::vector<bool> is_free(m);
  for (std::size_t k = 0; k < m; ++k) is_free[k] = !geometry.in_contact[k];
  std::vector<int> released = geometry.released;
  std::vector<double> start = geometry.delta_thetas;

  // Each pass releases at most one contact, so m + 1 passes suffice.
  for (std::size_t pass = 0; pass <= m; ++pass) {
    ContactSolution sol =
        solve_free_joints(chain, radius, geometry.side, is_free, start, options);

    std::optional<std::size_t> tension;
    for (std::size_t k = m; k-- > 0;) {
      if (sol.in_contact[k] && sol.normal_forces[k] < 0.0) {
        tension = k;
        break;
      }
    }
    if (!tension) {
      const Vector2d centre(0.0, radius);
      for (std::size_t k = 0; k < m; ++k) {
        if (!sol.in_contact[k] &&
            (sol.contact_points[k] - centre).norm() < radius - 1e-9) {
          fail(Errc::kNoContactConfiguration,
               "released segment penetrates the branch; no consistent "
               "contact set");
        }
      }
      sol.regime = geometry.regime;
      sol.released = released;
      finalize(sol);
      return sol;
    }
    if (!options.release_tension_contacts) {
      std::ostringstream msg;
      msg << "segment " << *tension + 1 << " needs a tensile contact force of "
          << sol.normal_forces[*tension] << " N";
      fail(Errc::kNegativeNormalForce, msg.str());
    }
    is_free[*tension] = true;
    start = sol.delta_thetas;
    released.push_back(static_cast<int>(*tension) + 1);
  }
  fail(Errc::kNoContactConfiguration, "contact release did not settle");
}

GraspAnalysis analyze_grasp(const MechanismSpec& spec,
                            const BranchSpec& branch) {
  spec.validate();
  branch.validate();
  GraspAnalysis out{};
  out.regime = classify_regime(branch.diameter, spec.chain, spec.claw);
  out.claw_strength = claw_strength(spec.claw);
  if (out.regime == Regime::kLargeFullContact) {
    ContactSolution sol = cascade_equilibrium(
        solve_tangent_chain(spec.chain, branch, Side::kRight), spec.chain);
    sol.regime = out.regime;
    out.capacity = std::max(0.0, sol.capacity);
    if (spec.bark_interlock) {
      const double demand = std::max(0.0, branch.weight_to_hold - out.capacity);
      out.capacity += std::min(out.claw_strength, demand);
    }
    out.contact = std::move(sol);
  } else {
    // Two claws share the weight symmetrically.
    out.capacity = 2.0 * out.claw_strength;
  }
  out.holds = out.capacity >= branch.weight_to_hold;
  return out;
}

double payload_capacity(const MechanismSpec& spec, const BranchSpec& branch) {
  return analyze_grasp(spec, branch).capacity;
}

std::vector<SweepRow> capacity_sweep(const MechanismSpec& spec, double d_min,
                                     double d_max, int steps) {
  if (!(d_min < d_max) || steps < 2) {
    fail(Errc::kInvalidArgument, "sweep needs d_min < d_max and steps >= 2");
  }
  spec.validate();
  std::vector<SweepRow> rows;
  rows.reserve(static_cast<std::size_t>(steps));
  const double span = d_max - d_min;
  for (int i = 0; i < steps; ++i) {
    const double d = i + 1 == steps ? d_max : d_min + span * i / (steps - 1);
    SweepRow row{d, std::nullopt, std::nullopt, ""};
    try {
      const GraspAnalysis g = analyze_grasp(spec, {d, spec.platform_weight});
      row.capacity = g.capacity;
      row.regime = g.regime;
    } catch (const Error& e) {
      switch (e.code()) {
        case Errc::kBelowRange: row.note = "below_range"; break;
        case Errc::kAboveRange: row.note = "above_range"; break;
        case Errc::kNoContactConfiguration: row.note = "no_contact"; break;
        default: throw;
      }
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::optional<double> crossover_diameter(const MechanismSpec& spec,
                                         const std::vector<SweepRow>& rows,
                                         double weight) {
  auto capacity_at = [&](double d) -> std::optional<double> {
    try {
      return payload_capacity(spec, {d, weight});
    } catch (const Error&) {
      return std::nullopt;
    }
  };
  const SweepRow* prev = nullptr;
  for (const SweepRow& row : rows) {
    if (!row.capacity) {
      prev = nullptr;
      continue;
    }
    if (*row.capacity < weight) {
      if (prev == nullptr) return row.diameter;
      double lo = prev->diameter;
      double hi = row.diameter;
      while (hi - lo > 1e-10) {
        const double mid = 0.5 * (lo + hi);
        const std::optional<double> c = capacity_at(mid);
        if (c && *c >= weight) {
          lo = mid;
        } else {
          hi = mid;
        }
      }
      return hi;
    }
    prev = &row;
  }
  return std::nullopt;
}

}  // namespace perchsim::statics
