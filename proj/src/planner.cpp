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

#include "perchsim/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Cholesky>
#include <Eigen/LU>
#include <json.hpp>

namespace perchsim::planner {
namespace {

using Eigen::Matrix;
using Eigen::MatrixXd;
using Eigen::Vector3d;
using Eigen::VectorXd;
using Matrix8d = Matrix<double, 8, 8>;
using Vector8d = Matrix<double, 8, 1>;
using Knot = Matrix<double, 3, 4>;

double falling(int k, int n) {
  double f = 1.0;
  for (int i = 0; i < n; ++i) f *= static_cast<double>(k - i);
  return f;
}

// Rows 0..3: derivatives 0..3 at tau = 0; rows 4..7: the same at tau = 1.
Matrix8d endpoint_map() {
  Matrix8d a = Matrix8d::Zero();
  for (int n = 0; n < 4; ++n) {
    a(n, n) = falling(n, n);
    for (int k = n; k < 8; ++k) a(4 + n, k) = falling(k, n);
  }
  return a;
}

const Eigen::PartialPivLU<Matrix8d>& endpoint_lu() {
  static const Eigen::PartialPivLU<Matrix8d> lu(endpoint_map());
  return lu;
}

// Snap cost of a unit-duration segment as a quadratic form in its
// endpoint derivatives.
const Matrix8d& unit_cost() {
  static const Matrix8d m = [] {
    Matrix8d q = Matrix8d::Zero();
    for (int i = 4; i < 8; ++i) {
      for (int j = 4; j < 8; ++j) {
        q(i, j) = falling(i, 4) * falling(j, 4) / static_cast<double>(i + j - 7);
      }
    }
    const Matrix8d ainv = endpoint_map().inverse();
    Matrix8d out = ainv.transpose() * q * ainv;
    return Matrix8d(0.5 * (out + out.transpose()));
  }();
  return m;
}

Vector8d derivative_scale(double duration) {
  Vector8d s;
  double p = 1.0;
  for (int n = 0; n < 4; ++n) {
    s[n] = p;
    s[4 + n] = p;
    p *= duration;
  }
  return s;
}

PolySegment segment_from_knots(const Knot& a, const Knot& b, double duration) {
  const Vector8d scale = derivative_scale(duration);
  PolySegment seg;
  seg.duration = duration;
  for (int axis = 0; axis < 3; ++axis) {
    Vector8d rhs;
    for (int n = 0; n < 4; ++n) {
      rhs[n] = a(axis, n) * scale[n];
      rhs[4 + n] = b(axis, n) * scale[4 + n];
    }
    const Vector8d normalized = endpoint_lu().solve(rhs);
    double tk = 1.0;
    for (int k = 0; k < 8; ++k) {
      seg.coeffs(axis, k) = normalized[k] / tk;
      tk *= duration;
    }
  }
  return seg;
}

void check_duration(double duration) {
  if (!(duration > 0.0) || !std::isfinite(duration)) {
    throw Error(Errc::kInvalidArgument, "segment duration must be positive and finite");
  }
}

void check_ratio(Trajectory& traj) {
  const std::vector<double> d = traj.durations();
  const auto [lo, hi] = std::minmax_element(d.begin(), d.end());
  if (*hi / *lo > kIllConditionedRatio) traj.warnings.push_back(Errc::kIllConditioned);
}

Vector3d row(const nlohmann::json& j) {
  return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()};
}

}  // namespace

BoundaryState BoundaryState::at_rest(const Vector3d& position) {
  BoundaryState s;
  s.position = position;
  return s;
}

void BoundaryState::validate() const {
  if (!derivatives().allFinite()) {
    throw Error(Errc::kInvalidArgument, "boundary state must be finite");
  }
}

Knot BoundaryState::derivatives() const {
  Knot k;
  k << position, velocity, acceleration, jerk;
  return k;
}

Vector3d PolySegment::evaluate(double t, int order) const {
  if (order < 0 || order > 7) throw Error(Errc::kInvalidArgument, "derivative order must be 0..7");
  Vector3d out = Vector3d::Zero();
  for (int k = 7; k >= order; --k) {
    out = out * t + coeffs.col(k) * falling(k, order);
  }
  return out;
}

double PolySegment::snap_cost() const {
  double total = 0.0;
  for (int axis = 0; axis < 3; ++axis) {
    for (int i = 4; i < 8; ++i) {
      for (int j = 4; j < 8; ++j) {
        const int p = i + j - 7;
        total += coeffs(axis, i) * coeffs(axis, j) * falling(i, 4) * falling(j, 4) *
                 std::pow(duration, p) / static_cast<double>(p);
      }
    }
  }
  return std::max(0.0, total);
}

double Trajectory::total_duration() const {
  double t = 0.0;
  for (const PolySegment& s : segments) t += s.duration;
  return t;
}

std::vector<double> Trajectory::durations() const {
  std::vector<double> d;
  d.reserve(segments.size());
  for (const PolySegment& s : segments) d.push_back(s.duration);
  return d;
}

double Trajectory::snap_cost() const {
  double c = 0.0;
  for (const PolySegment& s : segments) c += s.snap_cost();
  return c;
}

PolySegment plan_single(const BoundaryState& start, const BoundaryState& end,
                        double duration) {
  check_duration(duration);
  start.validate();
  end.validate();
  return segment_from_knots(start.derivatives(), end.derivatives(), duration);
}

Trajectory plan_waypoints(const BoundaryState& start, const BoundaryState& end,
                          const std::vector<Vector3d>& waypoints,
                          const std::vector<double>& durations) {
  if (durations.size() != waypoints.size() + 1) {
    throw Error(Errc::kInvalidArgument, "need exactly one duration per segment");
  }
  for (double d : durations) check_duration(d);
  for (const Vector3d& w : waypoints) {
    if (!w.allFinite()) throw Error(Errc::kInvalidArgument, "waypoint must be finite");
  }

  Trajectory traj;
  traj.waypoints.push_back(start.position);
  traj.waypoints.insert(traj.waypoints.end(), waypoints.begin(), waypoints.end());
  traj.waypoints.push_back(end.position);
  if (waypoints.empty()) {
    traj.segments.push_back(plan_single(start, end, durations[0]));
    check_ratio(traj);
    return traj;
  }
  start.validate();
  end.validate();

  const int segments = static_cast<int>(durations.size());
  const int knots = segments + 1;
  const int n = 4 * knots;
  MatrixXd h = MatrixXd::Zero(n, n);
  for (int s = 0; s < segments; ++s) {
    const double t = durations[static_cast<std::size_t>(s)];
    const Vector8d scale = derivative_scale(t);
    const Matrix8d local = std::pow(t, -7.0) * scale.asDiagonal() * unit_cost() * scale.asDiagonal();
    h.block(4 * s, 4 * s, 8, 8) += local;
  }

  // Interior velocity, acceleration and jerk are free; everything else fixed.
  std::vector<int> free_idx;
  std::vector<int> fixed_idx;
  for (int k = 0; k < knots; ++k) {
    for (int d = 0; d < 4; ++d) {
      const bool interior = k > 0 && k < knots - 1;
      (interior && d > 0 ? free_idx : fixed_idx).push_back(4 * k + d);
    }
  }
  const auto nf = static_cast<Eigen::Index>(free_idx.size());
  const auto nx = static_cast<Eigen::Index>(fixed_idx.size());
  MatrixXd hpp(nf, nf);
  MatrixXd hpf(nf, nx);
  for (Eigen::Index i = 0; i < nf; ++i) {
    for (Eigen::Index j = 0; j < nf; ++j) hpp(i, j) = h(free_idx[i], free_idx[j]);
    for (Eigen::Index j = 0; j < nx; ++j) hpf(i, j) = h(free_idx[i], fixed_idx[j]);
  }
  const Eigen::LDLT<MatrixXd> ldlt(hpp);

  std::vector<Knot> knot_values(static_cast<std::size_t>(knots), Knot::Zero());
  knot_values.front() = start.derivatives();
  knot_values.back() = end.derivatives();
  for (int k = 1; k < knots - 1; ++k) {
    knot_values[static_cast<std::size_t>(k)].col(0) = waypoints[static_cast<std::size_t>(k - 1)];
  }
  for (int axis = 0; axis < 3; ++axis) {
    VectorXd fixed(nx);
    for (Eigen::Index j = 0; j < nx; ++j) {
      const int idx = fixed_idx[j];
      fixed[j] = knot_values[static_cast<std::size_t>(idx / 4)](axis, idx % 4);
    }
    const VectorXd rhs = -(hpf * fixed);
    const VectorXd solved = ldlt.solve(rhs);
    for (Eigen::Index i = 0; i < nf; ++i) {
      const int idx = free_idx[i];
      knot_values[static_cast<std::size_t>(idx / 4)](axis, idx % 4) = solved[i];
    }
  }

  for (int s = 0; s < segments; ++s) {
    traj.segments.push_back(segment_from_knots(knot_values[static_cast<std::size_t>(s)],
                                               knot_values[static_cast<std::size_t>(s + 1)],
                                               durations[static_cast<std::size_t>(s)]));
  }
  check_ratio(traj);
  return traj;
}

std::vector<double> allocate_times(const std::vector<Vector3d>& points,
                                   double avg_speed, double min_duration) {
  if (!(avg_speed > 0.0)) throw Error(Errc::kInvalidArgument, "avg_speed must be > 0");
  if (!(min_duration > 0.0)) throw Error(Errc::kInvalidArgument, "min_duration must be > 0");
  if (points.size() < 2) throw Error(Errc::kInvalidArgument, "need at least two points");
  std::vector<double> out;
  for (std::size_t i = 1; i < points.size(); ++i) {
    const double dist = (points[i] - points[i - 1]).norm();
    if (dist == 0.0) {
      throw Error(Errc::kZeroLengthSegment,
                  "points " + std::to_string(i - 1) + " and " + std::to_string(i) + " coincide");
    }
    out.push_back(std::max(min_duration, dist / avg_speed));
  }
  return out;
}

Vector3d evaluate(const Trajectory& traj, double t, int order) {
  if (traj.segments.empty()) throw Error(Errc::kInvalidArgument, "empty trajectory");
  const double total = traj.total_duration();
  if (!(t >= 0.0 && t <= total)) {
    throw Error(Errc::kTimeOutOfRange, "time " + std::to_string(t) + " outside [0, " +
                                           std::to_string(total) + "]");
  }
  double begin = 0.0;
  for (std::size_t i = 0; i < traj.segments.size(); ++i) {
    const PolySegment& seg = traj.segments[i];
    if (t <= begin + seg.duration || i + 1 == traj.segments.size()) {
      return seg.evaluate(std::min(t - begin, seg.duration), order);
    }
    begin += seg.duration;
  }
  return traj.segments.back().evaluate(traj.segments.back().duration, order);
}

Trajectory trajectory_from_knots(const std::vector<Knot>& knots,
                                 const std::vector<double>& durations) {
  if (knots.size() != durations.size() + 1 || durations.empty()) {
    throw Error(Errc::kInvalidArgument, "need one more knot than durations");
  }
  Trajectory traj;
  for (std::size_t i = 0; i < durations.size(); ++i) {
    check_duration(durations[i]);
    traj.segments.push_back(segment_from_knots(knots[i], knots[i + 1], durations[i]));
  }
  for (const Knot& k : knots) traj.waypoints.push_back(k.col(0));
  check_ratio(traj);
  return traj;
}

std::vector<Knot> knot_derivatives(const Trajectory& traj) {
  std::vector<Knot> out;
  for (const PolySegment& seg : traj.segments) {
    Knot k;
    for (int n = 0; n < 4; ++n) k.col(n) = seg.evaluate(0.0, n);
    out.push_back(k);
  }
  if (!traj.segments.empty()) {
    const PolySegment& last = traj.segments.back();
    Knot k;
    for (int n = 0; n < 4; ++n) k.col(n) = last.evaluate(last.duration, n);
    out.push_back(k);
  }
  return out;
}

double max_acceleration(const Trajectory& traj, int samples_per_segment) {
  double best = 0.0;
  for (const PolySegment& seg : traj.segments) {
    for (int i = 0; i <= samples_per_segment; ++i) {
      const double t = seg.duration * i / samples_per_segment;
      best = std::max(best, seg.evaluate(t, 2).norm());
    }
  }
  return best;
}

std::string to_json(const Trajectory& traj) {
  nlohmann::ordered_json j;
  j["format"] = "perchsim-trajectory/1";
  j["durations"] = traj.durations();
  nlohmann::ordered_json wps = nlohmann::ordered_json::array();
  for (const Vector3d& w : traj.waypoints) wps.push_back({w.x(), w.y(), w.z()});
  j["waypoints"] = wps;
  nlohmann::ordered_json segs = nlohmann::ordered_json::array();
  static const char* kAxes[3] = {"x", "y", "z"};
  for (const PolySegment& seg : traj.segments) {
    nlohmann::ordered_json s;
    s["duration"] = seg.duration;
    for (int axis = 0; axis < 3; ++axis) {
      std::vector<double> c(8);
      for (int k = 0; k < 8; ++k) c[static_cast<std::size_t>(k)] = seg.coeffs(axis, k);
      s[kAxes[axis]] = c;
    }
    segs.push_back(s);
  }
  j["segments"] = segs;
  j["snap_cost"] = traj.snap_cost();
  nlohmann::ordered_json warnings = nlohmann::ordered_json::array();
  for (Errc w : traj.warnings) warnings.push_back(std::string(to_string(w)));
  j["warnings"] = warnings;
  return j.dump(2) + "\n";
}

Trajectory trajectory_from_json(const std::string& text) {
  try {
    const nlohmann::json j = nlohmann::json::parse(text);
    Trajectory traj;
    static const char* kAxes[3] = {"x", "y", "z"};
    for (const auto& s : j.at("segments")) {
      PolySegment seg;
      seg.duration = s.at("duration").get<double>();
      check_duration(seg.duration);
      for (int axis = 0; axis < 3; ++axis) {
        const auto& c = s.at(kAxes[axis]);
        if (c.size() != 8) throw Error(Errc::kInvalidArgument, "segment needs 8 coefficients per axis");
        for (int k = 0; k < 8; ++k) seg.coeffs(axis, k) = c.at(static_cast<std::size_t>(k)).get<double>();
      }
      traj.segments.push_back(seg);
    }
    for (const auto& w : j.at("waypoints")) traj.waypoints.push_back(row(w));
    for (const auto& w : j.value("warnings", nlohmann::json::array())) {
      if (w.get<std::string>() == to_string(Errc::kIllConditioned)) {
        traj.warnings.push_back(Errc::kIllConditioned);
      }
    }
    return traj;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::kIo, std::string("bad trajectory JSON: ") + e.what());
  }
}

}  // namespace perchsim::planner
