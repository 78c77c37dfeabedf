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

#ifndef PERCHSIM_TESTS_ORACLES_HPP_
#define PERCHSIM_TESTS_ORACLES_HPP_

// Reference computations written independently of the library code paths
// they are compared against.

#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

#include "perchsim/planner.hpp"
#include "perchsim/scene.hpp"
#include "perchsim/statics.hpp"

namespace oracle {

// Curved-beam claw strength in extended precision.
inline long double claw_strength(long double sigma, long double area, long double r,
                                 long double big_r, long double rbar, long double l) {
  return sigma * area * r * (rbar - big_r) / ((big_r - r) * l);
}

struct ChainGeometry {
  std::vector<Eigen::Vector2d> joints;
  std::vector<Eigen::Vector2d> contacts;
  std::vector<Eigen::Vector2d> directions;
  std::vector<double> interior_angles;
};

// Right half-arm fully wrapped on a circle of radius rho centred at (0, rho):
// each segment is tangent, so consecutive tangent lengths from a joint are
// equal and every turn is 2 atan(t / rho). Built by walking the polygon.
inline ChainGeometry wrap_chain(const std::vector<double>& lengths, double rho) {
  ChainGeometry g;
  double heading = 0.0;
  Eigen::Vector2d p(lengths[0], 0.0);
  double t = lengths[0];
  for (std::size_t k = 1; k < lengths.size(); ++k) {
    const double turn = 2.0 * std::atan(t / rho);
    heading += turn;
    const Eigen::Vector2d d(std::cos(heading), std::sin(heading));
    g.joints.push_back(p);
    g.directions.push_back(d);
    g.contacts.push_back(p + t * d);
    g.interior_angles.push_back(M_PI - turn);
    p += lengths[k] * d;
    t = lengths[k] - t;
  }
  return g;
}

inline double cross2(const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
  return a.x() * b.y() - a.y() * b.x();
}

// Normal forces that best satisfy every joint moment balance at once,
// found by a dense least-squares solve over all contact forces.
inline Eigen::VectorXd dense_normal_forces(const std::vector<Eigen::Vector2d>& joints,
                                           const std::vector<Eigen::Vector2d>& contacts,
                                           const std::vector<Eigen::Vector2d>& unit_forces,
                                           const std::vector<bool>& active,
                                           const std::vector<double>& moments, double sign) {
  const auto m = static_cast<Eigen::Index>(joints.size());
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m, m);
  Eigen::VectorXd b(m);
  for (Eigen::Index j = 0; j < m; ++j) {
    for (Eigen::Index i = j; i < m; ++i) {
      if (active[static_cast<std::size_t>(i)]) a(j, i) = cross2(contacts[i] - joints[j], unit_forces[i]);
    }
    b[j] = -sign * moments[static_cast<std::size_t>(j)];
  }
  return a.jacobiSvd(Eigen::ComputeThinU | Eigen::ComputeThinV).solve(b);
}

// Is `p` inside the closed finite cylinder?
inline bool inside(const perchsim::scene::Cylinder& c, const Eigen::Vector3d& p) {
  const Eigen::Vector3d rel = p - c.origin;
  const double s = rel.dot(c.direction);
  if (s < 0.0 || s > c.length) return false;
  return (rel - s * c.direction).squaredNorm() <= c.radius * c.radius;
}

// Label hit by marching along a world ray from t0 to t1 with step dt.
// 0 background, 1 trunk, 2 branch.
inline int march(const perchsim::scene::SceneSpec& scene, const Eigen::Vector3d& o,
                 const Eigen::Vector3d& d, double t0, double t1, double dt) {
  for (double t = t0; t <= t1; t += dt) {
    const Eigen::Vector3d p = o + t * d;
    if (inside(scene.trunk, p)) return 1;
    for (const auto& b : scene.branches) {
      if (inside(b, p)) return 2;
    }
  }
  return 0;
}

class UnionFind {
 public:
  explicit UnionFind(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent_[x] != x) x = parent_[x] = parent_[parent_[x]];
    return x;
  }
  void unite(std::size_t a, std::size_t b) { parent_[find(a)] = find(b); }

 private:
  std::vector<std::size_t> parent_;
};

// Number of 4-connected same-label components of size >= min_pixels.
inline int count_components(const std::vector<perchsim::scene::Label>& labels, int w, int h,
                            int min_pixels) {
  using perchsim::scene::Label;
  UnionFind uf(labels.size());
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      const std::size_t i = static_cast<std::size_t>(v * w + u);
      if (labels[i] == Label::kBackground) continue;
      if (u + 1 < w && labels[i + 1] == labels[i]) uf.unite(i, i + 1);
      if (v + 1 < h && labels[i + static_cast<std::size_t>(w)] == labels[i]) {
        uf.unite(i, i + static_cast<std::size_t>(w));
      }
    }
  }
  std::vector<int> size(labels.size(), 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != Label::kBackground) ++size[uf.find(i)];
  }
  int count = 0;
  for (int s : size) count += s >= min_pixels;
  return count;
}

inline double falling(int k, int n) {
  double f = 1.0;
  for (int i = 0; i < n; ++i) f *= k - i;
  return f;
}

// Minimum snap cost by a dense KKT solve over physical-time coefficients of
// every segment, one axis at a time.
inline double qp_snap_cost(const perchsim::planner::BoundaryState& start,
                           const perchsim::planner::BoundaryState& end,
                           const std::vector<Eigen::Vector3d>& waypoints,
                           const std::vector<double>& durations) {
  const int ns = static_cast<int>(durations.size());
  const int nv = 8 * ns;
  auto deriv_row = [&](int seg, double t, int n) {
    Eigen::RowVectorXd r = Eigen::RowVectorXd::Zero(nv);
    for (int k = n; k < 8; ++k) r[8 * seg + k] = falling(k, n) * std::pow(t, k - n);
    return r;
  };
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(nv, nv);
  for (int s = 0; s < ns; ++s) {
    const double t = durations[static_cast<std::size_t>(s)];
    for (int i = 4; i < 8; ++i) {
      for (int j = 4; j < 8; ++j) {
        q(8 * s + i, 8 * s + j) =
            falling(i, 4) * falling(j, 4) * std::pow(t, i + j - 7) / (i + j - 7);
      }
    }
  }
  double total = 0.0;
  const auto sd = start.derivatives();
  const auto ed = end.derivatives();
  for (int axis = 0; axis < 3; ++axis) {
    std::vector<Eigen::RowVectorXd> rows;
    std::vector<double> rhs;
    for (int n = 0; n < 4; ++n) {
      rows.push_back(deriv_row(0, 0.0, n));
      rhs.push_back(sd(axis, n));
      rows.push_back(deriv_row(ns - 1, durations.back(), n));
      rhs.push_back(ed(axis, n));
    }
    for (int k = 1; k < ns; ++k) {
      const double tp = durations[static_cast<std::size_t>(k - 1)];
      rows.push_back(deriv_row(k - 1, tp, 0));
      rhs.push_back(waypoints[static_cast<std::size_t>(k - 1)][axis]);
      rows.push_back(deriv_row(k, 0.0, 0));
      rhs.push_back(waypoints[static_cast<std::size_t>(k - 1)][axis]);
      for (int n = 1; n < 4; ++n) {
        rows.push_back(deriv_row(k - 1, tp, n) - deriv_row(k, 0.0, n));
        rhs.push_back(0.0);
      }
    }
    const int nc = static_cast<int>(rows.size());
    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(nv + nc, nv + nc);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(nv + nc);
    kkt.topLeftCorner(nv, nv) = 2.0 * q;
    for (int c = 0; c < nc; ++c) {
      kkt.block(nv + c, 0, 1, nv) = rows[static_cast<std::size_t>(c)];
      kkt.block(0, nv + c, nv, 1) = rows[static_cast<std::size_t>(c)].transpose();
      b[nv + c] = rhs[static_cast<std::size_t>(c)];
    }
    const Eigen::VectorXd x = kkt.fullPivLu().solve(b);
    const Eigen::VectorXd coeffs = x.head(nv);
    total += coeffs.dot(q * coeffs);
  }
  return total;
}

}  // namespace oracle

#endif  // PERCHSIM_TESTS_ORACLES_HPP_
