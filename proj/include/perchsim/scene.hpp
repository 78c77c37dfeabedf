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

#ifndef PERCHSIM_SCENE_HPP_
#define PERCHSIM_SCENE_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace perchsim::scene {

enum class Label : std::uint8_t { kBackground = 0, kTrunk = 1, kBranch = 2 };

std::string to_string(Label label);

// Finite cylinder from `origin` along unit `direction`, flat end caps.
struct Cylinder {
  Eigen::Vector3d origin = Eigen::Vector3d::Zero();
  Eigen::Vector3d direction = Eigen::Vector3d::UnitZ();
  double radius = 0.0;
  double length = 0.0;

  Eigen::Vector3d point_at(double s) const { return origin + s * direction; }
  // Nearest ray parameter t > 0 with origin + t * dir on the surface.
  std::optional<double> intersect(const Eigen::Vector3d& ray_origin,
                                  const Eigen::Vector3d& ray_dir) const;
};

// World frame is z-up, metres. Branch origins are attachment points on the
// trunk axis; branch length is measured from the attachment point.
struct SceneSpec {
  Cylinder trunk;
  std::vector<Cylinder> branches;

  void validate() const;
  // Midpoint of the part of branch `index` that sticks out of the trunk.
  Eigen::Vector3d branch_exposed_midpoint(std::size_t index) const;
};

// Rigid transform taking world points into the camera frame:
// x_cam = rotation * x_world + translation. Camera axes: x right, y down,
// z along the optical axis.
struct CameraPose {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  // Pose of a camera at `eye` looking at `target`, with image "up" as close
  // to world `up` as possible.
  static CameraPose look_at(const Eigen::Vector3d& eye,
                            const Eigen::Vector3d& target,
                            const Eigen::Vector3d& up = Eigen::Vector3d::UnitZ());
};

struct CameraModel {
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 0;
  int height = 0;
  CameraPose pose;

  void validate() const;
  Eigen::Vector3d centre() const;
  // Camera-frame ray through pixel (u, v) with unit z component.
  Eigen::Vector3d pixel_ray(double u, double v) const;
  // World point at z-depth `depth` along the ray of pixel (u, v).
  Eigen::Vector3d back_project(double u, double v, double depth) const;
  // Pixel coordinates and z-depth of a world point.
  Eigen::Vector3d project(const Eigen::Vector3d& world) const;
};

struct MaskView {
  int width = 0;
  int height = 0;
  std::span<const Label> data;
};

// depth is z-depth in metres (0 where no surface was hit), row-major.
struct RenderedView {
  int width = 0;
  int height = 0;
  std::vector<double> depth;
  std::vector<Label> labels;

  std::size_t index(int u, int v) const {
    return static_cast<std::size_t>(v) * static_cast<std::size_t>(width) +
           static_cast<std::size_t>(u);
  }
  MaskView mask() const { return {width, height, labels}; }
};

RenderedView render(const SceneSpec& scene, const CameraModel& camera);

// Each pixel independently takes a uniformly chosen different label with
// probability `flip_rate`. Depth is left untouched.
RenderedView corrupt_mask(const RenderedView& view, double flip_rate,
                          std::uint64_t seed);

// Writes <stem>.json, <stem>_depth.pfm and <stem>_labels.pgm into `dir`.
void save_view(const RenderedView& view, const CameraModel& camera,
               const std::filesystem::path& dir, const std::string& stem);

struct LoadedView {
  RenderedView view;
  CameraModel camera;
};

LoadedView load_view(const std::filesystem::path& sidecar);

}  // namespace perchsim::scene

#endif  // PERCHSIM_SCENE_HPP_
