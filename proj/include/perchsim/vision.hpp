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

#ifndef PERCHSIM_VISION_HPP_
#define PERCHSIM_VISION_HPP_

// Perch-point selection from a labelled depth view: find the trunk first,
// then take the suitable branch closest to it and report its 3D centre.
//
// "Closest" is measured between blob centres back-projected into the world
// frame. A branch blob is "suitable" when the principal axis of its 3D
// points lies within `max_tilt` of horizontal.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "perchsim/scene.hpp"

namespace perchsim::vision {

using scene::Label;

struct BoundingBox {
  int min_u = 0;
  int min_v = 0;
  int max_u = 0;
  int max_v = 0;
};

struct ComponentBlob {
  int id = 0;
  Label label = Label::kBackground;
  std::vector<int> pixels;  // row-major indices, ascending
  Eigen::Vector2d centroid = Eigen::Vector2d::Zero();  // (u, v), px
  BoundingBox bbox;
  double median_depth = 0.0;  // over pixels with depth > 0; 0 if none

  std::size_t size() const { return pixels.size(); }
  int first_pixel() const { return pixels.front(); }
};

struct PerchPoint {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();  // world, m
  int source_blob = -1;
  double confidence = 0.0;  // fraction of blob pixels with valid depth
};

struct SelectionParams {
  double max_tilt = 0.5235987755982988;  // 30 degrees
};

struct BlobCentre {
  Eigen::Vector2d pixel;    // depth-weighted centroid, px
  double depth;             // median over valid pixels, m
  Eigen::Vector3d world;    // back-projection of (pixel, depth)
  double confidence;
};

struct Selection {
  PerchPoint perch;
  int trunk_blob = -1;
  BlobCentre trunk_surface;
  // Trunk axis estimate: surface centre pushed back along the viewing ray by
  // the apparent radius measured from the blob's width.
  Eigen::Vector3d trunk_centre = Eigen::Vector3d::Zero();
  double trunk_radius_estimate = 0.0;
};

// 4-connected components of each non-background label, dropping those with
// fewer than `min_pixels` pixels. Order: label, size descending, first pixel.
std::vector<ComponentBlob> extract_components(const scene::RenderedView& view,
                                              int min_pixels);

// Returns nullopt when the blob has no pixel with valid depth.
std::optional<BlobCentre> blob_centre(const ComponentBlob& blob,
                                      const scene::RenderedView& view,
                                      const scene::CameraModel& camera);

// Tilt of the blob's 3D principal axis above the horizontal plane, rad.
std::optional<double> blob_tilt(const ComponentBlob& blob,
                                const scene::RenderedView& view,
                                const scene::CameraModel& camera);

// Throws Errc::kNoTrunkDetected / Errc::kNoBranchDetected.
Selection select_target(const std::vector<ComponentBlob>& blobs,
                        const scene::RenderedView& view,
                        const scene::CameraModel& camera,
                        const SelectionParams& params = {});

PerchPoint select_perch_point(const std::vector<ComponentBlob>& blobs,
                              const scene::RenderedView& view,
                              const scene::CameraModel& camera,
                              const SelectionParams& params = {});

double dice_coefficient(const scene::MaskView& predicted,
                        const scene::MaskView& truth, Label label);
double iou(const scene::MaskView& predicted, const scene::MaskView& truth,
           Label label);

struct LocalizationParams {
  std::vector<double> distances;  // camera range to the trunk axis, m
  int trials = 5;
  double flip_rate = 0.0;
  std::uint64_t seed = 0;
  int min_pixels = 20;
  double camera_height = 1.5;  // m
  double azimuth = 3.141592653589793;  // direction trunk -> camera, rad
  SelectionParams selection;
};

struct TrialResult {
  double distance;
  int trial;
  std::uint64_t seed;
  std::optional<double> trunk_error;
  std::optional<double> branch_error;
  std::string failure;  // empty, "NoTrunkDetected" or "NoBranchDetected"
};

struct ErrorRow {
  double distance;
  std::string target;  // "trunk" or "branch"
  double mean;
  double std_dev;  // sample standard deviation, 0 for a single value
  double p25;
  double p50;
  double p75;
  int failures;
  int samples;
};

struct LocalizationReport {
  std::vector<ErrorRow> rows;
  std::vector<TrialResult> trials;
};

// Camera pose used for a given stand-off distance.
scene::CameraModel placed_camera(const scene::SceneSpec& scene,
                                 const scene::CameraModel& intrinsics,
                                 double distance, double camera_height,
                                 double azimuth);

LocalizationReport evaluate_localization(const scene::SceneSpec& scene,
                                         const scene::CameraModel& intrinsics,
                                         const LocalizationParams& params);

}  // namespace perchsim::vision

#endif  // PERCHSIM_VISION_HPP_
