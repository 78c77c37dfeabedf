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

#include "perchsim/vision.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>

#include <Eigen/Eigenvalues>

#include "perchsim/error.hpp"

namespace perchsim::vision {
namespace {

using Eigen::Matrix2d;
using Eigen::Matrix3d;
using Eigen::Vector2d;
using Eigen::Vector3d;
using scene::CameraModel;
using scene::RenderedView;

double median_of(std::vector<double> values) {
  const std::size_t n = values.size();
  const std::size_t mid = n / 2;
  std::nth_element(values.begin(), values.begin() + mid, values.end());
  const double upper = values[mid];
  if (n % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + mid);
  return 0.5 * (lower + upper);
}

double quantile(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

// Larger blobs first, then the one starting earlier in raster order.
bool bigger_blob(const ComponentBlob& a, const ComponentBlob& b) {
  if (a.size() != b.size()) return a.size() > b.size();
  return a.first_pixel() < b.first_pixel();
}

struct TrunkEstimate {
  const ComponentBlob* blob;
  BlobCentre surface;
  Vector3d centre;
  double radius;
};

std::optional<TrunkEstimate> locate_trunk(const std::vector<ComponentBlob>& blobs,
                                          const RenderedView& view,
                                          const CameraModel& camera) {
  const ComponentBlob* trunk = nullptr;
  for (const ComponentBlob& b : blobs) {
    if (b.label != Label::kTrunk) continue;
    if (trunk == nullptr || bigger_blob(b, *trunk)) trunk = &b;
  }
  if (trunk == nullptr) return std::nullopt;
  const std::optional<BlobCentre> surface = blob_centre(*trunk, view, camera);
  if (!surface) return std::nullopt;

  // Apparent width across the minor image axis of the blob.
  Vector2d mean = Vector2d::Zero();
  for (int p : trunk->pixels) mean += Vector2d(p % view.width, p / view.width);
  mean /= static_cast<double>(trunk->size());
  Matrix2d cov = Matrix2d::Zero();
  for (int p : trunk->pixels) {
    const Vector2d d = Vector2d(p % view.width, p / view.width) - mean;
    cov += d * d.transpose();
  }
  cov /= static_cast<double>(trunk->size());
  Eigen::SelfAdjointEigenSolver<Matrix2d> eig(cov);
  const Vector2d minor = eig.eigenvectors().col(0);
  // A band w pixels wide has variance (w^2 - 1) / 12 across it.
  const double width_px = std::sqrt(12.0 * std::max(0.0, eig.eigenvalues()[0]) + 1.0);
  const double metres_per_px =
      surface->depth * std::hypot(minor.x() / camera.fx, minor.y() / camera.fy);
  const double radius = 0.5 * width_px * metres_per_px;

  const Vector3d ray = (surface->world - camera.centre()).normalized();
  return TrunkEstimate{trunk, *surface, surface->world + radius * ray, radius};
}

}  // namespace

std::vector<ComponentBlob> extract_components(const RenderedView& view,
                                              int min_pixels) {
  if (min_pixels < 1) {
    throw Error(Errc::kInvalidArgument, "min_pixels must be >= 1");
  }
  const int w = view.width;
  const int h = view.height;
  std::vector<char> seen(view.labels.size(), 0);
  std::vector<ComponentBlob> blobs;
  std::deque<int> queue;

  for (int start = 0; start < w * h; ++start) {
    const Label label = view.labels[static_cast<std::size_t>(start)];
    if (label == Label::kBackground || seen[static_cast<std::size_t>(start)]) continue;
    ComponentBlob blob;
    blob.label = label;
    seen[static_cast<std::size_t>(start)] = 1;
    queue.push_back(start);
    while (!queue.empty()) {
      const int p = queue.front();
      queue.pop_front();
      blob.pixels.push_back(p);
      const int u = p % w;
      const int v = p / w;
      const int neighbours[4][2] = {{u - 1, v}, {u + 1, v}, {u, v - 1}, {u, v + 1}};
      for (const auto& nb : neighbours) {
        if (nb[0] < 0 || nb[0] >= w || nb[1] < 0 || nb[1] >= h) continue;
        const int q = nb[1] * w + nb[0];
        const auto qi = static_cast<std::size_t>(q);
        if (seen[qi] || view.labels[qi] != label) continue;
        seen[qi] = 1;
        queue.push_back(q);
      }
    }
    if (static_cast<int>(blob.pixels.size()) < min_pixels) continue;

    std::sort(blob.pixels.begin(), blob.pixels.end());
    blob.bbox = {w, h, -1, -1};
    Vector2d sum = Vector2d::Zero();
    std::vector<double> depths;
    for (int p : blob.pixels) {
      const int u = p % w;
      const int v = p / w;
      sum += Vector2d(u, v);
      blob.bbox.min_u = std::min(blob.bbox.min_u, u);
      blob.bbox.min_v = std::min(blob.bbox.min_v, v);
      blob.bbox.max_u = std::max(blob.bbox.max_u, u);
      blob.bbox.max_v = std::max(blob.bbox.max_v, v);
      const double d = view.depth[static_cast<std::size_t>(p)];
      if (d > 0.0) depths.push_back(d);
    }
    blob.centroid = sum / static_cast<double>(blob.pixels.size());
    blob.median_depth = depths.empty() ? 0.0 : median_of(std::move(depths));
    blobs.push_back(std::move(blob));
  }

  std::sort(blobs.begin(), blobs.end(),
            [](const ComponentBlob& a, const ComponentBlob& b) {
              if (a.label != b.label) return a.label < b.label;
              return bigger_blob(a, b);
            });
  for (std::size_t i = 0; i < blobs.size(); ++i) blobs[i].id = static_cast<int>(i);
  return blobs;
}

std::optional<BlobCentre> blob_centre(const ComponentBlob& blob,
                                      const RenderedView& view,
                                      const CameraModel& camera) {
  Vector2d weighted = Vector2d::Zero();
  double total = 0.0;
  std::size_t valid = 0;
  for (int p : blob.pixels) {
    const double d = view.depth[static_cast<std::size_t>(p)];
    if (d <= 0.0) continue;
    weighted += d * Vector2d(p % view.width, p / view.width);
    total += d;
    ++valid;
  }
  if (valid == 0) return std::nullopt;
  BlobCentre c;
  c.pixel = weighted / total;
  c.depth = blob.median_depth;
  c.world = camera.back_project(c.pixel.x(), c.pixel.y(), c.depth);
  c.confidence = static_cast<double>(valid) / static_cast<double>(blob.size());
  return c;
}

std::optional<double> blob_tilt(const ComponentBlob& blob,
                                const RenderedView& view,
                                const CameraModel& camera) {
  std::vector<Vector3d> points;
  for (int p : blob.pixels) {
    const double d = view.depth[static_cast<std::size_t>(p)];
    if (d > 0.0) points.push_back(camera.back_project(p % view.width, p / view.width, d));
  }
  if (points.size() < 2) return std::nullopt;
  Vector3d mean = Vector3d::Zero();
  for (const Vector3d& x : points) mean += x;
  mean /= static_cast<double>(points.size());
  Matrix3d cov = Matrix3d::Zero();
  for (const Vector3d& x : points) cov += (x - mean) * (x - mean).transpose();
  if (cov.trace() <= 0.0) return std::nullopt;
  Eigen::SelfAdjointEigenSolver<Matrix3d> eig(cov);
  const Vector3d axis = eig.eigenvectors().col(2);
  return std::asin(std::min(1.0, std::abs(axis.z())));
}

Selection select_target(const std::vector<ComponentBlob>& blobs,
                        const RenderedView& view, const CameraModel& camera,
                        const SelectionParams& params) {
  const std::optional<TrunkEstimate> trunk = locate_trunk(blobs, view, camera);
  if (!trunk) throw Error(Errc::kNoTrunkDetected, "no trunk blob with valid depth");

  struct Candidate {
    const ComponentBlob* blob;
    BlobCentre centre;
    double distance;
  };
  std::optional<Candidate> best;
  for (const ComponentBlob& b : blobs) {
    if (b.label != Label::kBranch) continue;
    const std::optional<BlobCentre> c = blob_centre(b, view, camera);
    if (!c) continue;
    const std::optional<double> tilt = blob_tilt(b, view, camera);
    if (!tilt || *tilt > params.max_tilt) continue;
    const Candidate cand{&b, *c, (c->world - trunk->centre).norm()};
    if (!best) {
      best = cand;
      continue;
    }
    bool better;
    if (cand.distance != best->distance) {
      better = cand.distance < best->distance;
    } else if (b.size() != best->blob->size()) {
      better = b.size() > best->blob->size();
    } else if (cand.centre.pixel.y() != best->centre.pixel.y()) {
      better = cand.centre.pixel.y() < best->centre.pixel.y();
    } else {
      better = b.first_pixel() < best->blob->first_pixel();
    }
    if (better) best = cand;
  }
  if (!best) {
    throw Error(Errc::kNoBranchDetected, "no suitable horizontal branch blob");
  }

  Selection out;
  out.perch.position = best->centre.world;
  out.perch.source_blob = best->blob->id;
  out.perch.confidence = best->centre.confidence;
  out.trunk_blob = trunk->blob->id;
  out.trunk_surface = trunk->surface;
  out.trunk_centre = trunk->centre;
  out.trunk_radius_estimate = trunk->radius;
  return out;
}

PerchPoint select_perch_point(const std::vector<ComponentBlob>& blobs,
                              const RenderedView& view,
                              const CameraModel& camera,
                              const SelectionParams& params) {
  return select_target(blobs, view, camera, params).perch;
}

namespace {

struct Overlap {
  std::size_t predicted = 0;
  std::size_t truth = 0;
  std::size_t both = 0;
};

Overlap count_overlap(const scene::MaskView& predicted,
                      const scene::MaskView& truth, Label label) {
  if (predicted.width != truth.width || predicted.height != truth.height ||
      predicted.data.size() != truth.data.size() ||
      predicted.data.size() !=
          static_cast<std::size_t>(predicted.width) *
              static_cast<std::size_t>(predicted.height)) {
    throw Error(Errc::kShapeMismatch, "masks differ in shape");
  }
  Overlap o;
  for (std::size_t i = 0; i < predicted.data.size(); ++i) {
    const bool p = predicted.data[i] == label;
    const bool t = truth.data[i] == label;
    o.predicted += p;
    o.truth += t;
    o.both += p && t;
  }
  return o;
}

}  // namespace

double dice_coefficient(const scene::MaskView& predicted,
                        const scene::MaskView& truth, Label label) {
  const Overlap o = count_overlap(predicted, truth, label);
  if (o.predicted + o.truth == 0) return 1.0;
  return 2.0 * static_cast<double>(o.both) /
         static_cast<double>(o.predicted + o.truth);
}

double iou(const scene::MaskView& predicted, const scene::MaskView& truth,
           Label label) {
  const Overlap o = count_overlap(predicted, truth, label);
  const std::size_t uni = o.predicted + o.truth - o.both;
  if (uni == 0) return 1.0;
  return static_cast<double>(o.both) / static_cast<double>(uni);
}

CameraModel placed_camera(const scene::SceneSpec& scene,
                          const CameraModel& intrinsics, double distance,
                          double camera_height, double azimuth) {
  const scene::Cylinder& trunk = scene.trunk;
  Vector3d target = trunk.origin;
  if (std::abs(trunk.direction.z()) > 1e-12) {
    target = trunk.point_at((camera_height - trunk.origin.z()) / trunk.direction.z());
  }
  const Vector3d eye =
      target + distance * Vector3d(std::cos(azimuth), std::sin(azimuth), 0.0);
  CameraModel cam = intrinsics;
  cam.pose = scene::CameraPose::look_at(eye, target);
  return cam;
}

LocalizationReport evaluate_localization(const scene::SceneSpec& scene,
                                         const CameraModel& intrinsics,
                                         const LocalizationParams& params) {
  if (params.trials < 1) {
    throw Error(Errc::kInvalidArgument, "trials must be >= 1");
  }
  scene.validate();
  LocalizationReport report;
  const scene::Cylinder& trunk = scene.trunk;

  for (std::size_t di = 0; di < params.distances.size(); ++di) {
    const double distance = params.distances[di];
    const CameraModel cam = placed_camera(scene, intrinsics, distance,
                                          params.camera_height, params.azimuth);
    const RenderedView clean = scene::render(scene, cam);

    std::vector<double> trunk_errors;
    std::vector<double> branch_errors;
    int trunk_failures = 0;
    int branch_failures = 0;
    for (int k = 0; k < params.trials; ++k) {
      TrialResult trial;
      trial.distance = distance;
      trial.trial = k;
      trial.seed = params.seed + di * static_cast<std::uint64_t>(params.trials) +
                   static_cast<std::uint64_t>(k);
      const RenderedView view = scene::corrupt_mask(clean, params.flip_rate, trial.seed);
      const std::vector<ComponentBlob> blobs = extract_components(view, params.min_pixels);

      const std::optional<TrunkEstimate> trunk_est = locate_trunk(blobs, view, cam);
      if (!trunk_est) {
        trial.failure = std::string(to_string(Errc::kNoTrunkDetected));
        ++trunk_failures;
        ++branch_failures;
        report.trials.push_back(std::move(trial));
        continue;
      }
      const Vector3d rel = trunk_est->centre - trunk.origin;
      trial.trunk_error = (rel - rel.dot(trunk.direction) * trunk.direction).norm();
      trunk_errors.push_back(*trial.trunk_error);

      try {
        const Selection sel = select_target(blobs, view, cam, params.selection);
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t b = 0; b < scene.branches.size(); ++b) {
          best = std::min(best, (sel.perch.position - scene.branch_exposed_midpoint(b)).norm());
        }
        trial.branch_error = best;
        branch_errors.push_back(best);
      } catch (const Error& e) {
        if (e.code() != Errc::kNoBranchDetected) throw;
        trial.failure = std::string(to_string(e.code()));
        ++branch_failures;
      }
      report.trials.push_back(std::move(trial));
    }

    auto summarize = [&](std::vector<double> errors, const char* target, int failures) {
      ErrorRow row{distance, target, 0, 0, 0, 0, 0, failures,
                   static_cast<int>(errors.size())};
      if (errors.empty()) {
        const double nan = std::numeric_limits<double>::quiet_NaN();
        row.mean = row.std_dev = row.p25 = row.p50 = row.p75 = nan;
        return row;
      }
      std::sort(errors.begin(), errors.end());
      const double n = static_cast<double>(errors.size());
      row.mean = std::accumulate(errors.begin(), errors.end(), 0.0) / n;
      double ss = 0.0;
      for (double e : errors) ss += (e - row.mean) * (e - row.mean);
      row.std_dev = errors.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
      row.p25 = quantile(errors, 0.25);
      row.p50 = quantile(errors, 0.50);
      row.p75 = quantile(errors, 0.75);
      return row;
    };
    report.rows.push_back(summarize(std::move(trunk_errors), "trunk", trunk_failures));
    report.rows.push_back(summarize(std::move(branch_errors), "branch", branch_failures));
  }
  return report;
}

}  // namespace perchsim::vision
