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

#include "perchsim/scene.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include <Eigen/Geometry>
#include <json.hpp>

#include "perchsim/error.hpp"
#include "perchsim/rng.hpp"

namespace perchsim::scene {
namespace {

using Eigen::Matrix3d;
using Eigen::Vector3d;

void check_cylinder(const Cylinder& c, const std::string& what) {
  if (!(c.radius > 0.0) || !(c.length > 0.0)) {
    throw Error(Errc::kInvalidArgument,
                what + ": radius and length must be > 0");
  }
  if (std::abs(c.direction.norm() - 1.0) > 1e-9) {
    throw Error(Errc::kInvalidArgument, what + ": direction must be unit-norm");
  }
}

nlohmann::json pose_to_json(const CameraPose& pose) {
  nlohmann::json rot = nlohmann::json::array();
  for (int r = 0; r < 3; ++r) {
    rot.push_back({pose.rotation(r, 0), pose.rotation(r, 1), pose.rotation(r, 2)});
  }
  return {{"rotation", rot},
          {"translation",
           {pose.translation.x(), pose.translation.y(), pose.translation.z()}}};
}

CameraPose pose_from_json(const nlohmann::json& j) {
  CameraPose pose;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) {
      pose.rotation(r, c) = j.at("rotation").at(r).at(c).get<double>();
    }
    pose.translation[r] = j.at("translation").at(r).get<double>();
  }
  return pose;
}

// Reads the next whitespace-delimited header token of a PNM-family file.
std::string next_token(std::istream& in) {
  std::string tok;
  char ch;
  while (in.get(ch)) {
    if (ch == '#') {
      std::string skip;
      std::getline(in, skip);
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(ch))) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(ch);
  }
  return tok;
}

}  // namespace

std::string to_string(Label label) {
  switch (label) {
    case Label::kBackground: return "Background";
    case Label::kTrunk: return "Trunk";
    case Label::kBranch: return "Branch";
  }
  return "Unknown";
}

std::optional<double> Cylinder::intersect(const Vector3d& ray_origin,
                                          const Vector3d& ray_dir) const {
  const Vector3d w = ray_origin - origin;
  const double w_axial = w.dot(direction);
  const double d_axial = ray_dir.dot(direction);
  const Vector3d w_perp = w - w_axial * direction;
  const Vector3d d_perp = ray_dir - d_axial * direction;

  double best = std::numeric_limits<double>::infinity();
  auto consider = [&](double t) {
    if (t > 0.0 && t < best) best = t;
  };

  const double a = d_perp.squaredNorm();
  const double b = 2.0 * d_perp.dot(w_perp);
  const double c = w_perp.squaredNorm() - radius * radius;
  if (a > 1e-300) {
    const double disc = b * b - 4.0 * a * c;
    if (disc >= 0.0) {
      const double q = -0.5 * (b + std::copysign(std::sqrt(disc), b));
      for (double t : {q / a, q != 0.0 ? c / q : q / a}) {
        const double s = w_axial + t * d_axial;
        if (s >= 0.0 && s <= length) consider(t);
      }
    }
  }
  if (std::abs(d_axial) > 1e-300) {
    for (double cap : {0.0, length}) {
      const double t = (cap - w_axial) / d_axial;
      if ((w_perp + t * d_perp).squaredNorm() <= radius * radius) consider(t);
    }
  }
  if (std::isinf(best)) return std::nullopt;
  return best;
}

void SceneSpec::validate() const {
  check_cylinder(trunk, "trunk");
  for (std::size_t i = 0; i < branches.size(); ++i) {
    const Cylinder& b = branches[i];
    const std::string name = "branch " + std::to_string(i);
    check_cylinder(b, name);
    const Vector3d rel = b.origin - trunk.origin;
    const double s = rel.dot(trunk.direction);
    const double off_axis = (rel - s * trunk.direction).norm();
    if (off_axis > 1e-9 || s < 0.0 || s > trunk.length) {
      throw Error(Errc::kInvalidArgument,
                  name + ": attachment must lie on the trunk axis");
    }
  }
}

Vector3d SceneSpec::branch_exposed_midpoint(std::size_t index) const {
  const Cylinder& b = branches.at(index);
  const Vector3d perp =
      b.direction - b.direction.dot(trunk.direction) * trunk.direction;
  double exit = 0.0;
  if (perp.norm() > 1e-12) exit = std::min(trunk.radius / perp.norm(), b.length);
  return b.point_at(0.5 * (exit + b.length));
}

CameraPose CameraPose::look_at(const Vector3d& eye, const Vector3d& target,
                               const Vector3d& up) {
  const Vector3d z = (target - eye).normalized();
  Vector3d x = z.cross(up);
  if (x.norm() < 1e-12) x = z.unitOrthogonal();
  x.normalize();
  const Vector3d y = z.cross(x);
  CameraPose pose;
  pose.rotation.row(0) = x.transpose();
  pose.rotation.row(1) = y.transpose();
  pose.rotation.row(2) = z.transpose();
  pose.translation = -pose.rotation * eye;
  return pose;
}

void CameraModel::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) {
    throw Error(Errc::kInvalidArgument, "camera focal lengths must be > 0");
  }
  if (width <= 0 || height <= 0 || !(cx >= 0.0 && cx < width) ||
      !(cy >= 0.0 && cy < height)) {
    throw Error(Errc::kInvalidArgument,
                "camera principal point must lie inside the image");
  }
  const Matrix3d should_be_identity =
      pose.rotation * pose.rotation.transpose();
  if (!should_be_identity.isIdentity(1e-9) ||
      std::abs(pose.rotation.determinant() - 1.0) > 1e-9) {
    throw Error(Errc::kInvalidArgument,
                "camera pose rotation must be a proper rotation");
  }
}

Vector3d CameraModel::centre() const {
  return -pose.rotation.transpose() * pose.translation;
}

Vector3d CameraModel::pixel_ray(double u, double v) const {
  return {(u - cx) / fx, (v - cy) / fy, 1.0};
}

Vector3d CameraModel::back_project(double u, double v, double depth) const {
  const Vector3d cam = depth * pixel_ray(u, v);
  return pose.rotation.transpose() * (cam - pose.translation);
}

Vector3d CameraModel::project(const Vector3d& world) const {
  const Vector3d cam = pose.rotation * world + pose.translation;
  return {fx * cam.x() / cam.z() + cx, fy * cam.y() / cam.z() + cy, cam.z()};
}

RenderedView render(const SceneSpec& scene, const CameraModel& camera) {
  scene.validate();
  camera.validate();
  RenderedView view;
  view.width = camera.width;
  view.height = camera.height;
  const std::size_t n =
      static_cast<std::size_t>(camera.width) * static_cast<std::size_t>(camera.height);
  view.depth.assign(n, 0.0);
  view.labels.assign(n, Label::kBackground);

  const Vector3d eye = camera.centre();
  const Matrix3d cam_to_world = camera.pose.rotation.transpose();
  for (int v = 0; v < camera.height; ++v) {
    for (int u = 0; u < camera.width; ++u) {
      // z component of the camera-frame ray is 1, so t is the z-depth.
      const Vector3d dir = cam_to_world * camera.pixel_ray(u, v);
      double best = std::numeric_limits<double>::infinity();
      Label label = Label::kBackground;
      if (auto t = scene.trunk.intersect(eye, dir); t && *t < best) {
        best = *t;
        label = Label::kTrunk;
      }
      for (const Cylinder& b : scene.branches) {
        if (auto t = b.intersect(eye, dir); t && *t < best) {
          best = *t;
          label = Label::kBranch;
        }
      }
      if (label != Label::kBackground) {
        const std::size_t i = view.index(u, v);
        view.depth[i] = best;
        view.labels[i] = label;
      }
    }
  }
  return view;
}

RenderedView corrupt_mask(const RenderedView& view, double flip_rate,
                          std::uint64_t seed) {
  if (!(flip_rate >= 0.0 && flip_rate < 0.5)) {
    throw Error(Errc::kInvalidArgument, "flip rate must lie in [0, 0.5)");
  }
  RenderedView out = view;
  if (flip_rate == 0.0) return out;
  Rng rng(seed);
  for (Label& label : out.labels) {
    if (rng.uniform() >= flip_rate) continue;
    const auto current = static_cast<int>(label);
    const int offset = rng.coin() ? 2 : 1;
    label = static_cast<Label>((current + offset) % 3);
  }
  return out;
}

void save_view(const RenderedView& view, const CameraModel& camera,
               const std::filesystem::path& dir, const std::string& stem) {
  std::filesystem::create_directories(dir);
  const std::string depth_name = stem + "_depth.pfm";
  const std::string label_name = stem + "_labels.pgm";

  {
    std::ofstream out(dir / label_name, std::ios::binary);
    out << "P5\n" << view.width << ' ' << view.height << "\n255\n";
    for (Label l : view.labels) out.put(static_cast<char>(l));
    if (!out) throw Error(Errc::kIo, "cannot write " + label_name);
  }
  {
    // PFM stores rows bottom-to-top; negative scale marks little-endian.
    std::ofstream out(dir / depth_name, std::ios::binary);
    out << "Pf\n" << view.width << ' ' << view.height << "\n-1.0\n";
    for (int v = view.height - 1; v >= 0; --v) {
      for (int u = 0; u < view.width; ++u) {
        const auto value = static_cast<float>(view.depth[view.index(u, v)]);
        auto bits = std::bit_cast<std::uint32_t>(value);
        if constexpr (std::endian::native == std::endian::big) {
          bits = ((bits & 0xFFu) << 24) | ((bits & 0xFF00u) << 8) |
                 ((bits >> 8) & 0xFF00u) | (bits >> 24);
        }
        char bytes[4];
        std::memcpy(bytes, &bits, 4);
        out.write(bytes, 4);
      }
    }
    if (!out) throw Error(Errc::kIo, "cannot write " + depth_name);
  }

  nlohmann::ordered_json side;
  side["format"] = "perchsim-view/1";
  side["width"] = view.width;
  side["height"] = view.height;
  side["depth_file"] = depth_name;
  side["depth_encoding"] = "pfm float32 little-endian, rows bottom-to-top";
  side["depth_convention"] = "z-depth along the optical axis in metres, 0 = no hit";
  side["label_file"] = label_name;
  side["label_encoding"] = "pgm P5 maxval 255, rows top-to-bottom";
  side["labels"] = {{"0", "Background"}, {"1", "Trunk"}, {"2", "Branch"}};
  side["camera"] = {{"fx", camera.fx}, {"fy", camera.fy}, {"cx", camera.cx},
                    {"cy", camera.cy}, {"width", camera.width},
                    {"height", camera.height},
                    {"pose_world_to_camera", pose_to_json(camera.pose)}};
  std::ofstream out(dir / (stem + ".json"));
  out << side.dump(2) << '\n';
  if (!out) throw Error(Errc::kIo, "cannot write " + stem + ".json");
}

LoadedView load_view(const std::filesystem::path& sidecar) {
  std::ifstream in(sidecar);
  if (!in) throw Error(Errc::kIo, "cannot open " + sidecar.string());
  nlohmann::json side;
  try {
    side = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::kIo, sidecar.string() + ": " + e.what());
  }
  const std::filesystem::path base = sidecar.parent_path();

  LoadedView out;
  try {
    const auto& cam = side.at("camera");
    out.camera.fx = cam.at("fx").get<double>();
    out.camera.fy = cam.at("fy").get<double>();
    out.camera.cx = cam.at("cx").get<double>();
    out.camera.cy = cam.at("cy").get<double>();
    out.camera.width = cam.at("width").get<int>();
    out.camera.height = cam.at("height").get<int>();
    out.camera.pose = pose_from_json(cam.at("pose_world_to_camera"));
    out.view.width = side.at("width").get<int>();
    out.view.height = side.at("height").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::kIo, sidecar.string() + ": " + e.what());
  }
  RenderedView& view = out.view;
  const std::size_t n =
      static_cast<std::size_t>(view.width) * static_cast<std::size_t>(view.height);

  {
    const auto path = base / side.at("label_file").get<std::string>();
    std::ifstream img(path, std::ios::binary);
    if (next_token(img) != "P5" || std::stoi(next_token(img)) != view.width ||
        std::stoi(next_token(img)) != view.height || next_token(img) != "255") {
      throw Error(Errc::kIo, "unexpected label image header in " + path.string());
    }
    std::vector<char> raw(n);
    img.read(raw.data(), static_cast<std::streamsize>(n));
    if (!img) throw Error(Errc::kIo, "truncated label image " + path.string());
    view.labels.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto value = static_cast<unsigned char>(raw[i]);
      if (value > 2) throw Error(Errc::kIo, "invalid label value in " + path.string());
      view.labels[i] = static_cast<Label>(value);
    }
  }
  {
    const auto path = base / side.at("depth_file").get<std::string>();
    std::ifstream img(path, std::ios::binary);
    if (next_token(img) != "Pf" || std::stoi(next_token(img)) != view.width ||
        std::stoi(next_token(img)) != view.height) {
      throw Error(Errc::kIo, "unexpected depth image header in " + path.string());
    }
    const bool little = std::stod(next_token(img)) < 0.0;
    view.depth.assign(n, 0.0);
    for (int v = view.height - 1; v >= 0; --v) {
      for (int u = 0; u < view.width; ++u) {
        char bytes[4];
        img.read(bytes, 4);
        std::uint32_t bits;
        std::memcpy(&bits, bytes, 4);
        const bool swap = little != (std::endian::native == std::endian::little);
        if (swap) {
          bits = ((bits & 0xFFu) << 24) | ((bits & 0xFF00u) << 8) |
                 ((bits >> 8) & 0xFF00u) | (bits >> 24);
        }
        view.depth[view.index(u, v)] = std::bit_cast<float>(bits);
      }
    }
    if (!img) throw Error(Errc::kIo, "truncated depth image " + path.string());
  }
  return out;
}

}  // namespace perchsim::scene
