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

#include <algorithm>
#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "perchsim/config.hpp"
#include "perchsim/error.hpp"
#include "perchsim/vision.hpp"

namespace perchsim::vision {
namespace {

using Eigen::Vector3d;
using scene::RenderedView;

config::SelectEvalRun defaults() { return config::load_select_eval(PERCHSIM_DEFAULT_CONFIG); }

RenderedView blank(int w, int h) {
  RenderedView v;
  v.width = w;
  v.height = h;
  v.labels.assign(static_cast<std::size_t>(w * h), Label::kBackground);
  v.depth.assign(static_cast<std::size_t>(w * h), 0.0);
  return v;
}

void paint(RenderedView& v, int u0, int v0, int w, int h, Label l, double depth) {
  for (int r = v0; r < v0 + h; ++r) {
    for (int u = u0; u < u0 + w; ++u) {
      v.labels[v.index(u, r)] = l;
      v.depth[v.index(u, r)] = depth;
    }
  }
}

Errc code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an Error";
  return Errc::kInvalidArgument;
}

TEST(Components, EmptyView) {
  EXPECT_TRUE(extract_components(blank(20, 10), 1).empty());
  EXPECT_EQ(code_of([] { extract_components(blank(2, 2), 0); }), Errc::kInvalidArgument);
}

TEST(Components, SizeOrderAndLabels) {
  RenderedView v = blank(100, 60);
  paint(v, 0, 0, 30, 10, Label::kBranch, 2.0);    // 300 px
  paint(v, 50, 20, 50, 10, Label::kBranch, 2.0);  // 500 px
  paint(v, 0, 40, 5, 5, Label::kTrunk, 2.0);      // 25 px
  const auto blobs = extract_components(v, 1);
  ASSERT_EQ(blobs.size(), 3u);
  EXPECT_EQ(blobs[0].label, Label::kTrunk);
  EXPECT_EQ(blobs[1].size(), 500u);
  EXPECT_EQ(blobs[2].size(), 300u);
  for (std::size_t i = 0; i < blobs.size(); ++i) {
    EXPECT_EQ(blobs[i].id, static_cast<int>(i));
    EXPECT_GE(blobs[i].centroid.x(), blobs[i].bbox.min_u);
    EXPECT_LE(blobs[i].centroid.x(), blobs[i].bbox.max_u);
    EXPECT_GE(blobs[i].centroid.y(), blobs[i].bbox.min_v);
    EXPECT_LE(blobs[i].centroid.y(), blobs[i].bbox.max_v);
  }
  EXPECT_EQ(extract_components(v, 26).size(), 2u);
}

TEST(Components, DiagonalPixelsAreSeparate) {
  RenderedView v = blank(4, 4);
  paint(v, 0, 0, 1, 1, Label::kBranch, 1.0);
  paint(v, 1, 1, 1, 1, Label::kBranch, 1.0);
  EXPECT_EQ(extract_components(v, 1).size(), 2u);
}

TEST(Components, MatchesFloodFillOracleOnNoisyMask) {
  const auto run = defaults();
  for (double dist : {1.0, 4.0}) {
    const auto cam = placed_camera(run.scene, run.camera, dist, 1.5, M_PI);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const RenderedView v = scene::corrupt_mask(scene::render(run.scene, cam), 0.05, seed);
      const auto blobs = extract_components(v, 20);
      EXPECT_EQ(static_cast<int>(blobs.size()), oracle::count_components(v.labels, v.width, v.height, 20));
    }
  }
}

TEST(Selection, PrincipalPointBackProjection) {
  scene::CameraModel cam = defaults().camera;
  const Vector3d p = cam.back_project(cam.cx, cam.cy, 3.5);
  EXPECT_NEAR(p.x(), 0.0, 1e-15);
  EXPECT_NEAR(p.y(), 0.0, 1e-15);
  EXPECT_NEAR(p.z(), 3.5, 1e-15);
}

TEST(Selection, DefaultSceneAtFourMetres) {
  const auto run = defaults();
  const auto cam = placed_camera(run.scene, run.camera, 4.0, 1.5, M_PI);
  const RenderedView v = scene::render(run.scene, cam);
  const auto blobs = extract_components(v, 20);
  const PerchPoint p = select_perch_point(blobs, v, cam);
  EXPECT_LT((p.position - run.scene.branch_exposed_midpoint(0)).norm(), 0.05);
  EXPECT_DOUBLE_EQ(p.confidence, 1.0);
  const auto& blob = blobs[static_cast<std::size_t>(p.source_blob)];
  EXPECT_EQ(blob.label, Label::kBranch);
  const auto centre = blob_centre(blob, v, cam);
  const Vector3d px = cam.project(p.position);
  EXPECT_LT((px.head<2>() - centre->pixel).norm(), 0.5);
}

TEST(Selection, InvariantUnderPermutationAndRelabel) {
  const auto run = defaults();
  const auto cam = placed_camera(run.scene, run.camera, 4.0, 1.5, M_PI);
  const RenderedView v = scene::corrupt_mask(scene::render(run.scene, cam), 0.05, 11);
  auto blobs = extract_components(v, 2);
  ASSERT_GT(blobs.size(), 2u);
  const PerchPoint ref = select_perch_point(blobs, v, cam);
  std::mt19937 rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    std::shuffle(blobs.begin(), blobs.end(), rng);
    for (auto& b : blobs) b.id = static_cast<int>(rng() % 1000);
    const PerchPoint p = select_perch_point(blobs, v, cam);
    EXPECT_EQ(p.position, ref.position);
    EXPECT_EQ(p.confidence, ref.confidence);
  }
}

TEST(Selection, ChoosesBruteForceClosestBranch) {
  auto run = defaults();
  scene::Cylinder second = run.scene.branches[0];
  second.origin = {0, 0, 1.2};
  second.direction = {0, -1, 0};
  second.length = 0.6;
  run.scene.branches.push_back(second);
  const auto cam = placed_camera(run.scene, run.camera, 4.0, 1.5, M_PI);
  const RenderedView v = scene::render(run.scene, cam);
  const auto blobs = extract_components(v, 20);
  const Selection sel = select_target(blobs, v, cam);

  // Largest trunk blob, then the branch blob with the nearest centre.
  const ComponentBlob* trunk = nullptr;
  for (const auto& b : blobs) {
    if (b.label == Label::kTrunk && (!trunk || b.size() > trunk->size())) trunk = &b;
  }
  ASSERT_NE(trunk, nullptr);
  EXPECT_EQ(sel.trunk_blob, trunk->id);
  double best = 1e9;
  int best_id = -1;
  for (const auto& b : blobs) {
    if (b.label != Label::kBranch) continue;
    const double d = (blob_centre(b, v, cam)->world - sel.trunk_centre).norm();
    if (d < best) {
      best = d;
      best_id = b.id;
    }
  }
  EXPECT_EQ(sel.perch.source_blob, best_id);
  EXPECT_LT((sel.perch.position - run.scene.branch_exposed_midpoint(1)).norm(), 0.05);
}

TEST(Selection, SteepBranchIsNotSuitable) {
  auto run = defaults();
  const double a = 60.0 * M_PI / 180.0;
  run.scene.branches[0].direction = {0, std::cos(a), std::sin(a)};
  run.scene.branches[0].length = 0.9;
  const auto cam = placed_camera(run.scene, run.camera, 4.0, 1.5, M_PI);
  const RenderedView v = scene::render(run.scene, cam);
  const auto blobs = extract_components(v, 20);
  EXPECT_EQ(code_of([&] { select_perch_point(blobs, v, cam); }), Errc::kNoBranchDetected);
  SelectionParams loose;
  loose.max_tilt = 70.0 * M_PI / 180.0;
  EXPECT_NO_THROW(select_perch_point(blobs, v, cam, loose));
}

TEST(Selection, MissingTrunkOrBranch) {
  const auto cam = defaults().camera;
  RenderedView v = blank(cam.width, cam.height);
  paint(v, 10, 10, 40, 5, Label::kBranch, 3.0);
  EXPECT_EQ(code_of([&] { select_perch_point(extract_components(v, 1), v, cam); }),
            Errc::kNoTrunkDetected);
  RenderedView t = blank(cam.width, cam.height);
  paint(t, 10, 10, 20, 60, Label::kTrunk, 3.0);
  EXPECT_EQ(code_of([&] { select_perch_point(extract_components(t, 1), t, cam); }),
            Errc::kNoBranchDetected);
}

TEST(Metrics, HandCounts) {
  std::vector<Label> p(400, Label::kBackground), t(400, Label::kBackground);
  for (int i = 0; i < 150; ++i) p[static_cast<std::size_t>(i)] = Label::kBranch;
  for (int i = 75; i < 175; ++i) t[static_cast<std::size_t>(i)] = Label::kBranch;
  const scene::MaskView pm{20, 20, p}, tm{20, 20, t};
  EXPECT_DOUBLE_EQ(dice_coefficient(pm, tm, Label::kBranch), 0.6);
  EXPECT_NEAR(iou(pm, tm, Label::kBranch), 75.0 / 175.0, 1e-15);
  EXPECT_EQ(dice_coefficient(pm, pm, Label::kBranch), 1.0);
  EXPECT_EQ(iou(pm, pm, Label::kBranch), 1.0);
  EXPECT_EQ(dice_coefficient(pm, tm, Label::kTrunk), 1.0);
  std::vector<Label> q(400, Label::kBackground);
  for (int i = 200; i < 300; ++i) q[static_cast<std::size_t>(i)] = Label::kBranch;
  const scene::MaskView qm{20, 20, q};
  EXPECT_EQ(dice_coefficient(pm, qm, Label::kBranch), 0.0);
  EXPECT_EQ(iou(pm, qm, Label::kBranch), 0.0);
  const scene::MaskView wrong{10, 40, q};
  EXPECT_EQ(code_of([&] { dice_coefficient(pm, wrong, Label::kBranch); }), Errc::kShapeMismatch);
  EXPECT_EQ(code_of([&] { iou(pm, wrong, Label::kBranch); }), Errc::kShapeMismatch);
}

TEST(Localization, NoiseFreeTrunkAndDeterminism) {
  auto run = defaults();
  run.params.flip_rate = 0.0;
  const LocalizationReport r = evaluate_localization(run.scene, run.camera, run.params);
  ASSERT_EQ(r.rows.size(), 6u);
  EXPECT_EQ(r.trials.size(), 15u);
  for (const auto& row : r.rows) {
    if (row.target == "trunk") EXPECT_LT(row.mean, 0.05);
    EXPECT_EQ(row.failures, 0);
    EXPECT_EQ(row.samples, 5);
  }
  EXPECT_LT(r.rows[3].mean, 0.05);  // branch at 4 m
  for (std::size_t i = 0; i < r.trials.size(); ++i) EXPECT_EQ(r.trials[i].seed, i);

  run.params.flip_rate = 0.05;
  run.params.trials = 1;
  const auto a = evaluate_localization(run.scene, run.camera, run.params);
  const auto b = evaluate_localization(run.scene, run.camera, run.params);
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    EXPECT_EQ(a.rows[i].mean, b.rows[i].mean);
    EXPECT_EQ(a.rows[i].failures, b.rows[i].failures);
  }
}

TEST(Localization, QuartilesAndSampleStd) {
  auto run = defaults();
  run.params.distances = {4.0};
  run.params.trials = 6;
  const LocalizationReport r = evaluate_localization(run.scene, run.camera, run.params);
  std::vector<double> e;
  for (const auto& t : r.trials) e.push_back(*t.trunk_error);
  std::sort(e.begin(), e.end());
  double mean = 0;
  for (double x : e) mean += x / 6;
  double ss = 0;
  for (double x : e) ss += (x - mean) * (x - mean);
  EXPECT_NEAR(r.rows[0].mean, mean, 1e-15);
  EXPECT_NEAR(r.rows[0].std_dev, std::sqrt(ss / 5), 1e-15);
  EXPECT_NEAR(r.rows[0].p25, e[1] + 0.25 * (e[2] - e[1]), 1e-15);
  EXPECT_NEAR(r.rows[0].p50, 0.5 * (e[2] + e[3]), 1e-15);
  EXPECT_NEAR(r.rows[0].p75, e[3] + 0.75 * (e[4] - e[3]), 1e-15);
}

}  // namespace
}  // namespace perchsim::vision
