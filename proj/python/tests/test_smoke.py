# Copyright 2026 The perchsim Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

import json
import math
import os

import numpy as np
import pytest

import perchsim

CONFIG = os.environ.get(
    "PERCHSIM_DEFAULT_CONFIG",
    os.path.join(os.path.dirname(__file__), "..", "..", "configs", "default.json"),
)


def test_claw_strength_formula():
    got = perchsim.claw_strength(
        sigma_uts=6.5e7, area=2e-5, neutral_axis_radius=5e-3,
        stress_radius=4e-3, centroid_radius=6e-3, moment_arm=2e-2,
    )
    assert got == pytest.approx(6.5e7 * 2e-5 * 4e-3 * 1e-3 / (1e-3 * 2e-2), rel=1e-12)


def test_statics_on_default_mechanism():
    mech = perchsim.load_mechanism(CONFIG)
    assert perchsim.classify_regime(mech, 0.04) == "ClawHang"
    assert perchsim.classify_regime(mech, 0.09) == "LargeFullContact"
    assert perchsim.payload_capacity(mech, 0.03) == pytest.approx(2 * mech.claw_strength)
    rows = perchsim.capacity_sweep(mech, 0.03, 0.11, 81)
    assert len(rows) == 81 and rows[0]["regime"] == "ClawHang"
    cross = perchsim.crossover_diameter(mech, 0.03, 0.11, 81)
    assert 0.095 <= cross <= 0.110
    assert perchsim.crossover_diameter(mech, 0.03, 0.11, 81, weight=0.0) is None
    with pytest.raises(perchsim.Error, match="OutOfRangeAbove"):
        perchsim.classify_regime(mech, 0.2)


def test_render_and_metrics():
    labels, depth = perchsim.render_view(CONFIG, 4.0)
    assert labels.shape == depth.shape == (240, 424)
    assert (labels == perchsim.LABEL_BRANCH).any() and (labels == perchsim.LABEL_TRUNK).any()
    assert np.all(depth[labels == perchsim.LABEL_BACKGROUND] == 0.0)
    assert perchsim.dice(labels, labels, perchsim.LABEL_BRANCH) == 1.0
    shifted = np.roll(labels, 3, axis=1)
    d = perchsim.dice(labels, shifted, perchsim.LABEL_BRANCH)
    j = perchsim.iou(labels, shifted, perchsim.LABEL_BRANCH)
    assert d == pytest.approx(2 * j / (1 + j), abs=1e-12)
    with pytest.raises(perchsim.Error, match="ShapeMismatch"):
        perchsim.iou(labels, labels[:10], perchsim.LABEL_BRANCH)


def test_plan_rest_to_rest():
    traj = perchsim.plan([0, 0, 0], [1, 2, 3], [], [2.0])
    assert np.allclose(traj.evaluate(1.0), [0.5, 1.0, 1.5], atol=1e-12)
    assert np.allclose(traj.evaluate(2.0, 1), 0.0, atol=1e-12)
    multi = perchsim.plan([0, 0, 0], [2, 0, 0], [[1, 1, 0]], [1.0, 1.0])
    assert multi.durations == [1.0, 1.0]
    assert json.loads(multi.to_json())["format"] == "perchsim-trajectory/1"
    assert perchsim.allocate_times([[0, 0, 0], [3, 0, 0]], 1.5) == [2.0]


def test_mission_and_cli(tmp_path):
    summary = perchsim.run_mission(CONFIG, seed=0)
    assert summary["outcome"] == "Perched"
    assert summary["tracking"]["mean_error_m"]["3d"] <= 0.122
    code, err = perchsim.run_cli("statics", CONFIG, str(tmp_path / "out"))
    assert code == 0, err
    assert (tmp_path / "out" / "capacity_sweep.csv").exists()
    code, _ = perchsim.run_cli("plan", str(tmp_path / "missing.json"), str(tmp_path / "o2"))
    assert code == 2
    assert not math.isnan(summary["capacity_N"])
