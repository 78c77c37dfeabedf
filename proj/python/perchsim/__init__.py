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

"""Python interface to the perchsim simulator."""

import json as _json

from ._core import (
    Error,
    MechanismSpec,
    Trajectory,
    allocate_times,
    capacity_sweep,
    classify_regime,
    claw_strength,
    crossover_diameter,
    dice,
    iou,
    load_mechanism,
    payload_capacity,
    plan,
    render_view,
    run_cli,
)
from ._core import mission_summary_json as _mission_summary_json

LABEL_BACKGROUND = 0
LABEL_TRUNK = 1
LABEL_BRANCH = 2


def run_mission(config, seed=0):
    """Runs the perching mission described by `config` and returns its summary."""
    return _json.loads(_mission_summary_json(config, seed))


__all__ = [
    "Error",
    "MechanismSpec",
    "Trajectory",
    "LABEL_BACKGROUND",
    "LABEL_TRUNK",
    "LABEL_BRANCH",
    "allocate_times",
    "capacity_sweep",
    "classify_regime",
    "claw_strength",
    "crossover_diameter",
    "dice",
    "iou",
    "load_mechanism",
    "payload_capacity",
    "plan",
    "render_view",
    "run_cli",
    "run_mission",
]
