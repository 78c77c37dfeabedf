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

#include <cstring>
#include <sstream>

#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "perchsim/cli.hpp"
#include "perchsim/config.hpp"
#include "perchsim/error.hpp"
#include "perchsim/planner.hpp"
#include "perchsim/scene.hpp"
#include "perchsim/simctrl.hpp"
#include "perchsim/statics.hpp"
#include "perchsim/vision.hpp"

namespace py = pybind11;
using namespace perchsim;

namespace {

using LabelArray = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;

std::vector<scene::Label> to_labels(const LabelArray& a, int& width, int& height) {
  if (a.ndim() != 2) throw Error(Errc::kInvalidArgument, "mask must be a 2-D array");
  height = static_cast<int>(a.shape(0));
  width = static_cast<int>(a.shape(1));
  std::vector<scene::Label> out(static_cast<std::size_t>(a.size()));
  const std::uint8_t* p = a.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<scene::Label>(p[i]);
  return out;
}

template <typename Fn>
double mask_metric(const LabelArray& predicted, const LabelArray& truth, int label, Fn fn) {
  int pw = 0, ph = 0, tw = 0, th = 0;
  const auto p = to_labels(predicted, pw, ph);
  const auto t = to_labels(truth, tw, th);
  return fn(scene::MaskView{pw, ph, p}, scene::MaskView{tw, th, t}, static_cast<scene::Label>(label));
}

py::dict sweep_row(const statics::SweepRow& r) {
  py::dict d;
  d["diameter_m"] = r.diameter;
  d["capacity_N"] = r.capacity ? py::cast(*r.capacity) : py::none();
  d["regime"] = r.regime ? py::cast(statics::to_string(*r.regime)) : py::none();
  d["note"] = r.note;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Bindings for the perchsim library";

  PYBIND11_CONSTINIT static py::gil_safe_call_once_and_store<py::object> error_type;
  error_type.call_once_and_store_result(
      [&]() { return py::exception<Error>(m, "Error", PyExc_RuntimeError); });
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      const std::string msg = std::string(to_string(e.code())) + ": " + e.what();
      py::set_error(error_type.get_stored(), msg.c_str());
    }
  });

  py::class_<statics::MechanismSpec>(m, "MechanismSpec")
      .def_readwrite("platform_weight", &statics::MechanismSpec::platform_weight)
      .def_readwrite("bark_interlock", &statics::MechanismSpec::bark_interlock)
      .def_property_readonly("claw_strength",
                             [](const statics::MechanismSpec& s) { return statics::claw_strength(s.claw); });

  m.def("load_mechanism", [](const std::filesystem::path& p) { return config::load_statics(p).mechanism; },
        py::arg("config"));
  m.def(
      "claw_strength",
      [](double sigma_uts, double area, double neutral_axis_radius, double stress_radius,
         double centroid_radius, double moment_arm) {
        statics::ClawGeometry c;
        c.sigma_uts = sigma_uts;
        c.area = area;
        c.neutral_axis_radius = neutral_axis_radius;
        c.stress_radius = stress_radius;
        c.centroid_radius = centroid_radius;
        c.moment_arm = moment_arm;
        c.curvature_diameter = 1.0;
        return statics::claw_strength(c);
      },
      py::arg("sigma_uts"), py::arg("area"), py::arg("neutral_axis_radius"), py::arg("stress_radius"),
      py::arg("centroid_radius"), py::arg("moment_arm"));
  m.def(
      "classify_regime",
      [](const statics::MechanismSpec& s, double d) {
        return statics::to_string(statics::classify_regime(d, s.chain, s.claw));
      },
      py::arg("mechanism"), py::arg("diameter"));
  m.def(
      "payload_capacity",
      [](const statics::MechanismSpec& s, double d) { return statics::payload_capacity(s, {d, s.platform_weight}); },
      py::arg("mechanism"), py::arg("diameter"));
  m.def(
      "capacity_sweep",
      [](const statics::MechanismSpec& s, double d_min, double d_max, int steps) {
        py::list out;
        for (const auto& r : statics::capacity_sweep(s, d_min, d_max, steps)) out.append(sweep_row(r));
        return out;
      },
      py::arg("mechanism"), py::arg("d_min"), py::arg("d_max"), py::arg("steps"));
  m.def(
      "crossover_diameter",
      [](const statics::MechanismSpec& s, double d_min, double d_max, int steps, std::optional<double> weight) {
        const auto rows = statics::capacity_sweep(s, d_min, d_max, steps);
        return statics::crossover_diameter(s, rows, weight.value_or(s.platform_weight));
      },
      py::arg("mechanism"), py::arg("d_min"), py::arg("d_max"), py::arg("steps"), py::arg("weight") = py::none());

  m.def(
      "render_view",
      [](const std::filesystem::path& p, double distance, std::optional<double> height,
         std::optional<double> azimuth) {
        const auto run = config::load_select_eval(p);
        const auto cam = vision::placed_camera(run.scene, run.camera, distance,
                                               height.value_or(run.params.camera_height),
                                               azimuth.value_or(run.params.azimuth));
        const auto view = scene::render(run.scene, cam);
        LabelArray labels({view.height, view.width});
        py::array_t<double> depth({view.height, view.width});
        std::memcpy(labels.mutable_data(), view.labels.data(), view.labels.size());
        std::memcpy(depth.mutable_data(), view.depth.data(), view.depth.size() * sizeof(double));
        return py::make_tuple(labels, depth);
      },
      py::arg("config"), py::arg("distance"), py::arg("height") = py::none(), py::arg("azimuth") = py::none());
  m.def(
      "dice",
      [](const LabelArray& p, const LabelArray& t, int label) {
        return mask_metric(p, t, label, vision::dice_coefficient);
      },
      py::arg("predicted"), py::arg("truth"), py::arg("label"));
  m.def(
      "iou",
      [](const LabelArray& p, const LabelArray& t, int label) { return mask_metric(p, t, label, vision::iou); },
      py::arg("predicted"), py::arg("truth"), py::arg("label"));

  py::class_<planner::Trajectory>(m, "Trajectory")
      .def_property_readonly("durations", &planner::Trajectory::durations)
      .def_property_readonly("total_duration", &planner::Trajectory::total_duration)
      .def_property_readonly("snap_cost", &planner::Trajectory::snap_cost)
      .def_property_readonly("ill_conditioned", [](const planner::Trajectory& t) { return !t.warnings.empty(); })
      .def("evaluate", [](const planner::Trajectory& t, double time, int order) {
            return planner::evaluate(t, time, order);
          },
          py::arg("t"), py::arg("order") = 0)
      .def("to_json", [](const planner::Trajectory& t) { return planner::to_json(t); });
  m.def(
      "plan",
      [](const Eigen::Vector3d& start, const Eigen::Vector3d& end, const std::vector<Eigen::Vector3d>& waypoints,
         const std::vector<double>& durations) {
        return planner::plan_waypoints(planner::BoundaryState::at_rest(start), planner::BoundaryState::at_rest(end),
                                       waypoints, durations);
      },
      py::arg("start"), py::arg("end"), py::arg("waypoints"), py::arg("durations"));
  m.def(
      "allocate_times",
      [](const std::vector<Eigen::Vector3d>& points, double avg_speed, double min_duration) {
        return planner::allocate_times(points, avg_speed, min_duration);
      },
      py::arg("points"), py::arg("avg_speed"), py::arg("min_duration") = 0.5);

  m.def(
      "mission_summary_json",
      [](const std::filesystem::path& p, std::uint64_t seed) {
        const auto run = config::load_mission(p);
        return simctrl::summary_json(simctrl::run_mission(run.mission, run.mechanism, seed));
      },
      py::arg("config"), py::arg("seed") = 0);

  m.def(
      "run_cli",
      [](const std::string& subcommand, const std::filesystem::path& config, const std::filesystem::path& out,
         std::optional<std::uint64_t> seed, bool strict) {
        cli::Options o;
        if (subcommand == "statics") o.subcommand = cli::Subcommand::kStatics;
        else if (subcommand == "select-eval") o.subcommand = cli::Subcommand::kSelectEval;
        else if (subcommand == "plan") o.subcommand = cli::Subcommand::kPlan;
        else if (subcommand == "mission") o.subcommand = cli::Subcommand::kMission;
        else throw Error(Errc::kInvalidArgument, "unknown subcommand " + subcommand);
        o.config = config;
        o.out_dir = out;
        o.seed = seed;
        o.strict = strict;
        std::ostringstream err;
        const int code = cli::run(o, err);
        return py::make_tuple(code, err.str());
      },
      py::arg("subcommand"), py::arg("config"), py::arg("out"), py::arg("seed") = py::none(),
      py::arg("strict") = false);
}
