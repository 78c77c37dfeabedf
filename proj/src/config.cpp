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

#include "perchsim/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <map>
#include <sstream>
#include <tuple>

#include <json.hpp>

#include "perchsim/error.hpp"

namespace perchsim::config {
namespace {

using Eigen::Vector3d;
using Json = nlohmann::json;

std::string escape_token(const std::string& key) {
  std::string out;
  for (char c : key) {
    if (c == '~') out += "~0";
    else if (c == '/') out += "~1";
    else out += c;
  }
  return out;
}

class Scanner {
 public:
  explicit Scanner(const std::string& text) : s_(text) {}

  std::vector<std::pair<std::string, int>> run() {
    skip_ws();
    value("");
    return std::move(out_);
  }

 private:
  void skip_ws() {
    while (i_ < s_.size() && (s_[i_] == ' ' || s_[i_] == '\t' || s_[i_] == '\n' || s_[i_] == '\r')) {
      if (s_[i_] == '\n') ++line_;
      ++i_;
    }
  }

  std::string string_token() {
    std::string raw;
    ++i_;
    while (i_ < s_.size() && s_[i_] != '"') {
      if (s_[i_] == '\\' && i_ + 1 < s_.size()) {
        raw += s_[i_];
        ++i_;
      }
      raw += s_[i_];
      ++i_;
    }
    ++i_;
    return Json::parse("\"" + raw + "\"").get<std::string>();
  }

  void value(const std::string& ptr) {
    out_.emplace_back(ptr, line_);
    if (i_ >= s_.size()) return;
    const char c = s_[i_];
    if (c == '{') {
      ++i_;
      skip_ws();
      while (i_ < s_.size() && s_[i_] != '}') {
        const std::string key = string_token();
        skip_ws();
        ++i_;  // ':'
        skip_ws();
        value(ptr + "/" + escape_token(key));
        skip_ws();
        if (i_ < s_.size() && s_[i_] == ',') {
          ++i_;
          skip_ws();
        }
      }
      ++i_;
    } else if (c == '[') {
      ++i_;
      skip_ws();
      int index = 0;
      while (i_ < s_.size() && s_[i_] != ']') {
        value(ptr + "/" + std::to_string(index++));
        skip_ws();
        if (i_ < s_.size() && s_[i_] == ',') {
          ++i_;
          skip_ws();
        }
      }
      ++i_;
    } else if (c == '"') {
      string_token();
    } else {
      while (i_ < s_.size() && s_[i_] != ',' && s_[i_] != '}' && s_[i_] != ']' &&
             s_[i_] != ' ' && s_[i_] != '\n' && s_[i_] != '\r' && s_[i_] != '\t') {
        ++i_;
      }
    }
  }

  const std::string& s_;
  std::size_t i_ = 0;
  int line_ = 1;
  std::vector<std::pair<std::string, int>> out_;
};

class Document {
 public:
  explicit Document(const std::filesystem::path& path) : path_(path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::kConfigSchema, path.string() + ":0: cannot open config file");
    std::ostringstream ss;
    ss << in.rdbuf();
    const std::string text = ss.str();
    try {
      root_ = Json::parse(text);
    } catch (const Json::parse_error& e) {
      const auto line = 1 + std::count(text.begin(),
                                       text.begin() + static_cast<std::ptrdiff_t>(
                                                          std::min(e.byte, text.size())),
                                       '\n');
      throw Error(Errc::kConfigSchema, path.string() + ":" + std::to_string(line) +
                                           ": invalid JSON: " + e.what());
    }
    for (auto& [ptr, line] : locate_pointers(text)) lines_.emplace(ptr, line);
  }

  const Json& root() const { return root_; }

  [[noreturn]] void fail(const std::string& ptr, const std::string& msg) const {
    const auto it = lines_.find(ptr);
    const int line = it == lines_.end() ? 0 : it->second;
    throw Error(Errc::kConfigSchema, path_.string() + ":" + std::to_string(line) + ": " +
                                         (ptr.empty() ? "/" : ptr) + ": " + msg);
  }

 private:
  std::filesystem::path path_;
  Json root_;
  std::map<std::string, int> lines_;
};

class Node {
 public:
  Node(const Document& doc, const Json& value, std::string ptr)
      : doc_(&doc), v_(&value), ptr_(std::move(ptr)) {}

  [[noreturn]] void fail(const std::string& msg) const { doc_->fail(ptr_, msg); }

  std::optional<Node> find(const std::string& key) const {
    expect_object();
    const auto it = v_->find(key);
    if (it == v_->end() || it->is_null()) return std::nullopt;
    return Node(*doc_, *it, ptr_ + "/" + escape_token(key));
  }

  Node at(const std::string& key) const {
    auto n = find(key);
    if (!n) fail("missing required key \"" + key + "\"");
    return *n;
  }

  void allow_only(std::initializer_list<const char*> keys) const {
    expect_object();
    for (auto it = v_->begin(); it != v_->end(); ++it) {
      bool known = false;
      for (const char* k : keys) known = known || it.key() == k;
      if (!known) {
        Node(*doc_, it.value(), ptr_ + "/" + escape_token(it.key())).fail("unknown key");
      }
    }
  }

  std::size_t size() const {
    expect_array();
    return v_->size();
  }

  Node operator[](std::size_t i) const {
    expect_array();
    return Node(*doc_, (*v_)[i], ptr_ + "/" + std::to_string(i));
  }

  double number() const {
    if (!v_->is_number()) fail("expected a number");
    const double x = v_->get<double>();
    if (!std::isfinite(x)) fail("expected a finite number");
    return x;
  }

  double positive() const {
    const double x = number();
    if (!(x > 0.0)) fail("must be > 0");
    return x;
  }

  double non_negative() const {
    const double x = number();
    if (!(x >= 0.0)) fail("must be >= 0");
    return x;
  }

  long long integer() const {
    if (!v_->is_number_integer()) fail("expected an integer");
    return v_->get<long long>();
  }

  bool boolean() const {
    if (!v_->is_boolean()) fail("expected true or false");
    return v_->get<bool>();
  }

  std::vector<double> numbers() const {
    std::vector<double> out;
    for (std::size_t i = 0; i < size(); ++i) out.push_back((*this)[i].number());
    return out;
  }

  Vector3d vec3() const {
    if (size() != 3) fail("expected an array of 3 numbers");
    return {(*this)[0].number(), (*this)[1].number(), (*this)[2].number()};
  }

  // Runs `fn`, reporting library validation errors at this node.
  template <typename Fn>
  void check(Fn&& fn) const {
    try {
      fn();
    } catch (const Error& e) {
      if (e.code() == Errc::kConfigSchema) throw;
      fail(e.what());
    }
  }

 private:
  void expect_object() const {
    if (!v_->is_object()) fail("expected an object");
  }
  void expect_array() const {
    if (!v_->is_array()) fail("expected an array");
  }

  const Document* doc_;
  const Json* v_;
  std::string ptr_;
};

Node root_node(const Document& doc) {
  Node root(doc, doc.root(), "");
  root.allow_only({"seed", "mechanism", "statics", "scene", "camera", "vision", "select_eval",
                   "planner", "plan", "mission"});
  return root;
}

statics::MechanismSpec parse_mechanism(const Node& n) {
  n.allow_only({"platform_weight", "bark_interlock", "claw", "chain"});
  statics::MechanismSpec m;
  m.platform_weight = n.at("platform_weight").non_negative();
  m.bark_interlock = n.at("bark_interlock").boolean();

  const Node claw = n.at("claw");
  claw.allow_only({"sigma_uts", "area", "neutral_axis_radius", "stress_radius",
                   "centroid_radius", "moment_arm", "curvature_diameter"});
  m.claw.sigma_uts = claw.at("sigma_uts").non_negative();
  m.claw.area = claw.at("area").positive();
  m.claw.neutral_axis_radius = claw.at("neutral_axis_radius").positive();
  m.claw.stress_radius = claw.at("stress_radius").positive();
  m.claw.centroid_radius = claw.at("centroid_radius").positive();
  m.claw.moment_arm = claw.at("moment_arm").positive();
  m.claw.curvature_diameter = claw.at("curvature_diameter").positive();
  claw.check([&] { m.claw.validate(); });

  const Node chain = n.at("chain");
  chain.allow_only({"segment_lengths", "joints", "friction_mu", "clearances"});
  m.chain.segment_lengths = chain.at("segment_lengths").numbers();
  m.chain.friction_mu = chain.at("friction_mu").numbers();
  const Node joints = chain.at("joints");
  for (std::size_t i = 0; i < joints.size(); ++i) {
    const Node j = joints[i];
    j.allow_only({"stiffness", "rest_angle", "open_angle"});
    statics::JointSpec spec;
    spec.stiffness = j.at("stiffness").positive();
    spec.rest_angle = j.at("rest_angle").positive();
    spec.open_angle = j.at("open_angle").positive();
    j.check([&] { spec.validate(); });
    m.chain.joints.push_back(spec);
  }
  const Node cl = chain.at("clearances");
  cl.allow_only({"min_diameter", "wrap_clearance", "max_open_clearance"});
  m.chain.clearances.min_diameter = cl.at("min_diameter").positive();
  m.chain.clearances.wrap_clearance = cl.at("wrap_clearance").positive();
  m.chain.clearances.max_open_clearance = cl.at("max_open_clearance").positive();
  chain.check([&] { m.chain.validate(); });
  n.check([&] { m.validate(); });
  return m;
}

scene::Cylinder parse_cylinder(const Node& n) {
  n.allow_only({"origin", "direction", "radius", "length"});
  scene::Cylinder c;
  c.origin = n.at("origin").vec3();
  c.direction = n.at("direction").vec3();
  c.radius = n.at("radius").positive();
  c.length = n.at("length").positive();
  if (std::abs(c.direction.norm() - 1.0) > 1e-9) n.at("direction").fail("must be a unit vector");
  return c;
}

scene::SceneSpec parse_scene(const Node& n) {
  n.allow_only({"trunk", "branches"});
  scene::SceneSpec s;
  s.trunk = parse_cylinder(n.at("trunk"));
  const Node branches = n.at("branches");
  for (std::size_t i = 0; i < branches.size(); ++i) s.branches.push_back(parse_cylinder(branches[i]));
  n.check([&] { s.validate(); });
  return s;
}

scene::CameraModel parse_camera(const Node& n) {
  n.allow_only({"fx", "fy", "cx", "cy", "width", "height"});
  scene::CameraModel c;
  c.fx = n.at("fx").positive();
  c.fy = n.at("fy").positive();
  c.cx = n.at("cx").number();
  c.cy = n.at("cy").number();
  c.width = static_cast<int>(n.at("width").integer());
  c.height = static_cast<int>(n.at("height").integer());
  n.check([&] { c.validate(); });
  return c;
}

struct VisionSection {
  int min_pixels;
  vision::SelectionParams selection;
};

VisionSection parse_vision(const Node& n) {
  n.allow_only({"min_pixels", "max_tilt"});
  VisionSection v;
  const long long mp = n.at("min_pixels").integer();
  if (mp < 1) n.at("min_pixels").fail("must be >= 1");
  v.min_pixels = static_cast<int>(mp);
  v.selection.max_tilt = n.at("max_tilt").positive();
  return v;
}

planner::BoundaryState parse_state(const Node& n) {
  n.allow_only({"position", "velocity", "acceleration", "jerk"});
  planner::BoundaryState s;
  s.position = n.at("position").vec3();
  if (auto v = n.find("velocity")) s.velocity = v->vec3();
  if (auto a = n.find("acceleration")) s.acceleration = a->vec3();
  if (auto j = n.find("jerk")) s.jerk = j->vec3();
  return s;
}

std::pair<double, double> parse_planner(const Node& n) {
  n.allow_only({"avg_speed", "min_segment_duration"});
  return {n.at("avg_speed").positive(), n.at("min_segment_duration").positive()};
}

}  // namespace

std::vector<std::pair<std::string, int>> locate_pointers(const std::string& text) {
  return Scanner(text).run();
}

RunConfig load_run(const std::filesystem::path& path) {
  const Document doc(path);
  const Node root = root_node(doc);
  RunConfig r;
  r.path = path;
  if (auto s = root.find("seed")) {
    const long long v = s->integer();
    if (v < 0) s->fail("must be >= 0");
    r.seed = static_cast<std::uint64_t>(v);
  }
  return r;
}

StaticsRun load_statics(const std::filesystem::path& path) {
  const Document doc(path);
  const Node root = root_node(doc);
  StaticsRun r;
  r.mechanism = parse_mechanism(root.at("mechanism"));
  const Node s = root.at("statics");
  s.allow_only({"d_min", "d_max", "steps"});
  r.d_min = s.at("d_min").positive();
  r.d_max = s.at("d_max").positive();
  if (!(r.d_max > r.d_min)) s.at("d_max").fail("must be greater than d_min");
  const long long steps = s.at("steps").integer();
  if (steps < 2) s.at("steps").fail("must be >= 2");
  r.steps = static_cast<int>(steps);
  return r;
}

SelectEvalRun load_select_eval(const std::filesystem::path& path) {
  const Document doc(path);
  const Node root = root_node(doc);
  SelectEvalRun r;
  r.scene = parse_scene(root.at("scene"));
  r.camera = parse_camera(root.at("camera"));
  const VisionSection v = parse_vision(root.at("vision"));
  const Node s = root.at("select_eval");
  s.allow_only({"distances", "trials", "flip_rate", "camera_height", "azimuth"});
  for (std::size_t i = 0; i < s.at("distances").size(); ++i) {
    r.params.distances.push_back(s.at("distances")[i].positive());
  }
  const long long trials = s.at("trials").integer();
  if (trials < 1) s.at("trials").fail("must be >= 1");
  r.params.trials = static_cast<int>(trials);
  r.params.flip_rate = s.at("flip_rate").non_negative();
  if (r.params.flip_rate >= 0.5) s.at("flip_rate").fail("must be < 0.5");
  r.params.camera_height = s.at("camera_height").number();
  r.params.azimuth = s.at("azimuth").number();
  r.params.min_pixels = v.min_pixels;
  r.params.selection = v.selection;
  return r;
}

PlanRun load_plan(const std::filesystem::path& path) {
  const Document doc(path);
  const Node root = root_node(doc);
  PlanRun r;
  std::tie(r.avg_speed, r.min_segment_duration) = parse_planner(root.at("planner"));
  const Node p = root.at("plan");
  p.allow_only({"start", "end", "waypoints", "durations", "sample_rate"});
  r.start = parse_state(p.at("start"));
  r.end = parse_state(p.at("end"));
  if (auto w = p.find("waypoints")) {
    for (std::size_t i = 0; i < w->size(); ++i) r.waypoints.push_back((*w)[i].vec3());
  }
  if (auto d = p.find("durations")) {
    std::vector<double> durations;
    for (std::size_t i = 0; i < d->size(); ++i) durations.push_back((*d)[i].positive());
    if (durations.size() != r.waypoints.size() + 1) {
      d->fail("needs " + std::to_string(r.waypoints.size() + 1) + " entries (one per segment)");
    }
    r.durations = durations;
  }
  r.sample_rate = p.at("sample_rate").positive();
  return r;
}

MissionRun load_mission(const std::filesystem::path& path) {
  const Document doc(path);
  const Node root = root_node(doc);
  MissionRun r;
  r.mechanism = parse_mechanism(root.at("mechanism"));
  simctrl::MissionConfig& m = r.mission;
  m.scene = parse_scene(root.at("scene"));
  m.camera = parse_camera(root.at("camera"));
  const VisionSection v = parse_vision(root.at("vision"));
  m.min_pixels = v.min_pixels;
  m.selection = v.selection;
  std::tie(m.avg_speed, m.min_segment_duration) = parse_planner(root.at("planner"));

  const Node n = root.at("mission");
  n.allow_only({"hover_height", "selection_distance", "approach_azimuth", "takeoff_duration",
                "hover_settle", "plan_hold", "max_selection_retries", "mask_flip_rate",
                "engagement_offset", "pre_approach_drop", "approach_speed", "trigger_radius", "track_timeout",
                "perch_duration", "resume", "resume_descent", "control_rate", "sim_step",
                "actuator_lag", "position_noise", "gripper_energy_per_open", "pid"});
  m.hover_height = n.at("hover_height").positive();
  m.selection_distance = n.at("selection_distance").positive();
  m.approach_azimuth = n.at("approach_azimuth").number();
  m.takeoff_duration = n.at("takeoff_duration").positive();
  m.hover_settle = n.at("hover_settle").non_negative();
  m.plan_hold = n.at("plan_hold").non_negative();
  const long long retries = n.at("max_selection_retries").integer();
  if (retries < 0) n.at("max_selection_retries").fail("must be >= 0");
  m.max_selection_retries = static_cast<int>(retries);
  m.mask_flip_rate = n.at("mask_flip_rate").non_negative();
  m.engagement_offset = n.at("engagement_offset").non_negative();
  m.pre_approach_drop = n.at("pre_approach_drop").positive();
  m.approach_speed = n.at("approach_speed").positive();
  m.trigger_radius = n.at("trigger_radius").positive();
  m.track_timeout = n.at("track_timeout").non_negative();
  m.perch_duration = n.at("perch_duration").non_negative();
  m.resume = n.at("resume").boolean();
  m.resume_descent = n.at("resume_descent").positive();
  m.control_rate = n.at("control_rate").positive();
  m.sim_step = n.at("sim_step").positive();
  m.actuator_lag = n.at("actuator_lag").non_negative();
  m.position_noise = n.at("position_noise").non_negative();
  m.gripper_energy_per_open = n.at("gripper_energy_per_open").non_negative();

  const Node pid = n.at("pid");
  pid.allow_only({"kp", "ki", "kd", "integrator_clamp", "output_clamp"});
  m.gains.kp = pid.at("kp").vec3();
  m.gains.ki = pid.at("ki").vec3();
  m.gains.kd = pid.at("kd").vec3();
  m.gains.integrator_clamp = pid.at("integrator_clamp").positive();
  m.gains.output_clamp = pid.at("output_clamp").positive();
  n.check([&] { m.validate(); });
  return r;
}

}  // namespace perchsim::config
