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

#include "perchsim/cli.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "perchsim/config.hpp"
#include "perchsim/error.hpp"
#include "perchsim/format.hpp"
#include "perchsim/planner.hpp"
#include "perchsim/simctrl.hpp"
#include "perchsim/statics.hpp"
#include "perchsim/vision.hpp"

namespace perchsim::cli {
namespace {

using Json = nlohmann::ordered_json;

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::kIo, "cannot write " + path.string());
  out << content;
  if (!out) throw Error(Errc::kIo, "failed writing " + path.string());
}

std::filesystem::path prepare_out(const Options& o) {
  std::error_code ec;
  std::filesystem::create_directories(o.out_dir, ec);
  if (ec) throw Error(Errc::kIo, "cannot create " + o.out_dir.string() + ": " + ec.message());
  return o.out_dir;
}

std::uint64_t seed_of(const Options& o) {
  return o.seed ? *o.seed : config::load_run(o.config).seed;
}

std::string opt(const std::optional<double>& v) { return v ? format_number(*v) : ""; }

}  // namespace

int cmd_statics(const Options& o, std::ostream& err) {
  const config::StaticsRun run = config::load_statics(o.config);
  const auto dir = prepare_out(o);
  const statics::MechanismSpec& m = run.mechanism;
  const auto rows = statics::capacity_sweep(m, run.d_min, run.d_max, run.steps);

  std::ostringstream csv;
  csv << "diameter_m,capacity_N,regime,note\n";
  for (const statics::SweepRow& r : rows) {
    csv << format_number(r.diameter) << ',' << opt(r.capacity) << ','
        << (r.regime ? statics::to_string(*r.regime) : "") << ',' << r.note << '\n';
  }
  write_file(dir / "capacity_sweep.csv", csv.str());

  const std::optional<double> cross = statics::crossover_diameter(m, rows, m.platform_weight);
  const statics::RegimeBounds b = statics::regime_bounds(m.chain, m.claw);
  Json j;
  j["platform_weight_N"] = m.platform_weight;
  j["claw_strength_N"] = statics::claw_strength(m.claw);
  j["regime_bounds_m"] = {b.min_diameter, b.claw_hang_max, b.medium_wrap_max, b.max_diameter};
  j["sweep"] = {{"d_min_m", run.d_min}, {"d_max_m", run.d_max}, {"steps", run.steps}};
  j["crossover_diameter_m"] = cross ? Json(*cross) : Json("none in range");
  write_file(dir / "statics_summary.json", j.dump(2) + "\n");
  if (o.verbosity > 0) {
    err << "statics: " << rows.size() << " rows, crossover "
        << (cross ? format_number(*cross) + " m" : std::string("none in range")) << '\n';
  }
  return kExitOk;
}

int cmd_select_eval(const Options& o, std::ostream& err) {
  config::SelectEvalRun run = config::load_select_eval(o.config);
  run.params.seed = seed_of(o);
  const auto dir = prepare_out(o);
  const vision::LocalizationReport report =
      vision::evaluate_localization(run.scene, run.camera, run.params);

  std::ostringstream csv;
  csv << "distance_m,target,mean_err_m,std_err_m,p25_err_m,p50_err_m,p75_err_m,failures\n";
  for (const vision::ErrorRow& r : report.rows) {
    csv << format_number(r.distance) << ',' << r.target << ',' << format_number(r.mean) << ','
        << format_number(r.std_dev) << ',' << format_number(r.p25) << ','
        << format_number(r.p50) << ',' << format_number(r.p75) << ',' << r.failures << '\n';
  }
  write_file(dir / "localization.csv", csv.str());

  std::ostringstream trials;
  trials << "distance_m,trial,seed,trunk_err_m,branch_err_m,failure\n";
  for (const vision::TrialResult& t : report.trials) {
    trials << format_number(t.distance) << ',' << t.trial << ',' << t.seed << ','
           << opt(t.trunk_error) << ',' << opt(t.branch_error) << ',' << t.failure << '\n';
  }
  write_file(dir / "localization_trials.csv", trials.str());
  if (o.verbosity > 0) err << "select-eval: " << report.trials.size() << " trials\n";
  return kExitOk;
}

int cmd_plan(const Options& o, std::ostream& err) {
  const config::PlanRun run = config::load_plan(o.config);
  const auto dir = prepare_out(o);
  planner::Trajectory traj;
  try {
    std::vector<double> durations;
    if (run.durations) {
      durations = *run.durations;
    } else {
      std::vector<Eigen::Vector3d> points{run.start.position};
      points.insert(points.end(), run.waypoints.begin(), run.waypoints.end());
      points.push_back(run.end.position);
      durations = planner::allocate_times(points, run.avg_speed, run.min_segment_duration);
    }
    traj = planner::plan_waypoints(run.start, run.end, run.waypoints, durations);
  } catch (const Error& e) {
    err << "plan: " << to_string(e.code()) << ": " << e.what() << '\n';
    return kExitPlanner;
  }
  for (Errc w : traj.warnings) {
    err << "plan: warning: " << to_string(w) << ": segment duration ratio exceeds "
        << format_number(planner::kIllConditionedRatio) << '\n';
    if (o.strict) return kExitPlanner;
  }
  write_file(dir / "trajectory.json", planner::to_json(traj));

  std::ostringstream csv;
  csv << "t_s";
  const char* kCols[5][2] = {{"", "_m"}, {"v", "_mps"}, {"a", "_mps2"}, {"j", "_mps3"}, {"s", "_mps4"}};
  for (const auto& c : kCols) {
    for (const char* axis : {"x", "y", "z"}) csv << ',' << c[0] << axis << c[1];
  }
  csv << '\n';
  const double total = traj.total_duration();
  const auto count = static_cast<long>(std::floor(total * run.sample_rate + 1e-9));
  std::vector<double> times;
  for (long k = 0; k <= count; ++k) times.push_back(static_cast<double>(k) / run.sample_rate);
  if (times.back() < total) times.push_back(total);
  for (double t : times) {
    t = std::min(t, total);
    csv << format_number(t);
    for (int order = 0; order <= 4; ++order) {
      const Eigen::Vector3d v = planner::evaluate(traj, t, order);
      for (int i = 0; i < 3; ++i) csv << ',' << format_number(v[i]);
    }
    csv << '\n';
  }
  write_file(dir / "trajectory_samples.csv", csv.str());
  if (o.verbosity > 0) {
    err << "plan: " << traj.segments.size() << " segments, " << format_number(total)
        << " s, snap cost " << format_number(traj.snap_cost()) << ", max accel "
        << format_number(planner::max_acceleration(traj)) << " m/s^2\n";
  }
  return kExitOk;
}

int cmd_mission(const Options& o, std::ostream& err) {
  const config::MissionRun run = config::load_mission(o.config);
  const std::uint64_t seed = seed_of(o);
  const auto dir = prepare_out(o);
  const simctrl::MissionLog log = simctrl::run_mission(run.mission, run.mechanism, seed);

  std::ostringstream csv;
  simctrl::write_log_csv(log, csv);
  write_file(dir / "mission_log.csv", csv.str());
  write_file(dir / "mission_summary.json", simctrl::summary_json(log));
  write_file(dir / "gripper_events.json", simctrl::gripper_events_json(log));
  if (log.trajectory) write_file(dir / "mission_trajectory.json", planner::to_json(*log.trajectory));

  if (log.trajectory) {
    for (Errc w : log.trajectory->warnings) {
      err << "mission: warning: " << to_string(w) << '\n';
      if (o.strict) return kExitPlanner;
    }
  }
  if (log.outcome != simctrl::Outcome::kPerched) {
    err << "mission: " << simctrl::to_string(log.outcome) << ": " << log.detail << '\n';
  } else if (o.verbosity > 0) {
    const simctrl::TrackingSummary s = simctrl::summarize(log);
    err << "mission: Perched, mean 3D tracking error " << format_number(s.mean_3d) << " m\n";
  }
  return simctrl::exit_code(log.outcome);
}

int run(const Options& o, std::ostream& err) {
  try {
    switch (o.subcommand) {
      case Subcommand::kStatics: return cmd_statics(o, err);
      case Subcommand::kSelectEval: return cmd_select_eval(o, err);
      case Subcommand::kPlan: return cmd_plan(o, err);
      case Subcommand::kMission: return cmd_mission(o, err);
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  return kExitConfig;
}

}  // namespace perchsim::cli
