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
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>
#include <json.hpp>

#include "perchsim/cli.hpp"

namespace perchsim::cli {
namespace {

namespace fs = std::filesystem;
using Json = nlohmann::json;

Json default_config() {
  std::ifstream in(PERCHSIM_DEFAULT_CONFIG);
  return Json::parse(in);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::vector<double>> read_csv(const fs::path& p, std::string* header = nullptr) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  if (header) *header = line;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(row);
  }
  return rows;
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    root_ = fs::temp_directory_path() /
            ("perchsim_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(root_);
    fs::create_directories(root_);
  }
  void TearDown() override { fs::remove_all(root_); }

  fs::path write(const std::string& name, const std::string& text) {
    const fs::path p = root_ / name;
    std::ofstream(p) << text;
    return p;
  }

  int run_cmd(Subcommand sub, const fs::path& config, const std::string& out, bool strict = false) {
    Options o;
    o.subcommand = sub;
    o.config = config;
    o.out_dir = root_ / out;
    o.strict = strict;
    err_.str("");
    return run(o, err_);
  }

  fs::path root_;
  std::ostringstream err_;
};

int line_of(const std::string& text, const std::string& needle) {
  const auto pos = text.find(needle);
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<long>(pos), '\n'));
}

TEST_F(CliTest, SchemaViolationIsLineAddressed) {
  Json j = default_config();
  j["statics"]["steps"] = 81.5;
  const std::string text = j.dump(2);
  const fs::path p = write("bad.json", text);
  EXPECT_EQ(run_cmd(Subcommand::kStatics, p, "o"), kExitConfig);
  const std::string expected =
      p.string() + ":" + std::to_string(line_of(text, "\"steps\"")) + ": /statics/steps";
  EXPECT_NE(err_.str().find(expected), std::string::npos) << err_.str();
}

TEST_F(CliTest, UnknownKeyAndMissingFile) {
  Json j = default_config();
  j["mission"]["trigger_radus"] = 0.05;
  const std::string text = j.dump(2);
  const fs::path p = write("typo.json", text);
  EXPECT_EQ(run_cmd(Subcommand::kMission, p, "o"), kExitConfig);
  EXPECT_NE(err_.str().find(":" + std::to_string(line_of(text, "trigger_radus")) +
                            ": /mission/trigger_radus: unknown key"),
            std::string::npos)
      << err_.str();
  EXPECT_EQ(run_cmd(Subcommand::kPlan, root_ / "absent.json", "o"), kExitConfig);
  const fs::path broken = write("broken.json", "{\n  \"seed\": 1,\n  \"plan\": [\n}");
  EXPECT_EQ(run_cmd(Subcommand::kPlan, broken, "o"), kExitConfig);
  EXPECT_NE(err_.str().find(broken.string() + ":"), std::string::npos);
}

TEST_F(CliTest, StaticsCrossoverAndNoneInRange) {
  ASSERT_EQ(run_cmd(Subcommand::kStatics, PERCHSIM_DEFAULT_CONFIG, "a"), kExitOk);
  const Json s = Json::parse(slurp(root_ / "a" / "statics_summary.json"));
  const double cross = s["crossover_diameter_m"].get<double>();
  EXPECT_GE(cross, 0.095);
  EXPECT_LE(cross, 0.110);

  Json j = default_config();
  j["mechanism"]["platform_weight"] = 0.0;
  ASSERT_EQ(run_cmd(Subcommand::kStatics, write("w0.json", j.dump(2)), "b"), kExitOk);
  const Json s0 = Json::parse(slurp(root_ / "b" / "statics_summary.json"));
  EXPECT_EQ(s0["crossover_diameter_m"], "none in range");
}

TEST_F(CliTest, EverySubcommandIsByteIdenticalOnRerun) {
  const std::vector<std::pair<Subcommand, std::vector<std::string>>> cases = {
      {Subcommand::kStatics, {"capacity_sweep.csv", "statics_summary.json"}},
      {Subcommand::kSelectEval, {"localization.csv", "localization_trials.csv"}},
      {Subcommand::kPlan, {"trajectory.json", "trajectory_samples.csv"}},
      {Subcommand::kMission,
       {"mission_log.csv", "mission_summary.json", "gripper_events.json", "mission_trajectory.json"}},
  };
  for (const auto& [sub, files] : cases) {
    run_cmd(sub, PERCHSIM_DEFAULT_CONFIG, "r1");
    run_cmd(sub, PERCHSIM_DEFAULT_CONFIG, "r2");
    for (const std::string& f : files) {
      const std::string a = slurp(root_ / "r1" / f);
      EXPECT_FALSE(a.empty()) << f;
      EXPECT_EQ(a, slurp(root_ / "r2" / f)) << f;
    }
  }
}

TEST_F(CliTest, CsvHeadersCarryUnits) {
  const std::vector<std::string> unitless = {"stage", "target", "regime", "note",
                                             "trial", "seed", "failure", "failures"};
  const std::vector<std::string> units = {"_s", "_m", "_N", "_mps", "_mps2", "_mps3", "_mps4"};
  for (Subcommand sub : {Subcommand::kStatics, Subcommand::kSelectEval, Subcommand::kPlan,
                         Subcommand::kMission}) {
    run_cmd(sub, PERCHSIM_DEFAULT_CONFIG, "o");
  }
  int files = 0;
  for (const auto& entry : fs::directory_iterator(root_ / "o")) {
    if (entry.path().extension() != ".csv") continue;
    ++files;
    std::ifstream in(entry.path());
    std::string header, col;
    std::getline(in, header);
    std::stringstream ss(header);
    while (std::getline(ss, col, ',')) {
      bool ok = std::find(unitless.begin(), unitless.end(), col) != unitless.end();
      for (const std::string& u : units) {
        ok = ok || (col.size() > u.size() && col.compare(col.size() - u.size(), u.size(), u) == 0);
      }
      EXPECT_TRUE(ok) << entry.path().filename() << ": " << col;
    }
  }
  EXPECT_EQ(files, 5);
}

TEST_F(CliTest, SelectEvalTrialTable) {
  ASSERT_EQ(run_cmd(Subcommand::kSelectEval, PERCHSIM_DEFAULT_CONFIG, "o"), kExitOk);
  std::ifstream in(root_ / "o" / "localization_trials.csv");
  std::string line;
  int n = 0;
  while (std::getline(in, line)) ++n;
  EXPECT_EQ(n, 16);
  std::string header;
  std::ifstream loc(root_ / "o" / "localization.csv");
  std::getline(loc, header);
  EXPECT_EQ(header, "distance_m,target,mean_err_m,std_err_m,p25_err_m,p50_err_m,p75_err_m,failures");
}

TEST_F(CliTest, PlanMidpointAndFiniteDifferences) {
  Json j = default_config();
  j["plan"]["start"] = {{"position", {0.0, 0.0, 1.0}}};
  j["plan"]["end"] = {{"position", {2.0, -1.0, 2.0}}};
  j["plan"]["waypoints"] = Json::array();
  j["plan"]["durations"] = {2.0};
  j["plan"]["sample_rate"] = 100.0;
  ASSERT_EQ(run_cmd(Subcommand::kPlan, write("p.json", j.dump(2)), "o"), kExitOk);
  std::string header;
  const auto rows = read_csv(root_ / "o" / "trajectory_samples.csv", &header);
  EXPECT_EQ(header.substr(0, 12), "t_s,x_m,y_m,");
  ASSERT_EQ(rows.size(), 201u);
  EXPECT_DOUBLE_EQ(rows[100][0], 1.0);
  EXPECT_NEAR(rows[100][1], 1.0, 1e-12);
  EXPECT_NEAR(rows[100][2], -0.5, 1e-12);
  EXPECT_NEAR(rows[100][3], 1.5, 1e-12);
  for (std::size_t i = 1; i + 1 < rows.size(); ++i) {
    const double h = rows[i + 1][0] - rows[i - 1][0];
    for (int c = 0; c < 12; ++c) {
      const double fd = (rows[i + 1][1 + c] - rows[i - 1][1 + c]) / h;
      const double simpson = (rows[i - 1][4 + c] + 4.0 * rows[i][4 + c] + rows[i + 1][4 + c]) / 6.0;
      EXPECT_NEAR(fd, simpson, 1e-6 * (1.0 + std::abs(simpson))) << "row " << i << " column " << c;
    }
  }
}

TEST_F(CliTest, StrictEscalatesIllConditioned) {
  Json j = default_config();
  j["plan"]["durations"] = {1e-3, 3.0};
  const fs::path p = write("ill.json", j.dump(2));
  EXPECT_EQ(run_cmd(Subcommand::kPlan, p, "o"), kExitOk);
  EXPECT_EQ(run_cmd(Subcommand::kPlan, p, "o", true), kExitPlanner);
}

TEST_F(CliTest, MissionExitCodes) {
  ASSERT_EQ(run_cmd(Subcommand::kMission, PERCHSIM_DEFAULT_CONFIG, "ok"), kExitOk);
  const Json s = Json::parse(slurp(root_ / "ok" / "mission_summary.json"));
  EXPECT_EQ(s["outcome"], "Perched");
  EXPECT_LE(s["tracking"]["mean_error_m"]["3d"].get<double>(), 0.122);

  Json thick = default_config();
  thick["scene"]["branches"][0]["radius"] = 0.060;
  EXPECT_EQ(run_cmd(Subcommand::kMission, write("thick.json", thick.dump(2)), "t"), kExitCapacity);

  Json none = default_config();
  none["scene"]["branches"] = Json::array();
  EXPECT_EQ(run_cmd(Subcommand::kMission, write("none.json", none.dump(2)), "n"), kExitSelection);
}

}  // namespace
}  // namespace perchsim::cli
