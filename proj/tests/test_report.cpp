// Copyright 2026 The Crossguard Authors
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

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "crossguard/report.hpp"

namespace cg = crossguard;
namespace fs = std::filesystem;

namespace
{

std::string slurp(const fs::path & path)
{
  std::ifstream is(path, std::ios::binary);
  REQUIRE(is.good());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

std::vector<std::vector<std::string>> parse_csv(const std::string & text)
{
  std::vector<std::vector<std::string>> rows;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(std::move(cells));
  }
  return rows;
}

double exact(const std::string & cell)
{
  return std::strtod(cell.c_str(), nullptr);
}

int count_occurrences(const std::string & text, const std::string & needle)
{
  int n = 0;
  for (std::size_t at = text.find(needle); at != std::string::npos;
       at = text.find(needle, at + needle.size())) {
    ++n;
  }
  return n;
}

/// Handmade bundle with awkward doubles so the CSV equality check is not
/// trivially satisfied by short decimals.
nlohmann::json fake_metrics()
{
  nlohmann::json m;
  m["config_hash"] = 1234567890123ULL;
  const std::vector<double> deciles{0.1, 1.0 / 3.0, 0.5, 0.7, 1.0, 1.25, 2.0 / 7.0 + 1.5, 2.5, 3.0};
  for (const char * method : {"model", "kalman"}) {
    for (const char * seg : {"all", "turning", "non_turning"}) {
      m["trajectory"][method][seg]["deciles"] = nlohmann::json::array({deciles});
      m["trajectory"][method][seg]["mean_ed"] = std::vector<double>{0.9};
      m["trajectory"][method][seg]["count"] = 11;
    }
    m["trajectory"][method]["horizon_seconds"] = 1;
  }
  for (const char * method : {"random_forest", "relative_distance", "ci_cws"}) {
    m["detection"][method]["reaction_times_s"] =
      std::vector<double>{0.30000000000000004, 1.1, 2.7};
    m["detection"][method]["fp_body_buckets"] = std::vector<int>{3, 1, 0, 2};
    m["detection"][method]["true_positives"] = 3;
    m["detection"][method]["false_positives"] = 6;
    m["detection"][method]["false_negatives"] = 0;
  }
  m["forest"]["importance_by_kind"]["distance"] = 0.25;
  m["forest"]["importance_by_kind"]["overlap"] = 1.0 / 7.0;
  m["forest"]["importance_by_kind"]["speed"] = 1.0 - 0.25 - 1.0 / 7.0;
  nlohmann::json cell;
  cell["decel_mps2"] = 4.5;
  cell["driver"] = "human";
  cell["episodes"] = 60;
  cell["avoided_fraction"] = 1.0 / 3.0;
  cell["mean_impact_speed_no_action_mps"] = 9.87654321;
  cell["mean_impact_speed_with_action_mps"] = 5.432109876;
  cell["mean_impact_speed_reduction"] = 1.0 - 5.432109876 / 9.87654321;
  m["avoidance"]["cells"] = nlohmann::json::array({cell});
  m["avoidance"]["trials"] = 20;
  return m;
}

fs::path fresh_dir(const std::string & name)
{
  const fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  return dir;
}

}  // namespace

TEST_CASE("figure CSV numbers equal the metrics bundle exactly", "[report]")
{
  const nlohmann::json m = fake_metrics();
  const fs::path dir = fresh_dir("cg_report_exact");
  cg::ReportInputs in;
  in.metrics = m;
  const cg::ReportOutput out = cg::render_reports(in, dir);

  for (const char * name :
    {"error_cdf.csv", "error_cdf.svg", "reaction_cdf.csv", "reaction_cdf.svg",
     "fp_distance.csv", "importance.csv", "importance.svg", "avoidance.csv",
     "avoidance.svg", "notices.txt"}) {
    INFO(name);
    CHECK(fs::exists(dir / name));
  }

  SECTION("error deciles round trip bit for bit")
  {
    const auto rows = parse_csv(slurp(dir / "error_cdf.csv"));
    REQUIRE(rows.size() == 1 + 2 * 3 * 9);  // header + methods x segments x deciles
    int checked = 0;
    for (std::size_t r = 1; r < rows.size(); ++r) {
      REQUIRE(rows[r].size() == 5);
      const std::string & method = rows[r][0];
      const std::string & seg = rows[r][1];
      const int sec = std::stoi(rows[r][2]);
      const int dec = std::stoi(rows[r][3]);
      const double stored =
        m.at("trajectory").at(method).at(seg).at("deciles").at(sec - 1).at(dec / 10 - 1)
          .get<double>();
      CHECK(exact(rows[r][4]) == stored);
      ++checked;
    }
    CHECK(checked == 54);
  }

  SECTION("reaction times and fractions round trip bit for bit")
  {
    const auto rows = parse_csv(slurp(dir / "reaction_cdf.csv"));
    REQUIRE(rows.size() == 1 + 3 * 3);
    for (std::size_t r = 1; r < rows.size(); ++r) {
      REQUIRE(rows[r].size() == 3);
      const auto stored =
        m.at("detection").at(rows[r][0]).at("reaction_times_s").get<std::vector<double>>();
      const double t = exact(rows[r][1]);
      CHECK(std::find(stored.begin(), stored.end(), t) != stored.end());
      const double frac = exact(rows[r][2]);
      CHECK(frac > 0.0);
      CHECK(frac <= 1.0);
    }
  }

  SECTION("importance and avoidance values round trip bit for bit")
  {
    const auto imp_rows = parse_csv(slurp(dir / "importance.csv"));
    REQUIRE(imp_rows.size() == 1 + 3);
    for (std::size_t r = 1; r < imp_rows.size(); ++r) {
      const double stored =
        m.at("forest").at("importance_by_kind").at(imp_rows[r][0]).get<double>();
      CHECK(exact(imp_rows[r][1]) == stored);
    }

    const auto av_rows = parse_csv(slurp(dir / "avoidance.csv"));
    REQUIRE(av_rows.size() == 2);
    const nlohmann::json & cell = m.at("avoidance").at("cells").at(0);
    CHECK(exact(av_rows[1][0]) == cell.at("decel_mps2").get<double>());
    CHECK(av_rows[1][1] == "human");
    CHECK(exact(av_rows[1][3]) == cell.at("avoided_fraction").get<double>());
    CHECK(
      exact(av_rows[1][6]) == cell.at("mean_impact_speed_reduction").get<double>());
  }

  SECTION("the config hash is embedded in every artifact")
  {
    for (const std::string & name : out.written) {
      if (name == "notices.txt" || name == "fp_distance.csv") continue;
      INFO(name);
      CHECK(slurp(dir / name).find("1234567890123") != std::string::npos);
    }
    CHECK(slurp(dir / "fp_distance.csv").find("1234567890123") != std::string::npos);
  }

  SECTION("with no live objects only the snapshot is skipped")
  {
    REQUIRE(out.notices.size() == 1);
    CHECK(out.notices[0].find("alarm snapshot") != std::string::npos);
    CHECK(slurp(dir / "notices.txt").find("alarm snapshot") != std::string::npos);
    CHECK_FALSE(fs::exists(dir / "alarm_snapshot.svg"));
  }

  fs::remove_all(dir);
}

TEST_CASE("partial bundles render what they can and log the rest", "[report]")
{
  const fs::path dir = fresh_dir("cg_report_partial");
  cg::ReportInputs in;
  in.metrics = fake_metrics();
  in.metrics.erase("avoidance");
  in.metrics.erase("forest");
  const cg::ReportOutput out = cg::render_reports(in, dir);

  CHECK(fs::exists(dir / "error_cdf.svg"));
  CHECK(fs::exists(dir / "reaction_cdf.svg"));
  CHECK_FALSE(fs::exists(dir / "avoidance.csv"));
  CHECK_FALSE(fs::exists(dir / "importance.csv"));

  const std::string notices = slurp(dir / "notices.txt");
  CHECK(notices.find("avoidance figures skipped") != std::string::npos);
  CHECK(notices.find("importance figure skipped") != std::string::npos);
  CHECK(out.notices.size() == 3);  // avoidance, importance, snapshot

  SECTION("an empty bundle is a hard error")
  {
    cg::ReportInputs empty;
    CHECK_THROWS_AS(cg::render_reports(empty, dir), cg::ConfigError);
  }

  fs::remove_all(dir);
}

TEST_CASE("the alarm snapshot draws one interval ellipse per horizon step", "[report]")
{
  const int L = 30;

  // A two-vehicle head-on trace on the horizontal road.
  cg::Trace trace;
  trace.tick_s = 0.1;
  trace.ticks.resize(40);
  for (int t = 0; t < 40; ++t) {
    cg::VehicleState a;
    a.time_s = t * 0.1;
    a.vehicle_id = 1;
    a.position = cg::Vec2{-40.0 + t, 0.0};
    a.heading_deg = 0.0;
    a.speed = 10.0;
    cg::VehicleState b = a;
    b.vehicle_id = 2;
    b.position = cg::Vec2{40.0 - t, 0.0};
    b.heading_deg = 180.0;
    trace.ticks[t] = {a, b};
  }

  cg::PredictionSet preds;
  preds.input_len = 10;
  preds.horizon_len = L;
  const int alarm_tick = 12;
  for (cg::VehicleId id : {1, 2}) {
    cg::VehiclePrediction vp;
    vp.point.resize(L, 2);
    vp.lower.resize(L, 2);
    vp.upper.resize(L, 2);
    const double dir = id == 1 ? 1.0 : -1.0;
    const double x0 = id == 1 ? -40.0 + alarm_tick : 40.0 - alarm_tick;
    for (int j = 0; j < L; ++j) {
      const double lon = x0 + dir * (j + 1) * 0.1 * 10.0;
      vp.point(j, 0) = 0.0;
      vp.point(j, 1) = lon;
      vp.lower(j, 0) = -0.3 * (j + 1) / L;
      vp.upper(j, 0) = 0.3 * (j + 1) / L;
      vp.lower(j, 1) = lon - 0.6 * (j + 1) / L;
      vp.upper(j, 1) = lon + 0.6 * (j + 1) / L;
    }
    preds.by_vehicle[id][alarm_tick] = vp;
  }

  cg::DetectionLog log;
  log.method = "random_forest";
  log.tick_s = 0.1;
  log.horizon_len = L;
  log.records.push_back({alarm_tick, 1, 2, true, 1.0, true});

  cg::IntersectionLayout layout;
  const nlohmann::json m = fake_metrics();

  const fs::path dir = fresh_dir("cg_report_snapshot");
  cg::ReportInputs in;
  in.metrics = m;
  in.eval_trace = &trace;
  in.layout = &layout;
  in.preds = &preds;
  in.alarms = &log;
  const cg::ReportOutput out = cg::render_reports(in, dir);

  CHECK(out.notices.empty());
  REQUIRE(fs::exists(dir / "alarm_snapshot.svg"));
  const std::string svg = slurp(dir / "alarm_snapshot.svg");
  CHECK(count_occurrences(svg, "<ellipse") == 2 * L);
  // Road strips for four arms plus two vehicle bodies.
  CHECK(count_occurrences(svg, "<polygon") == 4 + 2);
  CHECK(svg.find("pair 1-2") != std::string::npos);

  SECTION("a log with no fired alarm skips the snapshot")
  {
    cg::DetectionLog quiet = log;
    quiet.records[0].fired = false;
    cg::ReportInputs in2 = in;
    in2.alarms = &quiet;
    const fs::path dir2 = fresh_dir("cg_report_snapshot2");
    const cg::ReportOutput out2 = cg::render_reports(in2, dir2);
    REQUIRE(out2.notices.size() == 1);
    CHECK(out2.notices[0].find("no fired alarm") != std::string::npos);
    CHECK_FALSE(fs::exists(dir2 / "alarm_snapshot.svg"));
    fs::remove_all(dir2);
  }

  fs::remove_all(dir);
}
