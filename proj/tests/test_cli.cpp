/*
 * Copyright 2026 The GridCAL Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "support.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Run {
  int code = -1;
  std::string output;  // stdout and stderr interleaved
};

Run run(const std::string& args) {
  const std::string cmd = std::string(GRIDCAL_CLI) + " " + args + " 2>&1";
  Run r;
  FILE* p = popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  char buf[4096];
  for (std::size_t n; (n = fread(buf, 1, sizeof buf, p)) > 0;) r.output.append(buf, n);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::vector<std::string> lines_of(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::string> out;
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("gridcal_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string case118() { return (gridcal::test::data_dir() / "case118.m").string(); }

}  // namespace

TEST_CASE("parse prints the case size") {
  const fs::path dir = scratch("parse");
  std::ofstream(dir / "triangle.m") << gridcal::test::kTriangleText;
  Run r = run("parse " + (dir / "triangle.m").string());
  CHECK(r.code == 0);
  CHECK(r.output == "buses=3 branches=3\n");
  Run big = run("parse " + case118());
  CHECK(big.code == 0);
  CHECK(big.output == "buses=118 branches=186\n");
}

TEST_CASE("exit codes") {
  Run missing = run("parse /nonexistent/case.m");
  CHECK(missing.code == 2);
  CHECK(missing.output.find("file not found: /nonexistent/case.m") != std::string::npos);

  CHECK(run("parse").code == 1);
  CHECK(run("frobnicate").code == 1);
  CHECK(run("simulate --case " + case118() + " --out /tmp/x --no-such-flag").code == 1);
  CHECK(run("detect --scenario /tmp --variant fancy").code == 1);

  const fs::path dir = scratch("bad");
  std::ofstream(dir / "bad.m") << "mpc.baseMVA = 100;\nmpc.bus = [\n\t1\t7\t0;\n];\n";
  Run bad = run("parse " + (dir / "bad.m").string());
  CHECK(bad.code == 2);
  CHECK(bad.output.find("error:") != std::string::npos);

  // Flag validation happens after parsing, as a usage error.
  Run neg = run("simulate --case " + case118() + " --out " + (dir / "s").string() + " --n-periods 0");
  CHECK(neg.code == 1);
}

TEST_CASE("help documents every subcommand") {
  Run h = run("--help");
  CHECK(h.code == 0);
  for (const char* sub : {"parse", "simulate", "detect", "evaluate", "dump-mapping"}) {
    CHECK(h.output.find(sub) != std::string::npos);
  }
  Run d = run("detect --help");
  for (const char* flag : {"--scenario", "--out", "--variant", "--threshold", "--rho", "--warmup", "--weights-at"}) {
    CHECK(d.output.find(flag) != std::string::npos);
  }
}

TEST_CASE("simulate, detect and dump-mapping") {
  const fs::path dir = scratch("pipeline");
  const fs::path sc = dir / "scenario";
  Run sim = run("simulate --case " + case118() + " --out " + sc.string() + " --seed 7 --n-periods 6 --n-anomalies 5");
  REQUIRE(sim.code == 0);
  for (const char* f : {"config.json", "frames.csv", "truth.csv", "topologies.json"}) CHECK(fs::exists(sc / f));
  CHECK(lines_of(sc / "frames.csv").size() == 361);
  CHECK(lines_of(sc / "truth.csv").size() == 6);

  Run det = run("detect --scenario " + sc.string() + " --out " + (dir / "det").string() + " --weights-at 200");
  REQUIRE(det.code == 0);
  CHECK(det.output.find("auc=1") != std::string::npos);
  auto verdicts = lines_of(dir / "det" / "verdicts.jsonl");
  REQUIRE(verdicts.size() == 360);
  std::set<int> truth;
  for (const auto& l : lines_of(sc / "truth.csv")) {
    if (l != "tick,branch") truth.insert(std::stoi(l));
  }
  int flagged = 0;
  for (const auto& l : verdicts) {
    json v = json::parse(l);
    CHECK(v.contains("tick"));
    CHECK(v.contains("score"));
    CHECK(v.contains("argmax_edge"));
    if (v["anomalous"].get<bool>() && !v.contains("warmup")) {
      ++flagged;
      CHECK(truth.contains(v["tick"].get<int>()));
    }
  }
  CHECK(flagged == static_cast<int>(truth.size()));
  auto weights = lines_of(dir / "det" / "weights.csv");
  REQUIRE(weights.size() == 200);
  CHECK(weights[0] == "tick,distance,weight");

  Run to_stdout = run("detect --scenario " + sc.string() + " --variant naive");
  CHECK(to_stdout.code == 0);
  CHECK(to_stdout.output.find("{\"tick\":1,") != std::string::npos);

  // First observed baseline branch from the frames header.
  const std::string header = lines_of(sc / "frames.csv")[0];
  const auto f = header.find(",f_") + 3;
  const std::string edge = header.substr(f, header.find(',', f) - f);
  Run dump = run("dump-mapping --scenario " + sc.string() + " --edge " + edge + " --out " + (dir / "map").string() +
                 " --dump-sensitivities");
  REQUIRE(dump.code == 0);
  auto mapping = lines_of(dir / "map" / "mapping.csv");
  CHECK(mapping.size() == 361);
  CHECK(mapping[0] == "tick,period,p,p_hat,p_check");
  CHECK(lines_of(dir / "map" / "ptdf.csv").size() > 1);
  CHECK(lines_of(dir / "map" / "lodf.csv")[0] == "period,outage,branch,lodf");

  Run bad_edge = run("dump-mapping --scenario " + sc.string() + " --edge 99999 --out " + (dir / "map").string());
  CHECK(bad_edge.code == 1);
  fs::remove_all(dir);
}

TEST_CASE("evaluate writes the sweep") {
  const fs::path dir = scratch("evaluate");
  json cfg = {{"case", case118()},
              {"scenario", {{"n_periods", 3}, {"n_tau", 20}, {"n_anomalies", 3}}},
              {"sensor_counts", {10, 20}},
              {"seeds", {1, 2}}};
  std::ofstream(dir / "eval.json") << cfg.dump();
  Run ev = run("evaluate --config " + (dir / "eval.json").string() + " --out " + (dir / "out").string() +
               " --threads 2");
  REQUIRE(ev.code == 0);
  CHECK(ev.output.find("12 runs, 0 failed") != std::string::npos);
  CHECK(lines_of(dir / "out" / "results.csv").size() == 13);
  CHECK(fs::exists(dir / "out" / "roc_points.csv"));
  CHECK(lines_of(dir / "out" / "figure_data" / "auc.csv").size() == 3);
  CHECK(lines_of(dir / "out" / "figure_data" / "f_measure.csv").size() == 3);

  std::ofstream(dir / "bad.json") << R"({"case": "x.m", "typo": 1})";
  CHECK(run("evaluate --config " + (dir / "bad.json").string() + " --out " + (dir / "o2").string()).code == 1);
  fs::remove_all(dir);
}
