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

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "doctest.h"
#include "gridcal/error.hpp"
#include "gridcal/eval.hpp"
#include "gridcal/io.hpp"
#include "gridcal/scengen.hpp"
#include "gridcal/sensitivity.hpp"
#include "support.hpp"

using namespace gridcal;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("gridcal_scengen_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("rng engine matches the standard sequence") {
  // The 10000th output of a default-seeded mt19937_64 is fixed by the standard.
  Rng rng(5489);
  std::uint64_t x = 0;
  for (int i = 0; i < 10000; ++i) x = rng.bits();
  CHECK(x == 9981545732273789042ULL);
}

TEST_CASE("rng streams") {
  Rng a = Rng::stream(7, 1), b = Rng::stream(7, 1), c = Rng::stream(7, 2), d = Rng::stream(8, 1);
  const auto xa = a.bits();
  CHECK(xa == b.bits());
  CHECK(xa != c.bits());
  CHECK(xa != d.bits());
  CHECK(Rng::stream(7, 1, 0).bits() != Rng::stream(7, 1, 1).bits());
}

TEST_CASE("rng distributions") {
  Rng rng(99);
  double s = 0.0, s2 = 0.0, u_min = 1.0, u_max = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    u_min = std::min(u_min, u);
    u_max = std::max(u_max, u);
    const double z = rng.normal();
    s += z;
    s2 += z * z;
  }
  CHECK(u_min >= 0.0);
  CHECK(u_max < 1.0);
  CHECK(std::abs(s / n) < 0.02);
  CHECK(std::abs(s2 / n - 1.0) < 0.03);
  for (int i = 0; i < 1000; ++i) CHECK(rng.index(7) < 7);
  auto pick = rng.sample(50, 20);
  CHECK(pick.size() == 20);
  CHECK(std::set<std::size_t>(pick.begin(), pick.end()).size() == 20);
  CHECK(*std::max_element(pick.begin(), pick.end()) < 50);
  auto all = rng.sample(5, 5);
  std::sort(all.begin(), all.end());
  CHECK(all == std::vector<std::size_t>{0, 1, 2, 3, 4});
}

TEST_CASE("flat profile without variability, noise or shifts") {
  CasePtr g = test::case118();
  ScenarioConfig c;
  LoadProfile p = generate_load_profile(c, *g);
  const auto base = g->net_injections_pu();
  REQUIRE(p.injections.size() == 1200);
  for (const auto& inj : p.injections) CHECK(inj == base);
  CHECK(p.shift_ticks.empty());
}

TEST_CASE("profile follows one cycle over the horizon") {
  CasePtr g = test::case118();
  ScenarioConfig c;
  c.load_variability = 0.3;
  LoadProfile p = generate_load_profile(c, *g);
  const auto base = g->net_injections_pu();
  for (std::size_t b = 0; b < base.size(); ++b) {
    CHECK(p.injections[0][b] == doctest::Approx(base[b]));
    CHECK(p.injections[300][b] == doctest::Approx(1.3 * base[b]));
    CHECK(p.injections[900][b] == doctest::Approx(0.7 * base[b]));
  }
}

TEST_CASE("single shift event") {
  CasePtr g = test::case118();
  ScenarioConfig c;
  c.shift_ticks = {400};
  LoadProfile p = generate_load_profile(c, *g);
  CHECK(p.shift_ticks == std::vector<int>{400});
  const auto base = g->net_injections_pu();
  int scaled = 0;
  for (std::size_t b = 0; b < base.size(); ++b) {
    CHECK(p.injections[398][b] == base[b]);
    const double after = p.injections[399][b];
    if (after != base[b]) {
      CHECK(after == doctest::Approx(1.2 * base[b]));
      ++scaled;
    }
    CHECK(p.injections[1199][b] == after);
  }
  CHECK(scaled > 0);
  CHECK(scaled <= 12);
}

TEST_CASE("profile determinism") {
  CasePtr g = test::case118();
  ScenarioConfig c;
  c.load_variability = 0.2;
  c.noise_stdev = 0.05;
  c.n_shift_events = 10;
  c.seed = 17;
  LoadProfile a = generate_load_profile(c, *g);
  LoadProfile b = generate_load_profile(c, *g);
  CHECK(a.injections == b.injections);
  CHECK(a.shift_ticks == b.shift_ticks);
  CHECK(a.shift_ticks.size() == 10);
  c.seed = 18;
  CHECK(generate_load_profile(c, *g).injections != a.injections);
}

TEST_CASE("sensor choice") {
  CasePtr g = test::case118();
  ScenarioConfig c;
  CHECK(choose_sensors(c, *g).size() == 12);
  c.sensor_count = 30;
  auto s = choose_sensors(c, *g);
  CHECK(s.size() == 30);
  CHECK(std::is_sorted(s.begin(), s.end()));
  c.sensor_buses = {5, 3};
  CHECK(choose_sensors(c, *g) == std::vector<BusId>{5, 3});
}

TEST_CASE("default scenario on case118") {
  ScenarioConfig c;
  c.seed = 4;
  Scenario sc = generate_scenario(c, test::case118());
  CHECK(sc.frames.size() == 1200);
  CHECK(sc.truth.size() == 20);
  CHECK(sc.period_topologies.size() == 20);
  CHECK(sc.sensors.buses.size() == 12);
  const EdgeList bridges = sc.baseline.bridges();
  int prev = 0;
  for (const auto& a : sc.truth) {
    CHECK(a.tick > prev);
    CHECK(a.tick >= 61);
    prev = a.tick;
    const int period = (a.tick - 1) / 60 + 1;
    const Topology& topo = sc.period_topologies.at(period);
    CHECK_FALSE(sc.sensors.observes(a.branch));
    CHECK(topo.contains(a.branch));
    CHECK_FALSE(std::binary_search(bridges.begin(), bridges.end(), a.branch));
    CHECK(a.coupling >= 1e-3);
  }
  for (const auto& [t, topo] : sc.period_topologies) {
    CHECK(topo.size() + 1 == sc.baseline.size());
    CHECK(topo.label() == t);
  }
  for (const auto& f : sc.frames) {
    CHECK(f.period == (f.tick - 1) / 60 + 1);
    CHECK(static_cast<std::size_t>(f.flows.size()) ==
          sc.sensors.active_observed(sc.period_topologies.at(f.period)).size());
  }
}

TEST_CASE("frames satisfy the DC power flow") {
  ScenarioConfig c;
  c.seed = 9;
  c.load_variability = 0.2;
  c.noise_stdev = 0.02;
  c.n_shift_events = 5;
  Scenario sc = generate_scenario(c, test::case118());
  std::map<int, BranchId> outage;
  for (const auto& a : sc.truth) outage[a.tick] = a.branch;
  double worst = 0.0;
  for (std::size_t i = 0; i < sc.frames.size(); i += 7) {
    const auto& f = sc.frames[i];
    Topology topo = sc.period_topologies.at(f.period);
    if (auto it = outage.find(f.tick); it != outage.end()) {
      std::array<BranchId, 1> k{it->second};
      topo = topo.without(k, f.period);
    }
    DcNetwork net(topo);
    std::vector<double> inj(f.injections.data(), f.injections.data() + f.injections.size());
    CHECK(std::abs(std::accumulate(inj.begin(), inj.end(), 0.0)) <= 1e-10);
    const EdgeList obs = sc.sensors.active_observed(sc.period_topologies.at(f.period));
    worst = std::max(worst, (net.solve(inj).flows_on(obs) - f.flows).lpNorm<Eigen::Infinity>());
  }
  CHECK(worst <= 1e-10);
}

TEST_CASE("anomaly-free scenario raises no detections") {
  ScenarioConfig c;
  c.seed = 6;
  c.n_anomalies = 0;
  Scenario sc = generate_scenario(c, test::case118());
  CHECK(sc.truth.empty());
  Detector det(sc.baseline_context(), DetectorConfig{});
  run_detector(det, sc);
  CHECK(det.anomalous_ticks().empty());
}

TEST_CASE("truth ticks are exactly where frames differ from the clean stream") {
  ScenarioConfig c;
  c.seed = 12;
  c.load_variability = 0.1;
  c.noise_stdev = 0.01;
  Scenario sc = generate_scenario(c, test::case118());
  Scenario clean = without_anomalies(sc);
  REQUIRE(clean.frames.size() == sc.frames.size());
  std::vector<int> diff;
  for (std::size_t i = 0; i < sc.frames.size(); ++i) {
    CHECK(sc.frames[i].injections == clean.frames[i].injections);
    if (sc.frames[i].flows != clean.frames[i].flows) diff.push_back(sc.frames[i].tick);
  }
  CHECK(diff == sc.truth_ticks());
}

TEST_CASE("case2383wp default scenario") {
  ScenarioConfig c;
  Scenario sc = generate_scenario(c, test::load("case2383wp.m"));
  CHECK(sc.frames.size() == 1200);
  CHECK(sc.truth.size() == 20);
  CHECK(sc.sensors.buses.size() == 238);
  for (const auto& a : sc.truth) CHECK_FALSE(sc.sensors.observes(a.branch));
}

TEST_CASE("property: identical seeds give byte-identical scenario files") {
  Rng rng(2024);
  for (int i = 0; i < 100; ++i) {
    ScenarioConfig c;
    c.seed = rng.bits();
    c.n_periods = 2 + static_cast<int>(rng.index(3));
    c.n_tau = 3 + static_cast<int>(rng.index(6));
    c.n_anomalies = static_cast<int>(rng.index(3));
    c.load_variability = 0.5 * rng.uniform();
    c.noise_stdev = 0.05 * rng.uniform();
    c.n_shift_events = static_cast<int>(rng.index(3));
    c.sensor_fraction = 0.1 + 0.3 * rng.uniform();
    CasePtr g = (i % 2 == 0) ? test::case14() : test::case118();
    Scenario a = generate_scenario(c, g);
    Scenario b = generate_scenario(c, g);
    const fs::path da = scratch("a"), db = scratch("b");
    save_scenario(da, a, "case.m");
    save_scenario(db, b, "case.m");
    for (const char* f : {"config.json", "frames.csv", "truth.csv", "topologies.json"}) {
      CAPTURE(f);
      CHECK(slurp(da / f) == slurp(db / f));
    }
    fs::remove_all(da);
    fs::remove_all(db);
  }
}

TEST_CASE("config validation") {
  CasePtr g = test::case118();
  auto rejects = [&](auto mutate) {
    ScenarioConfig c;
    mutate(c);
    CHECK_THROWS_AS(c.validate(), UsageError);
    CHECK_THROWS_AS(generate_scenario(c, g), UsageError);
  };
  rejects([](ScenarioConfig& c) { c.n_periods = 0; });
  rejects([](ScenarioConfig& c) { c.n_tau = 0; });
  rejects([](ScenarioConfig& c) { c.n_anomalies = -1; });
  rejects([](ScenarioConfig& c) { c.n_anomalies = 1200; });
  rejects([](ScenarioConfig& c) { c.load_variability = -0.1; });
  rejects([](ScenarioConfig& c) { c.noise_stdev = -0.1; });
  rejects([](ScenarioConfig& c) { c.shift_bus_fraction = 0.0; });
  rejects([](ScenarioConfig& c) { c.sensor_fraction = 0.0; });
  rejects([](ScenarioConfig& c) { c.sensor_count = 0; });
  rejects([](ScenarioConfig& c) { c.shift_ticks = {1201}; });
  rejects([](ScenarioConfig& c) { c.anomaly_start_tick = 0; });
  ScenarioConfig ok;
  CHECK_NOTHROW(ok.validate());
}

TEST_CASE("every branch observed leaves no anomaly candidate") {
  ScenarioConfig c;
  c.sensor_fraction = 1.0;
  CHECK_THROWS_AS(generate_scenario(c, test::case118()), ModelError);
  c.n_anomalies = 0;
  CHECK(generate_scenario(c, test::case118()).frames.size() == 1200);
}
