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
#include <array>
#include <string>

#include "doctest.h"
#include "gridcal/error.hpp"
#include "gridcal/netmodel.hpp"
#include "support.hpp"

using namespace gridcal;
using gridcal::test::triangle;

namespace {

std::string replace(std::string s, const std::string& from, const std::string& to) {
  auto pos = s.find(from);
  REQUIRE(pos != std::string::npos);
  return s.replace(pos, from.size(), to);
}

// Random connected case: a spanning tree plus extra chords.
GridCase random_case(Rng& rng, int n_bus) {
  std::vector<Bus> buses;
  for (int i = 0; i < n_bus; ++i) {
    buses.push_back({i + 1, std::round(rng.uniform() * 1000.0) / 10.0, std::round(rng.uniform() * 1000.0) / 10.0});
  }
  std::vector<Branch> branches;
  int id = 1;
  for (int i = 1; i < n_bus; ++i) {
    Branch b;
    b.id = id++;
    b.from_bus = static_cast<int>(rng.index(static_cast<std::size_t>(i))) + 1;
    b.to_bus = i + 1;
    b.reactance = 0.01 + rng.uniform();
    b.resistance = rng.uniform() * 0.1;
    b.charging = rng.uniform() * 0.2;
    b.tap_ratio = rng.uniform() < 0.3 ? 0.95 + 0.1 * rng.uniform() : 0.0;
    b.shift_deg = 0.0;
    b.in_service = rng.uniform() > 0.1;
    branches.push_back(b);
  }
  for (int c = 0; c < n_bus / 2; ++c) {
    Branch b;
    b.id = id++;
    b.from_bus = static_cast<int>(rng.index(static_cast<std::size_t>(n_bus))) + 1;
    do {
      b.to_bus = static_cast<int>(rng.index(static_cast<std::size_t>(n_bus))) + 1;
    } while (b.to_bus == b.from_bus);
    b.reactance = 1e-3 + rng.uniform();
    branches.push_back(b);
  }
  return GridCase("random", 100.0, buses, branches, static_cast<int>(rng.index(static_cast<std::size_t>(n_bus))) + 1);
}

}  // namespace

TEST_CASE("triangle case parses to three buses and three branches") {
  auto g = triangle();
  CHECK(g->buses().size() == 3);
  CHECK(g->branches().size() == 3);
  CHECK(g->slack_bus() == 1);
  CHECK(g->base_mva() == 100.0);
  CHECK(g->branch(1).from_bus == 2);
  CHECK(g->branch(1).to_bus == 1);
  CHECK(g->branch(1).reactance == 1.0);
  auto p = g->net_injections_pu();
  CHECK(p[0] == doctest::Approx(-1.0));
  CHECK(p[1] == doctest::Approx(1.0));
  CHECK(p[2] == doctest::Approx(0.0));
}

TEST_CASE("generators are aggregated per bus and status-0 units skipped") {
  std::string text = replace(test::kTriangleText, "\t2\t100\t0\t300\t-300\t1\t100\t1\t250\t10;\n",
                             "\t2\t60\t0\t300\t-300\t1\t100\t1\t250\t10;\n"
                             "\t2\t40\t0\t300\t-300\t1\t100\t1\t250\t10;\n"
                             "\t3\t999\t0\t300\t-300\t1\t100\t0\t250\t10;\n");
  GridCase g = parse_case(text);
  CHECK(g.buses()[1].p_gen_mw == doctest::Approx(100.0));
  CHECK(g.buses()[2].p_gen_mw == 0.0);
}

TEST_CASE("shipped cases have the documented sizes") {
  auto big = test::load("case2383wp.m");
  CHECK(big->buses().size() == 2383);
  CHECK(big->branches().size() == 2896);
  auto c118 = test::case118();
  CHECK(c118->buses().size() == 118);
  CHECK(c118->branches().size() == 186);
  CHECK(test::case14()->buses().size() == 14);
  auto c9 = test::load("case9.m");
  CHECK(c9->buses().size() == 9);
  CHECK(c9->branches().size() == 9);
}

TEST_CASE("branch referencing an absent bus is a model error") {
  std::string text = replace(test::kTriangleText, "\t3\t1\t0\t1\t0\t250", "\t99\t1\t0\t1\t0\t250");
  CHECK_THROWS_AS(parse_case(text), ModelError);
}

TEST_CASE("missing or duplicate slack is a model error") {
  std::string none = replace(test::kTriangleText, "\t1\t3\t100", "\t1\t2\t100");
  CHECK_THROWS_AS(parse_case(none), ModelError);
  std::string two = replace(test::kTriangleText, "\t3\t1\t0\t0", "\t3\t3\t0\t0");
  CHECK_THROWS_AS(parse_case(two), ModelError);
}

TEST_CASE("duplicate bus id is a model error") {
  std::string text = replace(test::kTriangleText, "\t3\t1\t0\t0\t0", "\t2\t1\t0\t0\t0");
  CHECK_THROWS_AS(parse_case(text), ModelError);
}

TEST_CASE("malformed rows report their line number") {
  std::string text = replace(test::kTriangleText, "\t2\t3\t0\t1\t0\t250", "\t2\tabc\t0\t1\t0\t250");
  try {
    parse_case(text);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 14);
    CHECK(std::string(e.what()).find("line 14") != std::string::npos);
    CHECK(e.kind() == ErrorKind::kData);
  }
  std::string short_row = replace(test::kTriangleText, "\t2\t3\t0\t1\t0\t250\t250\t250\t0\t0\t1\t-360\t360;",
                                  "\t2\t3\t0;");
  CHECK_THROWS_AS(parse_case(short_row), ParseError);
  CHECK_THROWS_AS(parse_case("function mpc = x\nmpc.baseMVA = 100;\n"), ParseError);
}

TEST_CASE("non-positive reactance and self loops are rejected") {
  CHECK_THROWS_AS(parse_case(replace(test::kTriangleText, "\t2\t3\t0\t1\t", "\t2\t3\t0\t0\t")), ModelError);
  CHECK_THROWS_AS(parse_case(replace(test::kTriangleText, "\t2\t3\t0\t1\t", "\t2\t2\t0\t1\t")), ModelError);
  CHECK_THROWS_AS(GridCase("x", 0.0, {{1, 0, 0}}, {}, 1), ModelError);
}

TEST_CASE("out-of-service branches are excluded from the baseline") {
  std::string text = replace(test::kTriangleText, "\t3\t1\t0\t1\t0\t250\t250\t250\t0\t0\t1",
                             "\t3\t1\t0\t1\t0\t250\t250\t250\t0\t0\t0");
  auto g = std::make_shared<const GridCase>(parse_case(text));
  CHECK(g->branches().size() == 3);
  CHECK(Topology::baseline(g).active_edges() == EdgeList{1, 2});
}

TEST_CASE("JSON case round-trips the triangle and case118") {
  for (CasePtr g : {triangle(), test::case118()}) {
    GridCase back = parse_case_json(write_case_json(*g), g->name());
    CHECK(back == *g);
    CHECK(write_case_json(back) == write_case_json(*g));
  }
}

TEST_CASE("property: JSON round-trip of random cases (200 cases)") {
  for (int c = 0; c < 200; ++c) {
    Rng rng = Rng::stream(11, 0, static_cast<std::uint64_t>(c));
    GridCase g = random_case(rng, 2 + static_cast<int>(rng.index(30)));
    GridCase back = parse_case_json(write_case_json(g), "random");
    REQUIRE(back == g);
  }
}

TEST_CASE("malformed JSON case reports a data error") {
  CHECK_THROWS_AS(parse_case_json("{", "x"), Error);
  CHECK_THROWS_AS(parse_case_json(R"({"name":"x","baseMVA":100,"slack_bus":1,"buses":[],"branches":[],"extra":1})", "x"),
                  Error);
}

TEST_CASE("observed edges follow sensor adjacency") {
  auto g = triangle();
  std::array<BusId, 1> one{1};
  SensorSet s = observed_edges(*g, one);
  CHECK(s.observed_edges == EdgeList{1, 3});
  CHECK(s.observes(1));
  CHECK_FALSE(s.observes(2));

  std::array<BusId, 3> all{3, 1, 2};
  CHECK(observed_edges(*g, all).observed_edges == EdgeList{1, 2, 3});
  CHECK(observed_edges(*g, all).buses == std::vector<BusId>{1, 2, 3});

  SensorSet none = observed_edges(*g, std::span<const BusId>{});
  CHECK(none.buses.empty());
  CHECK(none.observed_edges.empty());

  std::array<BusId, 1> bad{42};
  CHECK_THROWS_AS(observed_edges(*g, bad), ModelError);
}

TEST_CASE("property: every observed edge touches a sensor (100 cases)") {
  auto g = test::case118();
  for (int c = 0; c < 100; ++c) {
    Rng rng = Rng::stream(12, 0, static_cast<std::uint64_t>(c));
    std::vector<BusId> sensors;
    for (std::size_t i : rng.sample(g->buses().size(), 1 + rng.index(40))) sensors.push_back(g->buses()[i].id);
    SensorSet s = observed_edges(*g, sensors);
    REQUIRE(std::is_sorted(s.observed_edges.begin(), s.observed_edges.end()));
    for (BranchId e : s.observed_edges) {
      const Branch& b = g->branch(e);
      REQUIRE((std::count(sensors.begin(), sensors.end(), b.from_bus) + std::count(sensors.begin(), sensors.end(), b.to_bus)) > 0);
    }
    std::size_t incident = 0;
    for (const Branch& b : g->branches()) {
      incident += std::count(sensors.begin(), sensors.end(), b.from_bus) + std::count(sensors.begin(), sensors.end(), b.to_bus) > 0;
    }
    REQUIRE(s.observed_edges.size() == incident);
  }
}

TEST_CASE("symmetric difference") {
  auto g = test::case14();
  Topology base = Topology::baseline(g);
  CHECK(symmetric_difference(base, base).empty());
  std::array<BranchId, 1> seven{7};
  CHECK(symmetric_difference(base, base.without(seven, 1)) == EdgeList{7});
  std::array<BranchId, 1> three{3}, five{5};
  Topology a = base.without(three, 1), b = base.without(five, 2);
  CHECK(symmetric_difference(a, b) == EdgeList{3, 5});
  CHECK(symmetric_difference(b, a) == EdgeList{3, 5});
  CHECK_THROWS_AS(symmetric_difference(base, Topology::baseline(triangle())), ModelError);
}

TEST_CASE("property: symmetric difference is symmetric and empty iff equal (100 cases)") {
  auto g = test::case118();
  Topology base = Topology::baseline(g);
  for (int c = 0; c < 100; ++c) {
    Rng rng = Rng::stream(13, 0, static_cast<std::uint64_t>(c));
    auto pick = [&] {
      EdgeList removed;
      for (std::size_t i : rng.sample(base.size(), rng.index(4))) removed.push_back(base.active_edges()[i]);
      return base.without(removed, 0);
    };
    Topology a = pick(), b = pick();
    REQUIRE(symmetric_difference(a, b) == symmetric_difference(b, a));
    REQUIRE(symmetric_difference(a, b).empty() == a.same_edges(b));
  }
}

TEST_CASE("topology operations and validation") {
  auto g = triangle();
  Topology base = Topology::baseline(g);
  CHECK(base.size() == 3);
  std::array<BranchId, 1> one{1};
  Topology t = base.without(one, 4);
  CHECK(t.label() == 4);
  CHECK_FALSE(t.contains(1));
  CHECK(t.with(one, 5).same_edges(base));
  CHECK(t.union_with(base).same_edges(base));
  CHECK_THROWS_AS(Topology(g, EdgeList{1, 9}), ModelError);
}

TEST_CASE("islanding is reported with its components") {
  auto g = triangle();
  Topology t(g, EdgeList{1});
  // Bus 3 has no active branch: de-energized, not an island.
  CHECK_NOTHROW(t.check_connected());
  CHECK(t.components().size() == 1);

  auto g14 = test::case14();
  Topology base = Topology::baseline(g14);
  // Cut bus 8, which hangs off bus 7 by branch 14 alone, together with bus 7's other links.
  std::vector<BranchId> cut;
  for (const Branch& b : g14->branches()) {
    if (b.from_bus == 7 || b.to_bus == 7) {
      if (!(b.from_bus == 8 || b.to_bus == 8)) cut.push_back(b.id);
    }
  }
  Topology islanded = base.without(cut, 1);
  REQUIRE(islanded.components().size() == 2);
  CHECK(islanded.components()[1] == std::vector<BusId>{7, 8});
  CHECK_THROWS_AS(islanded.check_connected(), IslandingError);
}

TEST_CASE("bridges of case14 and the triangle") {
  CHECK(Topology::baseline(triangle()).bridges().empty());
  auto g14 = test::case14();
  EdgeList br = Topology::baseline(g14).bridges();
  REQUIRE(br.size() == 1);
  const Branch& b = g14->branch(br[0]);
  CHECK(((b.from_bus == 7 && b.to_bus == 8) || (b.from_bus == 8 && b.to_bus == 7)));
}
