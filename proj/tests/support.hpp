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

#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "gridcal/netmodel.hpp"
#include "gridcal/scengen.hpp"

namespace gridcal::test {

inline std::filesystem::path data_dir() { return GRIDCAL_DATA_DIR; }

// Triangle with unit reactances. Branch 1 runs 2->1, branch 2 runs 2->3,
// branch 3 runs 3->1. Bus 1 is the slack.
inline const char* kTriangleText = R"(function mpc = triangle
mpc.version = '2';
mpc.baseMVA = 100;
mpc.bus = [
	1	3	100	0	0	0	1	1	0	230	1	1.1	0.9;
	2	2	0	0	0	0	1	1	0	230	1	1.1	0.9;
	3	1	0	0	0	0	1	1	0	230	1	1.1	0.9;
];
mpc.gen = [
	2	100	0	300	-300	1	100	1	250	10;
];
mpc.branch = [
	2	1	0	1	0	250	250	250	0	0	1	-360	360;
	2	3	0	1	0	250	250	250	0	0	1	-360	360;
	3	1	0	1	0	250	250	250	0	0	1	-360	360;
];
)";

inline CasePtr triangle() { return std::make_shared<const GridCase>(parse_case(kTriangleText, "triangle")); }

inline CasePtr load(const std::string& file) {
  return std::make_shared<const GridCase>(load_case(data_dir() / file));
}

inline CasePtr case118() {
  static CasePtr c = load("case118.m");
  return c;
}

inline CasePtr case14() {
  static CasePtr c = load("case14.m");
  return c;
}

// Bus-indexed vector with entries drawn from N(0, scale^2).
inline std::vector<double> random_vector(Rng& rng, std::size_t n, double scale = 1.0) {
  std::vector<double> v(n);
  for (auto& x : v) x = scale * rng.normal();
  return v;
}

}  // namespace gridcal::test
