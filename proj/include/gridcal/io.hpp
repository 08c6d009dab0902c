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

// File formats. Power quantities are MW on disk and per-unit in memory.
// Schemas are documented in docs/formats.md.

#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "gridcal/detector.hpp"
#include "gridcal/eval.hpp"
#include "gridcal/scengen.hpp"
#include "json.hpp"

namespace gridcal {

/// Shortest text that reads back to the same double ("%.17g" class);
/// "inf", "-inf" and "nan" for non-finite values.
std::string format_double(double v);
std::string csv_quote(const std::string& field);

nlohmann::ordered_json to_json(const ScenarioConfig& config);
/// Throws UsageError on unknown keys or wrong types, then validates.
ScenarioConfig scenario_config_from_json(const nlohmann::json& j);

/// Writes config.json, frames.csv, truth.csv and topologies.json.
/// `case_path` is recorded in config.json as given.
void save_scenario(const std::filesystem::path& dir, const Scenario& scenario,
                   const std::string& case_path);

/// Reads a scenario directory. A relative case path resolves against `dir`
/// first, then the working directory.
Scenario load_scenario(const std::filesystem::path& dir);

/// Frames in the frames.csv layout; rows may come from any source as long as
/// the header names match the scenario's observed baseline edges and buses.
std::vector<MeasurementFrame> read_frames_csv(std::istream& in, const GridCase& grid,
                                              const SensorSet& sensors,
                                              const std::map<int, Topology>& periods, int n_tau);
void write_frames_csv(std::ostream& out, const Scenario& scenario);

/// One JSON object per line: {tick, score, argmax_edge, anomalous}; score is
/// null when the frame could not be mapped.
std::string verdict_json(const AnomalyVerdict& verdict);

/// `base_dir` anchors a relative case path.
EvalConfig eval_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);

nlohmann::json read_json_file(const std::filesystem::path& path);

}  // namespace gridcal
