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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gridcal/detector.hpp"
#include "gridcal/scengen.hpp"

namespace gridcal {

/// Mann-Whitney AUC: probability that a positive outscores a negative, ties
/// counting one half. Throws ModelError unless both classes are present.
double auc(std::span<const double> scores, const std::vector<bool>& positive);

/// F-measure of the k highest scores against the positives. Ties at the
/// cutoff go to the earlier index. Returns 0 when precision + recall = 0.
double f_measure_topk(std::span<const double> scores, const std::vector<bool>& positive,
                      std::size_t k);

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
};
std::vector<RocPoint> roc_curve(std::span<const double> scores, const std::vector<bool>& positive);

struct RunResult {
  MappingVariant variant = MappingVariant::kFull;
  int sensor_count = 0;
  std::uint64_t seed = 0;
  std::vector<int> ticks;
  std::vector<double> scores;
  std::vector<bool> positive;
  std::vector<AnomalyVerdict> verdicts;
  double auc = 0.0;
  double f_measure = 0.0;
  int undetectable = 0;  // truth anomalies with no coupling onto observed flows
  std::string error;     // non-empty when the cell failed
};

struct RunOptions {
  std::optional<double> rho;
  double threshold = 10.0;
  std::optional<std::size_t> k;  // default: number of truth ticks
  std::optional<int> warmup;
};

/// Streams the whole scenario through a detector of the given variant.
RunResult run_variant(const Scenario& scenario, MappingVariant variant, const RunOptions& options = {});

/// Same, with sensors restricted to a subset of the scenario's sensor buses.
RunResult run_variant(const Scenario& scenario, MappingVariant variant,
                      std::span<const BusId> sensors, const RunOptions& options);

/// Registers the scenario's period topologies and streams its frames.
std::vector<AnomalyVerdict> run_detector(Detector& detector, const Scenario& scenario);

struct EvalConfig {
  std::filesystem::path case_path;
  ScenarioConfig scenario;
  std::vector<MappingVariant> variants{MappingVariant::kNaive, MappingVariant::kInverseProjection,
                                       MappingVariant::kFull};
  std::vector<double> sensor_fractions{0.05, 0.10, 0.25, 0.50, 1.00};
  std::vector<int> sensor_counts;  // overrides fractions when non-empty
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  RunOptions run;
  int threads = 0;  // 0: hardware concurrency
};

/// Cartesian product of seeds x sensor counts x variants. Each (seed, sensor
/// count) cell generates one scenario shared by its variants. Failed cells
/// carry an error message instead of metrics. Rows are ordered by seed,
/// sensor count, then variant.
std::vector<RunResult> sweep(const EvalConfig& config, CasePtr grid);

/// results.csv, roc_points.csv and figure_data/{auc,f_measure}.csv.
void write_sweep(const std::filesystem::path& out_dir, const std::vector<RunResult>& results);

}  // namespace gridcal
