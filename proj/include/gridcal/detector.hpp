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

#include <Eigen/Dense>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "gridcal/mapping.hpp"
#include "gridcal/weighting.hpp"

namespace gridcal {

struct TickModel {
  Eigen::VectorXd means;
  Eigen::VectorXd stdevs;  // floored
  TickWeights weights;
};

struct AnomalyVerdict {
  int tick = 0;
  double score = 0.0;  // +inf when the frame could not be mapped
  BranchId argmax_edge = 0;
  bool is_anomalous = false;
  double threshold = 0.0;
  bool warmup = false;  // scored before the model was trusted; never enters the anomaly set
  std::string error;    // non-empty when mapping failed
};

/// Relative floor on the per-sensor standard deviation.
inline constexpr double kSigmaFloor = 1e-6;

/// Weighted per-edge mean and standard deviation. Ticks with zero weight are
/// skipped, so their values may be non-finite.
TickModel fit_model(std::span<const ContextAgnosticFrame> history, const TickWeights& weights,
                    double sigma_floor = kSigmaFloor);

/// Max absolute z-score; ties go to the lowest branch id. `edges` indexes the
/// frame and model vectors.
AnomalyVerdict score(const ContextAgnosticFrame& frame, const TickModel& model,
                     const EdgeList& edges);

struct DetectorConfig {
  double threshold = 10.0;
  std::optional<double> rho;  // default: mean distance + epsilon, per tick
  int n_tau = 60;
  std::optional<int> warmup;  // default: n_tau
  double sigma_floor = kSigmaFloor;
  MappingVariant variant = MappingVariant::kFull;

  int warmup_ticks() const { return warmup.value_or(n_tau); }
};

/// Streaming detector. Frames must arrive in strictly increasing tick order;
/// every period referenced by a frame needs a registered topology.
class Detector {
 public:
  Detector(std::shared_ptr<const BaselineContext> baseline, DetectorConfig config);

  void set_period_topology(int period, Topology topology);
  const Topology& period_topology(int period) const;

  AnomalyVerdict step(const MeasurementFrame& frame);

  /// Remaps the stored raw frames under a new baseline. Frames that fail to
  /// map are dropped and reported through warnings(). The anomaly set is kept.
  void reanchor(std::shared_ptr<const BaselineContext> baseline);

  const DetectorConfig& config() const { return config_; }
  void set_threshold(double threshold) { config_.threshold = threshold; }
  const ContextMapper& mapper() const { return *mapper_; }
  const std::vector<MeasurementFrame>& raw_history() const { return raw_; }
  const std::vector<ContextAgnosticFrame>& history() const { return mapped_; }
  const std::set<int>& anomalous_ticks() const { return anomalous_; }
  /// Weights used for the most recent score (empty before the second tick).
  const TickWeights& last_weights() const { return last_weights_; }
  /// History tick of each entry of last_weights().
  const std::vector<int>& last_weight_ticks() const { return last_weight_ticks_; }
  const std::vector<std::string>& warnings() const { return warnings_; }

 private:
  double period_distance(int from, int to);

  std::shared_ptr<const BaselineContext> baseline_;
  DetectorConfig config_;
  std::unique_ptr<ContextMapper> mapper_;
  std::map<int, Topology> periods_;
  GraphDistanceCache distances_;
  std::map<std::pair<int, int>, double> period_distances_;

  std::vector<MeasurementFrame> raw_;
  std::vector<ContextAgnosticFrame> mapped_;
  std::vector<bool> usable_;
  std::set<int> anomalous_;
  TickWeights last_weights_;
  std::vector<int> last_weight_ticks_;
  std::vector<std::string> warnings_;
};

}  // namespace gridcal
