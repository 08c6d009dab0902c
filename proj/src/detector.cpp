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

#include "gridcal/detector.hpp"

#include <cmath>
#include <limits>

#include "gridcal/error.hpp"

namespace gridcal {

TickModel fit_model(std::span<const ContextAgnosticFrame> history, const TickWeights& weights,
                    double sigma_floor) {
  if (history.empty()) throw ModelError("cannot fit a model to an empty history");
  if (weights.weights.size() != history.size()) {
    throw ModelError("weight vector length " + std::to_string(weights.weights.size()) +
                     " differs from history length " + std::to_string(history.size()));
  }
  Eigen::Index n = -1;
  for (std::size_t t = 0; t < history.size() && n < 0; ++t) {
    if (weights.weights[t] != 0.0) n = history[t].values.size();
  }
  if (n < 0) throw ModelError("every history weight is zero");
  TickModel m;
  m.weights = weights;
  m.means = Eigen::VectorXd::Zero(n);
  m.stdevs = Eigen::VectorXd::Zero(n);
  for (std::size_t t = 0; t < history.size(); ++t) {
    const double w = weights.weights[t];
    if (w == 0.0) continue;
    if (history[t].values.size() != n) throw ModelError("history frames differ in length");
    m.means += w * history[t].values;
  }
  for (std::size_t t = 0; t < history.size(); ++t) {
    const double w = weights.weights[t];
    if (w == 0.0) continue;
    m.stdevs += w * (history[t].values - m.means).array().square().matrix();
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    const double floor = sigma_floor * std::max(1.0, std::abs(m.means[i]));
    m.stdevs[i] = std::max(std::sqrt(m.stdevs[i]), floor);
  }
  return m;
}

AnomalyVerdict score(const ContextAgnosticFrame& frame, const TickModel& model,
                     const EdgeList& edges) {
  const Eigen::Index n = frame.values.size();
  if (model.means.size() != n || static_cast<Eigen::Index>(edges.size()) != n) {
    throw ModelError("tick " + std::to_string(frame.tick) + ": frame has " + std::to_string(n) +
                     " values, model has " + std::to_string(model.means.size()));
  }
  AnomalyVerdict v;
  v.tick = frame.tick;
  v.score = 0.0;
  v.argmax_edge = edges.empty() ? 0 : edges.front();
  for (Eigen::Index i = 0; i < n; ++i) {
    double z = std::abs((frame.values[i] - model.means[i]) / model.stdevs[i]);
    if (z > v.score) {
      v.score = z;
      v.argmax_edge = edges[static_cast<std::size_t>(i)];
    }
  }
  return v;
}

// ---------------------------------------------------------------------------

Detector::Detector(std::shared_ptr<const BaselineContext> baseline, DetectorConfig config)
    : baseline_(std::move(baseline)), config_(config) {
  if (config_.n_tau <= 0) throw UsageError("ticks per period must be positive");
  if (config_.rho && !(*config_.rho > 0.0)) throw UsageError("rho must be positive");
  mapper_ = std::make_unique<ContextMapper>(baseline_, config_.variant);
}

void Detector::set_period_topology(int period, Topology topology) {
  if (topology.grid() != baseline_->topology().grid()) {
    throw ModelError("period topology belongs to a different case");
  }
  periods_.insert_or_assign(period, std::move(topology));
  period_distances_.clear();
}

const Topology& Detector::period_topology(int period) const {
  auto it = periods_.find(period);
  if (it == periods_.end()) {
    throw ModelError("no topology registered for period " + std::to_string(period));
  }
  return it->second;
}

double Detector::period_distance(int from, int to) {
  auto key = std::make_pair(from, to);
  auto it = period_distances_.find(key);
  if (it != period_distances_.end()) return it->second;
  double d = distances_.distance(period_topology(from), period_topology(to)).value;
  period_distances_.emplace(key, d);
  return d;
}

AnomalyVerdict Detector::step(const MeasurementFrame& frame) {
  if (!raw_.empty() && frame.tick <= raw_.back().tick) {
    throw ModelError("tick " + std::to_string(frame.tick) + " does not follow tick " +
                     std::to_string(raw_.back().tick));
  }
  const Topology& topo = period_topology(frame.period);
  const EdgeList& edges = baseline_->edges();

  AnomalyVerdict v;
  ContextAgnosticFrame mapped;
  bool ok = true;
  try {
    mapped = mapper_->map(frame, topo);
  } catch (const Error& e) {
    ok = false;
    v.error = e.what();
  }

  // Distances and anomaly mask over the usable (mapped) history.
  std::vector<std::size_t> idx;
  std::vector<double> d;
  std::vector<bool> mask;
  for (std::size_t i = 0; i < raw_.size(); ++i) {
    if (!usable_[i]) continue;
    idx.push_back(i);
    d.push_back(period_distance(raw_[i].period, frame.period));
    mask.push_back(anomalous_.contains(raw_[i].tick));
  }
  const bool warmup = static_cast<int>(idx.size()) < config_.warmup_ticks();

  if (!ok) {
    v.tick = frame.tick;
    v.score = std::numeric_limits<double>::infinity();
    v.argmax_edge = edges.empty() ? 0 : edges.front();
  } else if (idx.empty()) {
    v.tick = frame.tick;
    v.argmax_edge = edges.empty() ? 0 : edges.front();
  } else {
    const double rho = config_.rho.value_or(default_rho(d));
    last_weights_ = compute_weights(d, rho, mask);
    last_weight_ticks_.clear();
    for (std::size_t i : idx) last_weight_ticks_.push_back(raw_[i].tick);
    if (last_weights_.fallback) {
      warnings_.push_back("tick " + std::to_string(frame.tick) +
                          ": every historical tick is anomalous, using distance-only weights");
    }
    // Spread onto the full history; unusable ticks keep weight zero.
    TickWeights full = last_weights_;
    full.weights.assign(raw_.size(), 0.0);
    for (std::size_t j = 0; j < idx.size(); ++j) full.weights[idx[j]] = last_weights_.weights[j];
    TickModel model = fit_model(mapped_, full, config_.sigma_floor);
    AnomalyVerdict s = score(mapped, model, edges);
    v.tick = s.tick;
    v.score = s.score;
    v.argmax_edge = s.argmax_edge;
  }
  v.threshold = config_.threshold;
  v.warmup = warmup && ok;
  v.is_anomalous = v.score > config_.threshold;
  if (v.is_anomalous && (!warmup || !ok)) anomalous_.insert(frame.tick);

  raw_.push_back(frame);
  mapped_.push_back(ok ? std::move(mapped) : ContextAgnosticFrame{frame.tick, {}, 0.0});
  usable_.push_back(ok);
  return v;
}

void Detector::reanchor(std::shared_ptr<const BaselineContext> baseline) {
  if (!baseline) throw ModelError("reanchor without baseline");
  if (baseline->topology().grid() != baseline_->topology().grid()) {
    throw ModelError("new baseline belongs to a different case");
  }
  auto mapper = std::make_unique<ContextMapper>(baseline, config_.variant);
  std::vector<MeasurementFrame> raw;
  std::vector<ContextAgnosticFrame> mapped;
  std::vector<bool> usable;
  for (std::size_t i = 0; i < raw_.size(); ++i) {
    try {
      mapped.push_back(mapper->map(raw_[i], period_topology(raw_[i].period)));
      raw.push_back(raw_[i]);
      usable.push_back(true);
    } catch (const Error& e) {
      warnings_.push_back("reanchor dropped tick " + std::to_string(raw_[i].tick) + ": " + e.what());
    }
  }
  baseline_ = std::move(baseline);
  mapper_ = std::move(mapper);
  raw_ = std::move(raw);
  mapped_ = std::move(mapped);
  usable_ = std::move(usable);
}

}  // namespace gridcal
