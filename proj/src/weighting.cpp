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

#include "gridcal/weighting.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gridcal/error.hpp"

namespace gridcal {

double edge_contribution(const DcNetwork& union_network, BranchId k) {
  const EdgeList& edges = union_network.topology().active_edges();
  LodfVector d = union_network.lodf(edges, k);
  double sum = 0.0;
  for (std::size_t i = 0; i < edges.size(); ++i) {
    if (edges[i] != k) sum += std::abs(d.values[static_cast<Eigen::Index>(i)]);
  }
  return sum / static_cast<double>(edges.size());
}

double edge_contribution(const Topology& union_topology, BranchId k) {
  return edge_contribution(DcNetwork(union_topology), k);
}

namespace {

GraphDistance distance_on(const DcNetwork& net, const Topology& a, const Topology& b) {
  GraphDistance out;
  out.from_period = a.label();
  out.to_period = b.label();
  std::vector<double> good;
  for (BranchId k : symmetric_difference(a, b)) {
    try {
      good.push_back(edge_contribution(net, k));
    } catch (const BridgeError&) {
      out.bridge_edges.push_back(k);
    }
  }
  double sum = std::accumulate(good.begin(), good.end(), 0.0);
  if (!out.bridge_edges.empty()) {
    double sub = good.empty() ? 1.0 : *std::max_element(good.begin(), good.end());
    sum += sub * static_cast<double>(out.bridge_edges.size());
  }
  out.value = sum;
  return out;
}

}  // namespace

GraphDistance graph_distance(const Topology& a, const Topology& b) {
  if (a.same_edges(b)) {
    if (a.grid() != b.grid()) throw ModelError("topologies belong to different cases");
    return GraphDistance{a.label(), b.label(), 0.0, {}};
  }
  Topology u = a.union_with(b);
  return distance_on(DcNetwork(u), a, b);
}

GraphDistance GraphDistanceCache::distance(const Topology& a, const Topology& b) {
  // Distances are symmetric, so key on the ordered pair of edge sets.
  const bool swap = b.active_edges() < a.active_edges();
  auto key = swap ? std::make_pair(b.active_edges(), a.active_edges())
                  : std::make_pair(a.active_edges(), b.active_edges());
  {
    std::lock_guard lock(mu_);
    auto it = cache_.find(key);
    if (it != cache_.end()) {
      GraphDistance g = it->second;
      g.from_period = a.label();
      g.to_period = b.label();
      return g;
    }
  }
  GraphDistance g = graph_distance(a, b);
  std::lock_guard lock(mu_);
  cache_.emplace(std::move(key), g);
  return g;
}

std::size_t GraphDistanceCache::size() const {
  std::lock_guard lock(mu_);
  return cache_.size();
}

std::vector<double> tickwise_distances(std::span<const double> period_distances, int n_tau,
                                       int n_ticks) {
  if (n_tau <= 0) throw UsageError("ticks per period must be positive");
  if (n_ticks < 0) throw UsageError("tick count must be nonnegative");
  const std::size_t past = period_distances.size() * static_cast<std::size_t>(n_tau);
  if (past > static_cast<std::size_t>(n_ticks)) {
    throw ModelError(std::to_string(period_distances.size()) + " past periods of " +
                     std::to_string(n_tau) + " ticks exceed the " + std::to_string(n_ticks) +
                     " available ticks");
  }
  std::vector<double> d(static_cast<std::size_t>(n_ticks), 0.0);
  for (std::size_t i = 0; i < past; ++i) d[i] = period_distances[i / static_cast<std::size_t>(n_tau)];
  return d;
}

double solve_lambda(std::span<const double> d, double rho) {
  if (d.empty()) throw ModelError("cannot weight an empty history");
  if (!(rho > 0.0) || !std::isfinite(rho)) throw UsageError("rho must be positive and finite");
  std::vector<double> s(d.begin(), d.end());
  for (double v : s) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw ModelError("distances must be finite and nonnegative");
  }
  std::sort(s.begin(), s.end());
  // With the j smallest distances active, lambda = (rho + sum_{i<j} s_i) / j,
  // valid when it does not exceed the next breakpoint.
  double prefix = 0.0;
  double lambda = 0.0;
  for (std::size_t j = 0; j < s.size(); ++j) {
    prefix += s[j];
    lambda = (rho + prefix) / static_cast<double>(j + 1);
    if (j + 1 == s.size() || lambda <= s[j + 1]) break;
  }
  return lambda;
}

double default_rho(std::span<const double> d) {
  if (d.empty()) return 1e-9;
  return std::accumulate(d.begin(), d.end(), 0.0) / static_cast<double>(d.size()) + 1e-9;
}

TickWeights assign_weights(std::span<const double> d, double lambda_star, double rho,
                           const std::vector<bool>& anomalous) {
  if (!anomalous.empty() && anomalous.size() != d.size()) {
    throw ModelError("anomaly mask length differs from the distance vector");
  }
  TickWeights tw;
  tw.distances.assign(d.begin(), d.end());
  tw.lambda_star = lambda_star;
  tw.rho = rho;
  tw.anomalous = anomalous.empty() ? std::vector<bool>(d.size(), false) : anomalous;
  tw.weights.resize(d.size());
  std::vector<double> raw(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) raw[i] = std::max((lambda_star - d[i]) / rho, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    tw.weights[i] = tw.anomalous[i] ? 0.0 : raw[i];
    total += tw.weights[i];
  }
  if (!(total > 0.0)) {
    // The mask removed the whole support. Water-fill again over the clean
    // ticks; only a fully anomalous history falls back to ignoring the mask.
    std::vector<double> clean;
    for (std::size_t i = 0; i < d.size(); ++i) {
      if (!tw.anomalous[i]) clean.push_back(d[i]);
    }
    if (!clean.empty()) {
      tw.refit = true;
      tw.lambda_star = solve_lambda(clean, rho);
      total = 0.0;
      for (std::size_t i = 0; i < d.size(); ++i) {
        tw.weights[i] = tw.anomalous[i] ? 0.0 : std::max((tw.lambda_star - d[i]) / rho, 0.0);
        total += tw.weights[i];
      }
    } else {
      tw.fallback = true;
      tw.weights = raw;
      total = std::accumulate(raw.begin(), raw.end(), 0.0);
    }
  }
  for (double& w : tw.weights) w /= total;
  return tw;
}

TickWeights compute_weights(std::span<const double> d, double rho,
                            const std::vector<bool>& anomalous) {
  return assign_weights(d, solve_lambda(d, rho), rho, anomalous);
}

}  // namespace gridcal
