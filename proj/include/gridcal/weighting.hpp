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

// Weights for historical ticks from LODF-based graph distances.
//
// A past tick whose topology is far from the current one gets a large
// distance d_tau. Weights minimize  w'd + (rho/2) ||w||^2  over the simplex,
// which has the water-filling solution w_tau = max((lambda - d_tau) / rho, 0).
// Ticks already classified as anomalous are then zeroed and the rest
// renormalized.

#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <utility>
#include <vector>

#include "gridcal/netmodel.hpp"
#include "gridcal/sensitivity.hpp"

namespace gridcal {

struct GraphDistance {
  int from_period = 0;
  int to_period = 0;
  double value = 0.0;
  EdgeList bridge_edges;  // symmetric-difference edges whose LODF is undefined
};

struct TickWeights {
  std::vector<double> distances;
  std::vector<double> weights;
  double lambda_star = 0.0;
  double rho = 0.0;
  std::vector<bool> anomalous;
  bool refit = false;     // masking emptied the support; re-solved over the clean ticks
  bool fallback = false;  // every tick was masked; distance-only weights used
};

/// Mean |d_l^k| over all union edges l != k, divided by the union size.
/// Throws BridgeError when k is a bridge of the union graph.
double edge_contribution(const Topology& union_topology, BranchId k);
double edge_contribution(const DcNetwork& union_network, BranchId k);

/// Sum of edge contributions over the symmetric difference, each computed on
/// the union of both edge sets. Bridge edges take the largest contribution of
/// the non-bridge edges in the difference (1.0 when there are none).
GraphDistance graph_distance(const Topology& a, const Topology& b);

/// Caches union factorizations and pairwise distances. Thread-safe.
class GraphDistanceCache {
 public:
  GraphDistance distance(const Topology& a, const Topology& b);
  std::size_t size() const;

 private:
  mutable std::mutex mu_;
  std::map<std::pair<EdgeList, EdgeList>, GraphDistance> cache_;
};

/// Block-constant extension: ticks of past period t get D[t], the remaining
/// (current period) ticks get 0. Requires D.size() * n_tau <= n_ticks.
std::vector<double> tickwise_distances(std::span<const double> period_distances, int n_tau,
                                       int n_ticks);

/// Unique lambda with sum_tau max((lambda - d_tau) / rho, 0) = 1, by sorting
/// d and scanning the breakpoints.
double solve_lambda(std::span<const double> d, double rho);

/// Mean distance plus a small epsilon.
double default_rho(std::span<const double> d);

/// max((lambda - d) / rho, 0), zeroed on anomalous ticks and renormalized.
/// When the mask zeroes every weight, lambda is re-solved over the clean ticks
/// (`refit`); a history with no clean tick ignores the mask (`fallback`).
TickWeights assign_weights(std::span<const double> d, double lambda_star, double rho,
                           const std::vector<bool>& anomalous);

/// solve_lambda followed by assign_weights.
TickWeights compute_weights(std::span<const double> d, double rho,
                            const std::vector<bool>& anomalous);

}  // namespace gridcal
