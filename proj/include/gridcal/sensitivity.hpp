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

// DC power flow and the linear sensitivity factors built on it.
//
// All quantities are per-unit. Injections are bus-indexed (GridCase::buses()
// order) and any imbalance is assigned to the slack bus before solving.

#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "gridcal/netmodel.hpp"

namespace gridcal {

struct DcFlowSolution {
  EdgeList edges;                   // active edges of the solved topology
  std::vector<double> angles;       // radians, per bus; slack = 0
  std::vector<double> flows;        // per edge in `edges`, oriented from_bus -> to_bus
  std::vector<double> injections;   // balanced injections actually solved
  double residual = 0.0;            // max |B theta - p| over non-slack buses

  double flow(BranchId id) const;
  /// Flows on a sorted subset of `edges`.
  Eigen::VectorXd flows_on(const EdgeList& subset) const;
};

struct PtdfMatrix {
  EdgeList rows;           // observed active edges
  Eigen::MatrixXd values;  // rows.size() x number of buses
  BusId slack = 0;
  int topology_label = 0;

  /// F * delta; delta is bus-indexed.
  Eigen::VectorXd apply(const Eigen::VectorXd& delta) const { return values * delta; }
};

struct LodfVector {
  BranchId outage = 0;
  EdgeList rows;
  Eigen::VectorXd values;  // d_e for each e in rows; -1 on the outage edge itself
  int topology_label = 0;
};

/// Relative size of |1 - PTDF_kk| below which an outage is treated as islanding.
inline constexpr double kBridgeTolerance = 1e-8;

/// Reduced susceptance matrix of one topology, factored once. Every solve,
/// PTDF row and LODF vector for that topology goes through this object.
/// Immutable after construction.
class DcNetwork {
 public:
  explicit DcNetwork(Topology topology, std::optional<BusId> slack = std::nullopt);

  const Topology& topology() const { return topology_; }
  const GridCase& grid() const { return *topology_.grid(); }
  BusId slack() const { return slack_; }

  /// Injections are balanced at the slack first.
  DcFlowSolution solve(std::span<const double> injections) const;

  /// Flows on `rows` (sorted active edges) for bus-indexed injections.
  /// Imbalance is absorbed by the slack, so this equals F * p.
  Eigen::VectorXd flows(const EdgeList& rows, const Eigen::VectorXd& injections) const;

  /// Rows of the PTDF matrix for the given active edges.
  PtdfMatrix ptdf(const EdgeList& rows) const;

  /// Flow on `rows` per unit transferred from `from` to `to` (bus ids).
  Eigen::VectorXd transfer(const EdgeList& rows, BusId from, BusId to) const;

  /// LODF of `outage` on `rows`. Throws BridgeError for islanding outages.
  LodfVector lodf(const EdgeList& rows, BranchId outage) const;

 private:
  Eigen::VectorXd angles(const Eigen::VectorXd& reduced_rhs) const;
  Eigen::VectorXd edge_flows(const EdgeList& rows, const Eigen::VectorXd& bus_angles) const;

  Topology topology_;
  BusId slack_;
  std::size_t slack_index_;
  std::vector<int> reduced_;  // bus index -> reduced index, -1 for slack / de-energized
  std::size_t n_reduced_ = 0;
  std::shared_ptr<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>> factor_;
  Eigen::SparseMatrix<double> b_reduced_;
};

DcFlowSolution solve_dc(const Topology& topology, std::span<const double> injections);

/// PTDF restricted to the sensor set's observed edges that are active in `topology`.
PtdfMatrix ptdf(const Topology& topology, const SensorSet& sensors,
                std::optional<BusId> slack = std::nullopt);

/// LODF of `outage` (active in `topology`) on the observed active edges.
LodfVector lodf(const Topology& topology, const SensorSet& sensors, BranchId outage);

}  // namespace gridcal
