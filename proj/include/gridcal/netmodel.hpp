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

// Network model: case files, the static bus/branch graph, per-period
// topologies and the sensor set.
//
// Ordering contract: every edge set in this library is a vector of branch ids
// sorted ascending, and every flow vector is indexed in that order. Bus-indexed
// vectors follow the order of GridCase::buses().

#pragma once

#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace gridcal {

using BusId = int;
using BranchId = int;
using EdgeList = std::vector<BranchId>;  // sorted, unique

struct Bus {
  BusId id = 0;
  double p_load_mw = 0.0;
  double p_gen_mw = 0.0;  // sum of in-service generator outputs at this bus

  double net_mw() const { return p_gen_mw - p_load_mw; }
  bool operator==(const Bus&) const = default;
};

// Resistance, charging, tap ratio and phase shift are carried through parsing
// and serialization only. The DC model uses the series reactance alone.
struct Branch {
  BranchId id = 0;
  BusId from_bus = 0;
  BusId to_bus = 0;
  double reactance = 0.0;  // per-unit on the system base
  double resistance = 0.0;
  double charging = 0.0;
  double tap_ratio = 0.0;
  double shift_deg = 0.0;
  bool in_service = true;

  bool operator==(const Branch&) const = default;
};

class GridCase {
 public:
  GridCase(std::string name, double base_mva, std::vector<Bus> buses,
           std::vector<Branch> branches, BusId slack_bus);

  const std::string& name() const { return name_; }
  double base_mva() const { return base_mva_; }
  const std::vector<Bus>& buses() const { return buses_; }
  const std::vector<Branch>& branches() const { return branches_; }
  BusId slack_bus() const { return slack_bus_; }
  std::size_t slack_index() const { return bus_index(slack_bus_); }

  bool has_bus(BusId id) const { return bus_pos_.contains(id); }
  bool has_branch(BranchId id) const { return branch_pos_.contains(id); }
  std::size_t bus_index(BusId id) const;
  std::size_t branch_index(BranchId id) const;
  const Branch& branch(BranchId id) const { return branches_[branch_index(id)]; }

  /// Net injections p_gen - p_load in per-unit, indexed like buses().
  std::vector<double> net_injections_pu() const;

  /// Branch ids with in_service set; the default baseline edge set.
  EdgeList in_service_branches() const;

  bool operator==(const GridCase& other) const {
    return base_mva_ == other.base_mva_ && slack_bus_ == other.slack_bus_ &&
           buses_ == other.buses_ && branches_ == other.branches_;
  }

 private:
  std::string name_;
  double base_mva_;
  std::vector<Bus> buses_;
  std::vector<Branch> branches_;
  BusId slack_bus_;
  std::unordered_map<BusId, std::size_t> bus_pos_;
  std::unordered_map<BranchId, std::size_t> branch_pos_;
};

using CasePtr = std::shared_ptr<const GridCase>;

/// Parse the MATPOWER `.m` subset (baseMVA, bus, gen, branch). Branch ids are
/// assigned 1..n in table order; in-service generator outputs are summed per bus.
GridCase parse_case(std::string_view text, std::string name = "case");

/// JSON case form, see docs/formats.md.
GridCase parse_case_json(std::string_view text, std::string name = "case");
std::string write_case_json(const GridCase& grid);

/// Reads `.json` as JSON and anything else as MATPOWER.
GridCase load_case(const std::filesystem::path& path);

/// Active edge set of the grid at one period.
class Topology {
 public:
  Topology(CasePtr grid, EdgeList active_edges, int label = 0);

  /// All in-service branches of the case.
  static Topology baseline(CasePtr grid);

  const CasePtr& grid() const { return grid_; }
  const EdgeList& active_edges() const { return active_; }
  int label() const { return label_; }
  std::size_t size() const { return active_.size(); }
  bool contains(BranchId id) const;

  Topology without(std::span<const BranchId> removed, int label) const;
  Topology with(std::span<const BranchId> added, int label) const;
  Topology union_with(const Topology& other) const;

  /// Bus id groups of the graph induced by active edges on buses of nonzero
  /// degree, largest first.
  std::vector<std::vector<BusId>> components() const;

  /// Throws IslandingError when components() has more than one entry or the
  /// slack bus has no active branch.
  void check_connected() const;

  /// Active edges whose removal disconnects the graph.
  EdgeList bridges() const;

  bool same_edges(const Topology& other) const { return active_ == other.active_; }

 private:
  CasePtr grid_;
  EdgeList active_;
  int label_;
};

/// Edges active in exactly one of the two topologies.
EdgeList symmetric_difference(const Topology& a, const Topology& b);

struct SensorSet {
  std::vector<BusId> buses;   // sorted
  EdgeList observed_edges;    // every branch incident to a sensor bus

  bool observes(BranchId id) const;
  /// observed_edges restricted to the topology's active edges.
  EdgeList active_observed(const Topology& topology) const;
};

SensorSet observed_edges(const GridCase& grid, std::span<const BusId> sensor_buses);

/// Sorted intersection of two sorted edge lists.
EdgeList intersect(const EdgeList& a, const EdgeList& b);

/// Position of each id of `subset` inside sorted `superset`; throws ModelError
/// when an id is absent.
std::vector<std::size_t> positions_in(const EdgeList& superset, const EdgeList& subset);

}  // namespace gridcal
