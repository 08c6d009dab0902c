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

#include "gridcal/sensitivity.hpp"

#include <algorithm>
#include <cmath>

#include "gridcal/error.hpp"

namespace gridcal {

double DcFlowSolution::flow(BranchId id) const {
  auto it = std::lower_bound(edges.begin(), edges.end(), id);
  if (it == edges.end() || *it != id) {
    throw ModelError("branch " + std::to_string(id) + " is not active in this solution");
  }
  return flows[static_cast<std::size_t>(it - edges.begin())];
}

Eigen::VectorXd DcFlowSolution::flows_on(const EdgeList& subset) const {
  auto pos = positions_in(edges, subset);
  Eigen::VectorXd out(static_cast<Eigen::Index>(pos.size()));
  for (std::size_t i = 0; i < pos.size(); ++i) out[static_cast<Eigen::Index>(i)] = flows[pos[i]];
  return out;
}

DcNetwork::DcNetwork(Topology topology, std::optional<BusId> slack)
    : topology_(std::move(topology)),
      slack_(slack.value_or(topology_.grid()->slack_bus())),
      slack_index_(topology_.grid()->bus_index(slack_)) {
  topology_.check_connected();
  const GridCase& g = grid();
  const std::size_t n = g.buses().size();

  std::vector<bool> energized(n, false);
  for (BranchId id : topology_.active_edges()) {
    const Branch& br = g.branch(id);
    energized[g.bus_index(br.from_bus)] = true;
    energized[g.bus_index(br.to_bus)] = true;
  }
  if (!energized[slack_index_]) {
    throw IslandingError("slack bus " + std::to_string(slack_) + " has no active branch", {});
  }
  reduced_.assign(n, -1);
  for (std::size_t i = 0; i < n; ++i) {
    if (energized[i] && i != slack_index_) reduced_[i] = static_cast<int>(n_reduced_++);
  }

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(topology_.size() * 4);
  for (BranchId id : topology_.active_edges()) {
    const Branch& br = g.branch(id);
    const double y = 1.0 / br.reactance;
    int f = reduced_[g.bus_index(br.from_bus)];
    int t = reduced_[g.bus_index(br.to_bus)];
    if (f >= 0) trip.emplace_back(f, f, y);
    if (t >= 0) trip.emplace_back(t, t, y);
    if (f >= 0 && t >= 0) {
      trip.emplace_back(f, t, -y);
      trip.emplace_back(t, f, -y);
    }
  }
  const auto nr = static_cast<Eigen::Index>(n_reduced_);
  b_reduced_.resize(nr, nr);
  b_reduced_.setFromTriplets(trip.begin(), trip.end());
  factor_ = std::make_shared<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>>();
  if (nr > 0) {
    factor_->compute(b_reduced_);
    if (factor_->info() != Eigen::Success) {
      throw NumericalError("reduced susceptance matrix is singular for topology " +
                           std::to_string(topology_.label()));
    }
    // A connected graph gives a positive definite reduced matrix.
    const auto& d = factor_->vectorD();
    if ((d.array() <= 0.0).any()) {
      throw NumericalError("reduced susceptance matrix is not positive definite");
    }
  }
}

Eigen::VectorXd DcNetwork::angles(const Eigen::VectorXd& reduced_rhs) const {
  const std::size_t n = grid().buses().size();
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  if (n_reduced_ == 0) return theta;
  Eigen::VectorXd x = factor_->solve(reduced_rhs);
  for (std::size_t i = 0; i < n; ++i) {
    if (reduced_[i] >= 0) theta[static_cast<Eigen::Index>(i)] = x[reduced_[i]];
  }
  return theta;
}

Eigen::VectorXd DcNetwork::edge_flows(const EdgeList& rows, const Eigen::VectorXd& theta) const {
  const GridCase& g = grid();
  Eigen::VectorXd out(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const Branch& br = g.branch(rows[r]);
    out[static_cast<Eigen::Index>(r)] =
        (theta[static_cast<Eigen::Index>(g.bus_index(br.from_bus))] -
         theta[static_cast<Eigen::Index>(g.bus_index(br.to_bus))]) /
        br.reactance;
  }
  return out;
}

DcFlowSolution DcNetwork::solve(std::span<const double> injections) const {
  const GridCase& g = grid();
  const std::size_t n = g.buses().size();
  if (injections.size() != n) {
    throw ModelError("injection vector has " + std::to_string(injections.size()) +
                     " entries, case has " + std::to_string(n) + " buses");
  }
  DcFlowSolution sol;
  sol.edges = topology_.active_edges();
  sol.injections.assign(n, 0.0);
  Eigen::VectorXd rhs(static_cast<Eigen::Index>(n_reduced_));
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (reduced_[i] < 0) continue;
    rhs[reduced_[i]] = injections[i];
    sol.injections[i] = injections[i];
    sum += injections[i];
  }
  sol.injections[slack_index_] = -sum;

  Eigen::VectorXd theta = angles(rhs);
  sol.angles.assign(theta.data(), theta.data() + theta.size());
  Eigen::VectorXd f = edge_flows(sol.edges, theta);
  sol.flows.assign(f.data(), f.data() + f.size());

  if (n_reduced_ > 0) {
    Eigen::VectorXd th_r(static_cast<Eigen::Index>(n_reduced_));
    for (std::size_t i = 0; i < n; ++i) {
      if (reduced_[i] >= 0) th_r[reduced_[i]] = theta[static_cast<Eigen::Index>(i)];
    }
    sol.residual = (b_reduced_ * th_r - rhs).cwiseAbs().maxCoeff();
    const double scale = std::max(1.0, rhs.cwiseAbs().maxCoeff());
    if (!(sol.residual <= 1e-10 * scale)) {
      throw NumericalError("DC solve residual " + std::to_string(sol.residual) +
                           " exceeds tolerance");
    }
  }
  return sol;
}

Eigen::VectorXd DcNetwork::flows(const EdgeList& rows, const Eigen::VectorXd& injections) const {
  Eigen::VectorXd rhs(static_cast<Eigen::Index>(n_reduced_));
  for (std::size_t i = 0; i < reduced_.size(); ++i) {
    if (reduced_[i] >= 0) rhs[reduced_[i]] = injections[static_cast<Eigen::Index>(i)];
  }
  return edge_flows(rows, angles(rhs));
}

PtdfMatrix DcNetwork::ptdf(const EdgeList& rows) const {
  const GridCase& g = grid();
  const std::size_t n = g.buses().size();
  PtdfMatrix m;
  m.rows = rows;
  m.slack = slack_;
  m.topology_label = topology_.label();
  m.values = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(n));
  if (n_reduced_ == 0) return m;
  // B is symmetric, so row l of B_f * B^-1 is B^-1 (e_from - e_to) / x_l.
  Eigen::VectorXd rhs(static_cast<Eigen::Index>(n_reduced_));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (!topology_.contains(rows[r])) {
      throw ModelError("PTDF row " + std::to_string(rows[r]) + " is not an active edge");
    }
    const Branch& br = g.branch(rows[r]);
    rhs.setZero();
    int f = reduced_[g.bus_index(br.from_bus)];
    int t = reduced_[g.bus_index(br.to_bus)];
    if (f >= 0) rhs[f] += 1.0 / br.reactance;
    if (t >= 0) rhs[t] -= 1.0 / br.reactance;
    Eigen::VectorXd y = factor_->solve(rhs);
    for (std::size_t i = 0; i < n; ++i) {
      if (reduced_[i] >= 0) {
        m.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(i)) = y[reduced_[i]];
      }
    }
  }
  return m;
}

Eigen::VectorXd DcNetwork::transfer(const EdgeList& rows, BusId from, BusId to) const {
  const GridCase& g = grid();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_reduced_));
  int f = reduced_[g.bus_index(from)];
  int t = reduced_[g.bus_index(to)];
  if (f >= 0) rhs[f] += 1.0;
  if (t >= 0) rhs[t] -= 1.0;
  return edge_flows(rows, angles(rhs));
}

LodfVector DcNetwork::lodf(const EdgeList& rows, BranchId outage) const {
  if (!topology_.contains(outage)) {
    throw ModelError("outage branch " + std::to_string(outage) + " is not active in topology " +
                     std::to_string(topology_.label()));
  }
  const Branch& k = grid().branch(outage);
  EdgeList with_k = rows;
  with_k.push_back(outage);
  Eigen::VectorXd phi = transfer(with_k, k.from_bus, k.to_bus);
  const double self = phi[static_cast<Eigen::Index>(rows.size())];
  const double denom = 1.0 - self;
  if (std::abs(denom) < kBridgeTolerance) {
    throw BridgeError("outage of branch " + std::to_string(outage) + " islands the grid", outage);
  }
  LodfVector out;
  out.outage = outage;
  out.rows = rows;
  out.topology_label = topology_.label();
  out.values = phi.head(static_cast<Eigen::Index>(rows.size())) / denom;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r] == outage) out.values[static_cast<Eigen::Index>(r)] = -1.0;
  }
  return out;
}

DcFlowSolution solve_dc(const Topology& topology, std::span<const double> injections) {
  return DcNetwork(topology).solve(injections);
}

PtdfMatrix ptdf(const Topology& topology, const SensorSet& sensors, std::optional<BusId> slack) {
  DcNetwork net(topology, slack);
  return net.ptdf(sensors.active_observed(topology));
}

LodfVector lodf(const Topology& topology, const SensorSet& sensors, BranchId outage) {
  DcNetwork net(topology);
  return net.lodf(sensors.active_observed(topology), outage);
}

}  // namespace gridcal
