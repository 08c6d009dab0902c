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

// Context-agnostic mapping of line-flow measurements.
//
// A frame observed on the presumed topology of its period is first corrected
// to baseline injections with the period PTDF, then projected onto the
// baseline topology: among all baseline-edge flow vectors x consistent with
// the corrected measurements through the LODF relations A x = p_hat, pick the
// one closest (Euclidean) to the baseline power flow solution.

#pragma once

#include <Eigen/Dense>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "gridcal/netmodel.hpp"
#include "gridcal/sensitivity.hpp"

namespace gridcal {

/// Reference topology and injections onto which every frame is mapped.
class BaselineContext {
 public:
  /// `injections` are bus-indexed per-unit and get balanced at the slack.
  BaselineContext(Topology topology, std::vector<double> injections, SensorSet sensors);

  const Topology& topology() const { return topology_; }
  const GridCase& grid() const { return *topology_.grid(); }
  const SensorSet& sensors() const { return sensors_; }
  const Eigen::VectorXd& injections() const { return injections_; }
  /// Observed baseline edges, the index set of every mapped vector.
  const EdgeList& edges() const { return edges_; }
  /// Baseline power flow on edges().
  const Eigen::VectorXd& flows() const { return flows_; }
  const DcNetwork& network() const { return *network_; }
  /// Baseline power flow on any baseline edges, observed or not.
  Eigen::VectorXd flows_on(const EdgeList& edges) const { return solution_.flows_on(edges); }

 private:
  Topology topology_;
  SensorSet sensors_;
  std::shared_ptr<const DcNetwork> network_;
  Eigen::VectorXd injections_;
  DcFlowSolution solution_;
  EdgeList edges_;
  Eigen::VectorXd flows_;
};

struct MeasurementFrame {
  int tick = 0;
  int period = 0;
  Eigen::VectorXd flows;       // per observed active edge of the period topology
  Eigen::VectorXd injections;  // per bus, per-unit
};

struct CorrectedFrame {
  int tick = 0;
  Eigen::VectorXd values;  // same indexing as the source frame
};

struct ContextAgnosticFrame {
  int tick = 0;
  Eigen::VectorXd values;  // per baseline observed edge
  double residual = 0.0;   // ||values - baseline flows||_2
};

/// p_hat = p + F (p0 - p_tau).
CorrectedFrame injection_correct(const MeasurementFrame& frame, const BaselineContext& baseline,
                                 const PtdfMatrix& period_ptdf);

/// Equality constraints A x = p_hat linking baseline-edge flows x to the
/// observed flows of a topology that lacks some baseline edges. Column j is a
/// unit vector when baseline edge j is observed, and the LODF vector d^k when
/// it is missing. Stored in that factored form; dense() materializes it.
struct ConstraintMatrix {
  EdgeList row_edges;                // observed active edges
  EdgeList col_edges;                // observed baseline edges plus unobserved missing ones
  std::vector<std::size_t> row_col;  // column holding the identity entry of each row
  EdgeList missing;                  // col_edges not in row_edges
  std::vector<std::size_t> missing_col;
  Eigen::MatrixXd lodf;              // rows x missing.size()

  Eigen::Index rows() const { return static_cast<Eigen::Index>(row_edges.size()); }
  Eigen::Index cols() const { return static_cast<Eigen::Index>(col_edges.size()); }
  Eigen::MatrixXd dense() const;
  Eigen::VectorXd multiply(const Eigen::VectorXd& x) const;
  /// A^T y
  Eigen::VectorXd multiply_transpose(const Eigen::VectorXd& y) const;
};

/// Columns are `baseline_edges`; `missing_edges` must be a subset of them.
/// `lodfs` holds one vector per missing edge, each over the observed active
/// edges (= baseline_edges minus missing_edges).
ConstraintMatrix build_A(const EdgeList& baseline_edges, const EdgeList& missing_edges,
                         const std::vector<LodfVector>& lodfs);

/// Minimum-norm correction solver for one constraint matrix. With the
/// identity/LODF column structure A A^T = I + D D^T, so only the small
/// k x k system I + D^T D is factored.
class Projector {
 public:
  explicit Projector(ConstraintMatrix a);

  const ConstraintMatrix& matrix() const { return a_; }
  /// argmin ||x - anchor|| subject to A x = target.
  Eigen::VectorXd project(const Eigen::VectorXd& anchor, const Eigen::VectorXd& target) const;

 private:
  ConstraintMatrix a_;
  Eigen::LLT<Eigen::MatrixXd> small_;
};

/// Same problem for an arbitrary dense A via the normal equations
/// x = anchor + A^T (A A^T)^-1 (target - A anchor). Throws NumericalError when
/// A is not of full row rank.
Eigen::VectorXd project_dense(const Eigen::MatrixXd& a, const Eigen::VectorXd& anchor,
                              const Eigen::VectorXd& target);

/// Solves the projection anchored at the baseline flows of A's columns and
/// returns the coordinates of the observed baseline edges. Columns beyond
/// those are baseline edges that are out in this period but unobserved; their
/// flows enter the LODF relations as latent coordinates.
ContextAgnosticFrame inverse_project(const CorrectedFrame& corrected,
                                     const BaselineContext& baseline, const ConstraintMatrix& a);

enum class MappingVariant {
  kNaive,              // raw flows, zero on inactive edges
  kInverseProjection,  // projection only
  kFull,               // injection correction, then projection
};

std::string to_string(MappingVariant v);
MappingVariant parse_variant(const std::string& name);

/// Everything the mapping needs for one period, built once.
struct PeriodContext {
  Topology topology;
  EdgeList observed;  // observed active edges
  std::shared_ptr<const DcNetwork> network;
  std::optional<PtdfMatrix> ptdf;
  std::optional<Projector> projector;
  Eigen::VectorXd anchor;                // baseline flows on the projector's columns
  std::vector<std::size_t> output_cols;  // columns of the observed baseline edges
};

/// Maps frames of a stream to context-agnostic frames, caching per-period
/// sensitivities. Thread-safe.
class ContextMapper {
 public:
  explicit ContextMapper(std::shared_ptr<const BaselineContext> baseline,
                         MappingVariant variant = MappingVariant::kFull);

  const BaselineContext& baseline() const { return *baseline_; }
  const std::shared_ptr<const BaselineContext>& baseline_ptr() const { return baseline_; }
  MappingVariant variant() const { return variant_; }

  /// Builds (or returns the cached) context for a period topology. Throws
  /// ModelError when the topology has edges outside the baseline, or the
  /// period has no observed active edge.
  std::shared_ptr<const PeriodContext> period(const Topology& topology) const;

  ContextAgnosticFrame map(const MeasurementFrame& frame, const Topology& topology) const;

  /// Intermediate values for diagnostics: (p, p_hat, p_check).
  struct Trace {
    Eigen::VectorXd raw;
    Eigen::VectorXd corrected;
    ContextAgnosticFrame mapped;
    EdgeList observed;
  };
  Trace trace(const MeasurementFrame& frame, const Topology& topology) const;

 private:
  std::shared_ptr<const BaselineContext> baseline_;
  MappingVariant variant_;
  mutable std::mutex mu_;
  mutable std::map<EdgeList, std::shared_ptr<const PeriodContext>> cache_;
};

/// Injection correction followed by inverse projection, without caching.
ContextAgnosticFrame context_agnostic(const MeasurementFrame& frame, const BaselineContext& baseline,
                                      const Topology& period_topology);

}  // namespace gridcal
