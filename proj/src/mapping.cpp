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

#include "gridcal/mapping.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "gridcal/error.hpp"

namespace gridcal {

namespace {

Eigen::VectorXd to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

BaselineContext::BaselineContext(Topology topology, std::vector<double> injections,
                                 SensorSet sensors)
    : topology_(std::move(topology)), sensors_(std::move(sensors)) {
  network_ = std::make_shared<const DcNetwork>(topology_);
  solution_ = network_->solve(injections);
  injections_ = to_vector(solution_.injections);
  edges_ = sensors_.active_observed(topology_);
  flows_ = solution_.flows_on(edges_);
}

CorrectedFrame injection_correct(const MeasurementFrame& frame, const BaselineContext& baseline,
                                 const PtdfMatrix& period_ptdf) {
  if (period_ptdf.values.rows() != frame.flows.size()) {
    throw ModelError("tick " + std::to_string(frame.tick) + ": frame has " +
                     std::to_string(frame.flows.size()) + " flows, PTDF has " +
                     std::to_string(period_ptdf.values.rows()) + " rows");
  }
  if (frame.injections.size() != baseline.injections().size()) {
    throw ModelError("tick " + std::to_string(frame.tick) + ": injection vector length mismatch");
  }
  CorrectedFrame out;
  out.tick = frame.tick;
  out.values = frame.flows + period_ptdf.apply(baseline.injections() - frame.injections);
  return out;
}

// ---------------------------------------------------------------------------

Eigen::MatrixXd ConstraintMatrix::dense() const {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(rows(), cols());
  for (std::size_t r = 0; r < row_col.size(); ++r) {
    a(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(row_col[r])) = 1.0;
  }
  for (std::size_t j = 0; j < missing_col.size(); ++j) {
    a.col(static_cast<Eigen::Index>(missing_col[j])) = lodf.col(static_cast<Eigen::Index>(j));
  }
  return a;
}

Eigen::VectorXd ConstraintMatrix::multiply(const Eigen::VectorXd& x) const {
  Eigen::VectorXd y(rows());
  for (std::size_t r = 0; r < row_col.size(); ++r) {
    y[static_cast<Eigen::Index>(r)] = x[static_cast<Eigen::Index>(row_col[r])];
  }
  for (std::size_t j = 0; j < missing_col.size(); ++j) {
    y += lodf.col(static_cast<Eigen::Index>(j)) * x[static_cast<Eigen::Index>(missing_col[j])];
  }
  return y;
}

Eigen::VectorXd ConstraintMatrix::multiply_transpose(const Eigen::VectorXd& y) const {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(cols());
  for (std::size_t r = 0; r < row_col.size(); ++r) {
    x[static_cast<Eigen::Index>(row_col[r])] = y[static_cast<Eigen::Index>(r)];
  }
  for (std::size_t j = 0; j < missing_col.size(); ++j) {
    x[static_cast<Eigen::Index>(missing_col[j])] = lodf.col(static_cast<Eigen::Index>(j)).dot(y);
  }
  return x;
}

ConstraintMatrix build_A(const EdgeList& baseline_edges, const EdgeList& missing_edges,
                         const std::vector<LodfVector>& lodfs) {
  ConstraintMatrix a;
  a.col_edges = baseline_edges;
  a.missing = missing_edges;
  std::set_difference(baseline_edges.begin(), baseline_edges.end(), missing_edges.begin(),
                      missing_edges.end(), std::back_inserter(a.row_edges));
  a.row_col = positions_in(baseline_edges, a.row_edges);
  a.missing_col = positions_in(baseline_edges, missing_edges);
  a.lodf.resize(a.rows(), static_cast<Eigen::Index>(missing_edges.size()));
  for (std::size_t j = 0; j < missing_edges.size(); ++j) {
    auto it = std::find_if(lodfs.begin(), lodfs.end(),
                           [&](const LodfVector& l) { return l.outage == missing_edges[j]; });
    if (it == lodfs.end()) {
      throw ModelError("no LODF vector for missing edge " + std::to_string(missing_edges[j]));
    }
    if (it->rows != a.row_edges) {
      throw ModelError("LODF vector for edge " + std::to_string(missing_edges[j]) +
                       " is not indexed by the observed active edges");
    }
    a.lodf.col(static_cast<Eigen::Index>(j)) = it->values;
  }
  return a;
}

// ---------------------------------------------------------------------------

Projector::Projector(ConstraintMatrix a) : a_(std::move(a)) {
  if (a_.rows() == 0) throw ModelError("constraint matrix has no rows");
  const Eigen::Index k = a_.lodf.cols();
  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(k, k);
  if (k > 0) m.noalias() += a_.lodf.transpose() * a_.lodf;
  small_.compute(m);
  if (small_.info() != Eigen::Success || !a_.lodf.allFinite()) {
    throw NumericalError("constraint matrix is rank deficient");
  }
}

Eigen::VectorXd Projector::project(const Eigen::VectorXd& anchor,
                                   const Eigen::VectorXd& target) const {
  if (anchor.size() != a_.cols() || target.size() != a_.rows()) {
    throw ModelError("projection dimension mismatch");
  }
  Eigen::VectorXd r = target - a_.multiply(anchor);
  // (I + D D^T)^-1 r = r - D (I + D^T D)^-1 D^T r
  Eigen::VectorXd y = r;
  if (a_.lodf.cols() > 0) y -= a_.lodf * small_.solve(a_.lodf.transpose() * r);
  return anchor + a_.multiply_transpose(y);
}

Eigen::VectorXd project_dense(const Eigen::MatrixXd& a, const Eigen::VectorXd& anchor,
                              const Eigen::VectorXd& target) {
  if (a.cols() != anchor.size() || a.rows() != target.size()) {
    throw ModelError("projection dimension mismatch");
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
  lu.setThreshold(1e-10);
  if (lu.rank() < a.rows()) {
    throw NumericalError("constraint matrix is rank deficient (rank " + std::to_string(lu.rank()) +
                         " < " + std::to_string(a.rows()) + " rows)");
  }
  Eigen::MatrixXd gram = a * a.transpose();
  Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
  Eigen::VectorXd y = ldlt.solve(target - a * anchor);
  return anchor + a.transpose() * y;
}

ContextAgnosticFrame inverse_project(const CorrectedFrame& corrected,
                                     const BaselineContext& baseline, const ConstraintMatrix& a) {
  auto out_cols = positions_in(a.col_edges, baseline.edges());
  if (corrected.values.size() != a.rows()) {
    throw ModelError("tick " + std::to_string(corrected.tick) + ": corrected frame has " +
                     std::to_string(corrected.values.size()) + " values, constraints have " +
                     std::to_string(a.rows()) + " rows");
  }
  Projector p(a);
  Eigen::VectorXd x = p.project(baseline.flows_on(a.col_edges), corrected.values);
  ContextAgnosticFrame out;
  out.tick = corrected.tick;
  out.values.resize(static_cast<Eigen::Index>(out_cols.size()));
  for (std::size_t i = 0; i < out_cols.size(); ++i) {
    out.values[static_cast<Eigen::Index>(i)] = x[static_cast<Eigen::Index>(out_cols[i])];
  }
  out.residual = (out.values - baseline.flows()).norm();
  return out;
}

// ---------------------------------------------------------------------------

std::string to_string(MappingVariant v) {
  switch (v) {
    case MappingVariant::kNaive:
      return "naive";
    case MappingVariant::kInverseProjection:
      return "IP";
    case MappingVariant::kFull:
      return "IPLC";
  }
  return "?";
}

MappingVariant parse_variant(const std::string& name) {
  if (name == "naive") return MappingVariant::kNaive;
  if (name == "IP" || name == "ip") return MappingVariant::kInverseProjection;
  if (name == "IPLC" || name == "iplc") return MappingVariant::kFull;
  throw UsageError("unknown variant '" + name + "' (expected naive, IP or IPLC)");
}

namespace {

std::shared_ptr<const PeriodContext> build_period(const BaselineContext& baseline,
                                                  const Topology& topology,
                                                  MappingVariant variant) {
  EdgeList extra;
  const EdgeList& base = baseline.topology().active_edges();
  std::set_difference(topology.active_edges().begin(), topology.active_edges().end(), base.begin(),
                      base.end(), std::back_inserter(extra));
  if (!extra.empty()) {
    throw ModelError("period topology " + std::to_string(topology.label()) + " activates branch " +
                     std::to_string(extra.front()) + " which is not in the baseline topology");
  }
  auto ctx = std::make_shared<PeriodContext>(PeriodContext{topology, {}, nullptr, {}, {}});
  ctx->observed = baseline.sensors().active_observed(topology);
  if (ctx->observed.empty()) {
    throw ModelError("period topology " + std::to_string(topology.label()) +
                     " has no observed active edge");
  }
  if (variant == MappingVariant::kNaive) return ctx;

  ctx->network = std::make_shared<const DcNetwork>(topology, baseline.network().slack());
  if (variant == MappingVariant::kFull) ctx->ptdf = ctx->network->ptdf(ctx->observed);

  // Every baseline edge that is out in this period gets an LODF column,
  // observed or not; unobserved ones are latent coordinates of x.
  EdgeList missing;
  std::set_difference(base.begin(), base.end(), topology.active_edges().begin(),
                      topology.active_edges().end(), std::back_inserter(missing));
  EdgeList columns;
  std::set_union(baseline.edges().begin(), baseline.edges().end(), missing.begin(), missing.end(),
                 std::back_inserter(columns));
  std::vector<LodfVector> lodfs;
  lodfs.reserve(missing.size());
  for (BranchId k : missing) {
    // d^k is taken on the period topology with k restored, which for a single
    // missing edge is the baseline topology itself.
    std::array<BranchId, 1> restore{k};
    Topology pre = topology.with(restore, topology.label());
    DcNetwork pre_net(pre, baseline.network().slack());
    lodfs.push_back(pre_net.lodf(ctx->observed, k));
  }
  ctx->projector.emplace(build_A(columns, missing, lodfs));
  ctx->anchor = baseline.flows_on(columns);
  ctx->output_cols = positions_in(columns, baseline.edges());
  return ctx;
}

}  // namespace

ContextMapper::ContextMapper(std::shared_ptr<const BaselineContext> baseline,
                             MappingVariant variant)
    : baseline_(std::move(baseline)), variant_(variant) {
  if (!baseline_) throw ModelError("mapper without baseline");
}

std::shared_ptr<const PeriodContext> ContextMapper::period(const Topology& topology) const {
  {
    std::lock_guard lock(mu_);
    auto it = cache_.find(topology.active_edges());
    if (it != cache_.end()) return it->second;
  }
  auto ctx = build_period(*baseline_, topology, variant_);
  std::lock_guard lock(mu_);
  return cache_.emplace(topology.active_edges(), std::move(ctx)).first->second;
}

ContextMapper::Trace ContextMapper::trace(const MeasurementFrame& frame,
                                          const Topology& topology) const {
  auto ctx = period(topology);
  const BaselineContext& base = *baseline_;
  if (frame.flows.size() != static_cast<Eigen::Index>(ctx->observed.size())) {
    throw ModelError("tick " + std::to_string(frame.tick) + ": frame has " +
                     std::to_string(frame.flows.size()) + " flows, period " +
                     std::to_string(frame.period) + " observes " +
                     std::to_string(ctx->observed.size()) + " edges");
  }
  Trace t;
  t.observed = ctx->observed;
  t.raw = frame.flows;
  t.mapped.tick = frame.tick;
  if (variant_ == MappingVariant::kNaive) {
    t.corrected = frame.flows;
    t.mapped.values = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(base.edges().size()));
    auto pos = positions_in(base.edges(), ctx->observed);
    for (std::size_t i = 0; i < pos.size(); ++i) {
      t.mapped.values[static_cast<Eigen::Index>(pos[i])] = frame.flows[static_cast<Eigen::Index>(i)];
    }
  } else {
    if (variant_ == MappingVariant::kFull) {
      t.corrected = injection_correct(frame, base, *ctx->ptdf).values;
    } else {
      t.corrected = frame.flows;
    }
    Eigen::VectorXd x = ctx->projector->project(ctx->anchor, t.corrected);
    t.mapped.values.resize(static_cast<Eigen::Index>(ctx->output_cols.size()));
    for (std::size_t i = 0; i < ctx->output_cols.size(); ++i) {
      t.mapped.values[static_cast<Eigen::Index>(i)] = x[static_cast<Eigen::Index>(ctx->output_cols[i])];
    }
  }
  if (!t.mapped.values.allFinite()) {
    throw NumericalError("tick " + std::to_string(frame.tick) + ": mapping produced non-finite values");
  }
  t.mapped.residual = (t.mapped.values - base.flows()).norm();
  return t;
}

ContextAgnosticFrame ContextMapper::map(const MeasurementFrame& frame,
                                        const Topology& topology) const {
  return trace(frame, topology).mapped;
}

ContextAgnosticFrame context_agnostic(const MeasurementFrame& frame, const BaselineContext& baseline,
                                      const Topology& period_topology) {
  auto shared = std::shared_ptr<const BaselineContext>(&baseline, [](const BaselineContext*) {});
  ContextMapper mapper(shared, MappingVariant::kFull);
  return mapper.map(frame, period_topology);
}

}  // namespace gridcal
