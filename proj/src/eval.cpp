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

#include "gridcal/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <thread>

#include "gridcal/error.hpp"
#include "gridcal/io.hpp"

namespace gridcal {

namespace {

void check_lengths(std::span<const double> scores, const std::vector<bool>& positive) {
  if (scores.size() != positive.size()) {
    throw ModelError("score and label vectors differ in length");
  }
  for (double s : scores) {
    if (std::isnan(s)) throw ModelError("NaN score");
  }
}

}  // namespace

double auc(std::span<const double> scores, const std::vector<bool>& positive) {
  check_lengths(scores, positive);
  const std::size_t n = scores.size();
  std::size_t n_pos = 0;
  for (bool p : positive) n_pos += p ? 1 : 0;
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) {
    throw ModelError("AUC needs at least one positive and one negative tick");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Sum of midranks of the positives.
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double mid = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t m = i; m < j; ++m) {
      if (positive[order[m]]) rank_sum += mid;
    }
    i = j;
  }
  const double np = static_cast<double>(n_pos);
  const double u = rank_sum - np * (np + 1.0) / 2.0;
  return u / (np * static_cast<double>(n_neg));
}

double f_measure_topk(std::span<const double> scores, const std::vector<bool>& positive, std::size_t k) {
  check_lengths(scores, positive);
  if (k == 0 || k > scores.size()) throw UsageError("top-k cutoff out of range");
  std::size_t n_pos = 0;
  for (bool p : positive) n_pos += p ? 1 : 0;
  if (n_pos == 0) throw ModelError("F-measure is undefined without positive ticks");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  std::size_t hits = 0;
  for (std::size_t i = 0; i < k; ++i) hits += positive[order[i]] ? 1 : 0;
  const double precision = static_cast<double>(hits) / static_cast<double>(k);
  const double recall = static_cast<double>(hits) / static_cast<double>(n_pos);
  if (precision + recall == 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

std::vector<RocPoint> roc_curve(std::span<const double> scores, const std::vector<bool>& positive) {
  check_lengths(scores, positive);
  std::size_t n_pos = 0;
  for (bool p : positive) n_pos += p ? 1 : 0;
  const std::size_t n_neg = scores.size() - n_pos;
  if (n_pos == 0 || n_neg == 0) throw ModelError("ROC needs both classes");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  std::vector<RocPoint> out{{0.0, 0.0}};
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      (positive[order[j]] ? tp : fp)++;
      ++j;
    }
    out.push_back({static_cast<double>(fp) / static_cast<double>(n_neg),
                   static_cast<double>(tp) / static_cast<double>(n_pos)});
    i = j;
  }
  return out;
}

// ---------------------------------------------------------------------------

std::vector<AnomalyVerdict> run_detector(Detector& detector, const Scenario& scenario) {
  for (const auto& [t, topo] : scenario.period_topologies) detector.set_period_topology(t, topo);
  std::vector<AnomalyVerdict> out;
  out.reserve(scenario.frames.size());
  for (const auto& f : scenario.frames) out.push_back(detector.step(f));
  return out;
}

namespace {

Scenario restrict_sensors(const Scenario& sc, std::span<const BusId> sensors) {
  for (BusId b : sensors) {
    if (!std::binary_search(sc.sensors.buses.begin(), sc.sensors.buses.end(), b)) {
      throw UsageError("bus " + std::to_string(b) + " is not a sensor of the scenario");
    }
  }
  Scenario out = sc;
  out.sensors = observed_edges(*sc.grid, sensors);
  std::map<int, std::vector<std::size_t>> pick;
  for (const auto& [t, topo] : sc.period_topologies) {
    pick[t] = positions_in(sc.sensors.active_observed(topo), out.sensors.active_observed(topo));
  }
  for (auto& f : out.frames) {
    const auto& p = pick.at(f.period);
    Eigen::VectorXd flows(static_cast<Eigen::Index>(p.size()));
    for (std::size_t i = 0; i < p.size(); ++i) flows[static_cast<Eigen::Index>(i)] = f.flows[static_cast<Eigen::Index>(p[i])];
    f.flows = std::move(flows);
  }
  return out;
}

int count_undetectable(const Scenario& sc) {
  int n = 0;
  for (const auto& a : sc.truth) {
    const int t = (a.tick - 1) / sc.config.n_tau + 1;
    auto it = sc.period_topologies.find(t);
    if (it == sc.period_topologies.end()) continue;
    EdgeList obs = sc.sensors.active_observed(it->second);
    if (obs.empty()) {
      ++n;
      continue;
    }
    try {
      LodfVector d = DcNetwork(it->second).lodf(obs, a.branch);
      if (d.values.cwiseAbs().maxCoeff() < 1e-9) ++n;
    } catch (const Error&) {
      ++n;
    }
  }
  return n;
}

}  // namespace

RunResult run_variant(const Scenario& scenario, MappingVariant variant, const RunOptions& options) {
  DetectorConfig dc;
  dc.threshold = options.threshold;
  dc.rho = options.rho;
  dc.n_tau = scenario.config.n_tau;
  dc.warmup = options.warmup;
  dc.variant = variant;
  Detector det(scenario.baseline_context(), dc);

  RunResult r;
  r.variant = variant;
  r.sensor_count = static_cast<int>(scenario.sensors.buses.size());
  r.seed = scenario.config.seed;
  r.verdicts = run_detector(det, scenario);
  std::set<int> truth;
  for (const auto& a : scenario.truth) truth.insert(a.tick);
  for (const auto& v : r.verdicts) {
    r.ticks.push_back(v.tick);
    r.scores.push_back(v.score);
    r.positive.push_back(truth.contains(v.tick));
  }
  r.undetectable = count_undetectable(scenario);
  if (!truth.empty() && truth.size() < r.scores.size()) {
    r.auc = auc(r.scores, r.positive);
    r.f_measure = f_measure_topk(r.scores, r.positive, options.k.value_or(truth.size()));
  } else {
    r.auc = std::nan("");
    r.f_measure = std::nan("");
  }
  return r;
}

RunResult run_variant(const Scenario& scenario, MappingVariant variant,
                      std::span<const BusId> sensors, const RunOptions& options) {
  return run_variant(restrict_sensors(scenario, sensors), variant, options);
}

std::vector<RunResult> sweep(const EvalConfig& config, CasePtr grid) {
  if (config.variants.empty() || config.seeds.empty()) throw UsageError("empty sweep");
  std::vector<int> counts = config.sensor_counts;
  if (counts.empty()) {
    const double n_bus = static_cast<double>(grid->buses().size());
    for (double f : config.sensor_fractions) {
      if (!(f > 0.0 && f <= 1.0)) throw UsageError("sensor fractions must be in (0, 1]");
      counts.push_back(std::max(1, static_cast<int>(std::lround(f * n_bus))));
    }
  }
  if (counts.empty()) throw UsageError("no sensor counts");

  struct Cell {
    std::uint64_t seed;
    int count;
  };
  std::vector<Cell> cells;
  for (auto seed : config.seeds) {
    for (int c : counts) cells.push_back({seed, c});
  }
  const std::size_t nv = config.variants.size();
  std::vector<RunResult> results(cells.size() * nv);

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      ScenarioConfig sc = config.scenario;
      sc.seed = cells[i].seed;
      sc.sensor_count = cells[i].count;
      sc.sensor_buses.clear();
      std::optional<Scenario> scenario;
      std::string failure;
      try {
        scenario = generate_scenario(sc, grid);
      } catch (const std::exception& e) {
        failure = e.what();
      }
      for (std::size_t v = 0; v < nv; ++v) {
        RunResult& r = results[i * nv + v];
        r.variant = config.variants[v];
        r.sensor_count = cells[i].count;
        r.seed = cells[i].seed;
        if (!scenario) {
          r.error = failure;
          continue;
        }
        try {
          r = run_variant(*scenario, config.variants[v], config.run);
          r.sensor_count = cells[i].count;
        } catch (const std::exception& e) {
          r.error = e.what();
        }
      }
    }
  };
  unsigned n_threads = config.threads > 0 ? static_cast<unsigned>(config.threads)
                                          : std::max(1u, std::thread::hardware_concurrency());
  n_threads = std::min<unsigned>(n_threads, static_cast<unsigned>(cells.size()));
  std::vector<std::jthread> pool;
  for (unsigned t = 1; t < n_threads; ++t) pool.emplace_back(worker);
  worker();
  pool.clear();
  return results;
}

void write_sweep(const std::filesystem::path& out_dir, const std::vector<RunResult>& results) {
  std::filesystem::create_directories(out_dir / "figure_data");
  {
    std::ofstream out(out_dir / "results.csv");
    out << "variant,sensor_count,seed,auc,f_measure,undetectable,error\n";
    for (const auto& r : results) {
      out << to_string(r.variant) << ',' << r.sensor_count << ',' << r.seed << ','
          << (r.error.empty() ? format_double(r.auc) : "") << ','
          << (r.error.empty() ? format_double(r.f_measure) : "") << ',' << r.undetectable << ','
          << csv_quote(r.error) << '\n';
    }
  }
  {
    std::ofstream out(out_dir / "roc_points.csv");
    out << "variant,sensor_count,seed,fpr,tpr\n";
    for (const auto& r : results) {
      if (!r.error.empty() || std::isnan(r.auc)) continue;
      for (const auto& p : roc_curve(r.scores, r.positive)) {
        out << to_string(r.variant) << ',' << r.sensor_count << ',' << r.seed << ','
            << format_double(p.fpr) << ',' << format_double(p.tpr) << '\n';
      }
    }
  }
  // Mean over seeds: one row per sensor count, one column per variant.
  std::vector<MappingVariant> variants;
  std::set<int> counts;
  for (const auto& r : results) {
    if (std::find(variants.begin(), variants.end(), r.variant) == variants.end()) variants.push_back(r.variant);
    counts.insert(r.sensor_count);
  }
  for (const char* metric : {"auc", "f_measure"}) {
    std::ofstream out(out_dir / "figure_data" / (std::string(metric) + ".csv"));
    out << "sensor_count";
    for (auto v : variants) out << ',' << to_string(v);
    out << '\n';
    for (int c : counts) {
      out << c;
      for (auto v : variants) {
        double sum = 0.0;
        int n = 0;
        for (const auto& r : results) {
          if (r.variant != v || r.sensor_count != c || !r.error.empty()) continue;
          double m = std::string(metric) == "auc" ? r.auc : r.f_measure;
          if (std::isnan(m)) continue;
          sum += m;
          ++n;
        }
        out << ',';
        if (n > 0) out << format_double(sum / n);
      }
      out << '\n';
    }
  }
}

}  // namespace gridcal
