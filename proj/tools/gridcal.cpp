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

// gridcal command-line entry point.
//
// Exit codes: 0 success, 1 usage error, 2 data or model error, 3 numerical error.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <string>

#include "CLI11.hpp"
#include "gridcal/detector.hpp"
#include "gridcal/error.hpp"
#include "gridcal/eval.hpp"
#include "gridcal/io.hpp"
#include "gridcal/scengen.hpp"

namespace fs = std::filesystem;
using namespace gridcal;

namespace {

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kUsage:
      return 1;
    case ErrorKind::kData:
    case ErrorKind::kModel:
      return 2;
    case ErrorKind::kNumerical:
      return 3;
  }
  return 2;
}

void require_file(const fs::path& p) {
  if (!fs::exists(p)) throw Error(ErrorKind::kData, "file not found: " + p.string());
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error(ErrorKind::kData, "cannot write " + p.string());
  return out;
}

struct ParseArgs {
  std::string case_path;
};

int run_parse(const ParseArgs& a) {
  require_file(a.case_path);
  GridCase g = load_case(a.case_path);
  std::cout << "buses=" << g.buses().size() << " branches=" << g.branches().size() << '\n';
  return 0;
}

struct SimulateArgs {
  std::string case_path;
  std::string config_path;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> n_periods, n_tau, n_anomalies, n_shift_events, sensor_count;
  std::optional<double> variability, noise, sensor_fraction;
};

int run_simulate(const SimulateArgs& a) {
  require_file(a.case_path);
  ScenarioConfig c;
  if (!a.config_path.empty()) {
    require_file(a.config_path);
    c = scenario_config_from_json(read_json_file(a.config_path));
  }
  if (a.seed) c.seed = *a.seed;
  if (a.n_periods) c.n_periods = *a.n_periods;
  if (a.n_tau) c.n_tau = *a.n_tau;
  if (a.n_anomalies) c.n_anomalies = *a.n_anomalies;
  if (a.n_shift_events) c.n_shift_events = *a.n_shift_events;
  if (a.sensor_count) c.sensor_count = *a.sensor_count;
  if (a.variability) c.load_variability = *a.variability;
  if (a.noise) c.noise_stdev = *a.noise;
  if (a.sensor_fraction) c.sensor_fraction = *a.sensor_fraction;
  c.validate();
  auto grid = std::make_shared<const GridCase>(load_case(a.case_path));
  Scenario sc = generate_scenario(c, grid);
  save_scenario(a.out, sc, fs::absolute(a.case_path).lexically_normal().string());
  std::cerr << "wrote " << sc.frames.size() << " ticks, " << sc.truth.size() << " anomalies to " << a.out << '\n';
  return 0;
}

struct DetectArgs {
  std::string scenario;
  std::string out;
  std::string variant = "IPLC";
  double threshold = 10.0;
  std::optional<double> rho;
  std::optional<int> warmup;
  std::optional<int> weights_at;
};

int run_detect(const DetectArgs& a) {
  require_file(a.scenario);
  Scenario sc = load_scenario(a.scenario);
  DetectorConfig dc;
  dc.threshold = a.threshold;
  dc.rho = a.rho;
  dc.n_tau = sc.config.n_tau;
  dc.warmup = a.warmup;
  dc.variant = parse_variant(a.variant);
  Detector det(sc.baseline_context(), dc);
  for (const auto& [t, topo] : sc.period_topologies) det.set_period_topology(t, topo);

  std::ofstream file;
  if (!a.out.empty()) {
    fs::create_directories(a.out);
    file = open_out(fs::path(a.out) / "verdicts.jsonl");
  }
  std::ostream& out = a.out.empty() ? std::cout : file;
  std::vector<double> scores;
  std::vector<bool> positive;
  const std::vector<int> truth_ticks = sc.truth_ticks();
  const std::set<int> truth(truth_ticks.begin(), truth_ticks.end());
  for (const auto& f : sc.frames) {
    AnomalyVerdict v = det.step(f);
    out << verdict_json(v) << '\n';
    scores.push_back(v.score);
    positive.push_back(truth.contains(v.tick));
    if (a.weights_at && *a.weights_at == f.tick) {
      if (a.out.empty()) throw UsageError("--weights-at needs --out");
      auto w = open_out(fs::path(a.out) / "weights.csv");
      w << "tick,distance,weight\n";
      const TickWeights& tw = det.last_weights();
      for (std::size_t i = 0; i < tw.weights.size(); ++i) {
        w << det.last_weight_ticks()[i] << ',' << format_double(tw.distances[i]) << ','
          << format_double(tw.weights[i]) << '\n';
      }
    }
  }
  for (const auto& w : det.warnings()) std::cerr << "warning: " << w << '\n';
  std::cerr << "anomalous ticks: " << det.anomalous_ticks().size() << '\n';
  if (!truth.empty() && truth.size() < scores.size()) {
    std::cerr << "auc=" << format_double(auc(scores, positive))
              << " f_measure=" << format_double(f_measure_topk(scores, positive, truth.size())) << '\n';
  }
  return 0;
}

struct EvaluateArgs {
  std::string config;
  std::string out;
  int threads = 0;
};

int run_evaluate(const EvaluateArgs& a) {
  require_file(a.config);
  EvalConfig c = eval_config_from_json(read_json_file(a.config), fs::path(a.config).parent_path());
  if (a.threads > 0) c.threads = a.threads;
  require_file(c.case_path);
  auto grid = std::make_shared<const GridCase>(load_case(c.case_path));
  auto results = sweep(c, grid);
  write_sweep(a.out, results);
  int failed = 0;
  for (const auto& r : results) {
    if (!r.error.empty()) {
      ++failed;
      std::cerr << "cell failed (" << to_string(r.variant) << ", sensors=" << r.sensor_count
                << ", seed=" << r.seed << "): " << r.error << '\n';
    }
  }
  std::cerr << results.size() << " runs, " << failed << " failed\n";
  return 0;
}

struct DumpArgs {
  std::string scenario;
  std::string out;
  std::string variant = "IPLC";
  int edge = 0;
  bool sensitivities = false;
};

int run_dump_mapping(const DumpArgs& a) {
  require_file(a.scenario);
  Scenario sc = load_scenario(a.scenario);
  auto base = sc.baseline_context();
  const EdgeList& e0 = base->edges();
  auto pos = std::lower_bound(e0.begin(), e0.end(), a.edge);
  if (pos == e0.end() || *pos != a.edge) {
    throw UsageError("branch " + std::to_string(a.edge) + " is not an observed baseline branch");
  }
  const auto col = static_cast<Eigen::Index>(pos - e0.begin());
  const double mva = sc.grid->base_mva();
  ContextMapper mapper(base, parse_variant(a.variant));
  fs::create_directories(a.out);
  {
    auto out = open_out(fs::path(a.out) / "mapping.csv");
    out << "tick,period,p,p_hat,p_check\n";
    for (const auto& f : sc.frames) {
      const Topology& topo = sc.period_topologies.at(f.period);
      auto tr = mapper.trace(f, topo);
      out << f.tick << ',' << f.period << ',';
      auto it = std::lower_bound(tr.observed.begin(), tr.observed.end(), a.edge);
      if (it != tr.observed.end() && *it == a.edge) {
        auto r = it - tr.observed.begin();
        out << format_double(tr.raw[r] * mva) << ',' << format_double(tr.corrected[r] * mva);
      } else {
        out << ',';
      }
      out << ',' << format_double(tr.mapped.values[col] * mva) << '\n';
    }
  }
  if (a.sensitivities) {
    PtdfMatrix f = base->network().ptdf(e0);
    auto out = open_out(fs::path(a.out) / "ptdf.csv");
    out << "branch";
    for (const Bus& b : sc.grid->buses()) out << ",bus_" << b.id;
    out << '\n';
    for (std::size_t r = 0; r < f.rows.size(); ++r) {
      out << f.rows[r];
      for (Eigen::Index c = 0; c < f.values.cols(); ++c) {
        out << ',' << format_double(f.values(static_cast<Eigen::Index>(r), c));
      }
      out << '\n';
    }
    auto lo = open_out(fs::path(a.out) / "lodf.csv");
    lo << "period,outage,branch,lodf\n";
    for (const auto& [t, topo] : sc.period_topologies) {
      auto ctx = mapper.period(topo);
      if (!ctx->projector) continue;
      const ConstraintMatrix& m = ctx->projector->matrix();
      for (std::size_t k = 0; k < m.missing.size(); ++k) {
        for (std::size_t r = 0; r < m.row_edges.size(); ++r) {
          lo << t << ',' << m.missing[k] << ',' << m.row_edges[r] << ','
             << format_double(m.lodf(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k))) << '\n';
        }
      }
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Context-agnostic anomaly detection for power-grid line-flow streams"};
  app.require_subcommand(1);

  ParseArgs pa;
  auto* parse = app.add_subcommand("parse", "Read a case file and print its size");
  parse->add_option("case", pa.case_path, "MATPOWER .m or JSON case file")->required();

  SimulateArgs sa;
  auto* sim = app.add_subcommand("simulate", "Generate a synthetic scenario directory");
  sim->add_option("--case", sa.case_path, "Case file")->required();
  sim->add_option("--out", sa.out, "Output scenario directory")->required();
  sim->add_option("--config", sa.config_path, "Scenario config JSON; flags below override it");
  sim->add_option("--seed", sa.seed, "RNG seed");
  sim->add_option("--n-periods", sa.n_periods, "Number of periods");
  sim->add_option("--n-tau", sa.n_tau, "Ticks per period");
  sim->add_option("--n-anomalies", sa.n_anomalies, "Number of injected anomalies");
  sim->add_option("--shifts", sa.n_shift_events, "Number of load shift events");
  sim->add_option("--variability", sa.variability, "Relative amplitude of the periodic load pattern");
  sim->add_option("--noise", sa.noise, "Relative standard deviation of injection noise");
  sim->add_option("--sensor-fraction", sa.sensor_fraction, "Fraction of buses with sensors");
  sim->add_option("--sensor-count", sa.sensor_count, "Number of sensor buses (overrides fraction)");

  DetectArgs da;
  auto* det = app.add_subcommand("detect", "Stream a scenario through the detector");
  det->add_option("--scenario", da.scenario, "Scenario directory")->required();
  det->add_option("--out", da.out, "Output directory (verdicts.jsonl); stdout when omitted");
  det->add_option("--variant", da.variant, "naive, IP or IPLC")->check(CLI::IsMember({"naive", "IP", "IPLC"}));
  det->add_option("--threshold", da.threshold, "Anomaly threshold on the max z-score");
  det->add_option("--rho", da.rho, "Weight regularizer (default: mean distance)");
  det->add_option("--warmup", da.warmup, "History length before anomalies are recorded (default: n_tau)");
  det->add_option("--weights-at", da.weights_at, "Write weights.csv (tick,distance,weight) used at this tick");

  EvaluateArgs ea;
  auto* ev = app.add_subcommand("evaluate", "Run a variant x sensor-count x seed sweep");
  ev->add_option("--config", ea.config, "Evaluation config JSON")->required();
  ev->add_option("--out", ea.out, "Output directory")->required();
  ev->add_option("--threads", ea.threads, "Worker threads (default: hardware concurrency)");

  DumpArgs ma;
  auto* dump = app.add_subcommand("dump-mapping", "Per-tick raw, corrected and mapped flow of one branch");
  dump->add_option("--scenario", ma.scenario, "Scenario directory")->required();
  dump->add_option("--edge", ma.edge, "Observed baseline branch id")->required();
  dump->add_option("--out", ma.out, "Output directory")->required();
  dump->add_option("--variant", ma.variant, "naive, IP or IPLC")->check(CLI::IsMember({"naive", "IP", "IPLC"}));
  dump->add_flag("--dump-sensitivities", ma.sensitivities, "Also write ptdf.csv and lodf.csv");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*parse) return run_parse(pa);
    if (*sim) return run_simulate(sa);
    if (*det) return run_detect(da);
    if (*ev) return run_evaluate(ea);
    if (*dump) return run_dump_mapping(ma);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
