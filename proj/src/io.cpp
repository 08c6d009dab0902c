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

#include "gridcal/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "gridcal/error.hpp"

namespace gridcal {

using nlohmann::json;
using nlohmann::ordered_json;

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string csv_quote(const std::string& field) {
  if (field.find_first_of(",\"\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kData, "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::kData, "cannot write " + path.string());
  return out;
}

// Rejects keys outside `allowed`.
void check_keys(const json& j, std::initializer_list<std::string_view> allowed, const std::string& where) {
  if (!j.is_object()) throw UsageError(where + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || key == a;
    if (!ok) throw UsageError("unknown key '" + key + "' in " + where);
  }
}

template <typename T>
T get(const json& j, const std::string& key, const std::string& where) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw UsageError("bad value for '" + key + "' in " + where);
  }
}

template <typename T>
void read_opt(const json& j, const std::string& key, T& dst, const std::string& where) {
  if (j.contains(key)) dst = get<T>(j, key, where);
}

double parse_number(std::string_view s, int line) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw ParseError("bad number '" + std::string(s) + "'", line);
  }
  return v;
}

int parse_int(std::string_view s, int line) {
  int v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw ParseError("bad integer '" + std::string(s) + "'", line);
  }
  return v;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    std::size_t c = line.find(',', start);
    out.push_back(line.substr(start, c == std::string_view::npos ? std::string_view::npos : c - start));
    if (c == std::string_view::npos) break;
    start = c + 1;
  }
  return out;
}

void strip_cr(std::string& s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
}

EdgeList baseline_observed(const SensorSet& sensors, const GridCase& grid) {
  return intersect(sensors.observed_edges, grid.in_service_branches());
}

}  // namespace

// ---------------------------------------------------------------------------
// Scenario config

ordered_json to_json(const ScenarioConfig& c) {
  ordered_json j;
  j["n_periods"] = c.n_periods;
  j["n_tau"] = c.n_tau;
  j["n_anomalies"] = c.n_anomalies;
  j["load_variability"] = c.load_variability;
  j["n_shift_events"] = c.n_shift_events;
  if (!c.shift_ticks.empty()) j["shift_ticks"] = c.shift_ticks;
  j["shift_magnitude"] = c.shift_magnitude;
  j["shift_bus_fraction"] = c.shift_bus_fraction;
  j["noise_stdev"] = c.noise_stdev;
  j["seed"] = c.seed;
  j["sensor_fraction"] = c.sensor_fraction;
  if (c.sensor_count) j["sensor_count"] = *c.sensor_count;
  if (!c.sensor_buses.empty()) j["sensor_buses"] = c.sensor_buses;
  if (c.anomaly_start_tick) j["anomaly_start_tick"] = *c.anomaly_start_tick;
  j["min_anomaly_coupling"] = c.min_anomaly_coupling;
  j["min_anomaly_impact_pu"] = c.min_anomaly_impact;
  return j;
}

ScenarioConfig scenario_config_from_json(const json& j) {
  const std::string where = "scenario config";
  check_keys(j,
             {"n_periods", "n_tau", "n_anomalies", "load_variability", "n_shift_events", "shift_ticks",
              "shift_magnitude", "shift_bus_fraction", "noise_stdev", "seed", "sensor_fraction",
              "sensor_count", "sensor_buses", "anomaly_start_tick", "min_anomaly_coupling",
              "min_anomaly_impact_pu"},
             where);
  ScenarioConfig c;
  read_opt(j, "n_periods", c.n_periods, where);
  read_opt(j, "n_tau", c.n_tau, where);
  read_opt(j, "n_anomalies", c.n_anomalies, where);
  read_opt(j, "load_variability", c.load_variability, where);
  read_opt(j, "n_shift_events", c.n_shift_events, where);
  read_opt(j, "shift_ticks", c.shift_ticks, where);
  read_opt(j, "shift_magnitude", c.shift_magnitude, where);
  read_opt(j, "shift_bus_fraction", c.shift_bus_fraction, where);
  read_opt(j, "noise_stdev", c.noise_stdev, where);
  read_opt(j, "seed", c.seed, where);
  read_opt(j, "sensor_fraction", c.sensor_fraction, where);
  if (j.contains("sensor_count")) c.sensor_count = get<int>(j, "sensor_count", where);
  read_opt(j, "sensor_buses", c.sensor_buses, where);
  if (j.contains("anomaly_start_tick")) c.anomaly_start_tick = get<int>(j, "anomaly_start_tick", where);
  read_opt(j, "min_anomaly_coupling", c.min_anomaly_coupling, where);
  read_opt(j, "min_anomaly_impact_pu", c.min_anomaly_impact, where);
  c.validate();
  return c;
}

// ---------------------------------------------------------------------------
// Frames

void write_frames_csv(std::ostream& out, const Scenario& sc) {
  const GridCase& grid = *sc.grid;
  const EdgeList cols = baseline_observed(sc.sensors, grid);
  const double mva = grid.base_mva();
  out << "tick,period";
  for (BranchId id : cols) out << ",f_" << id;
  for (const Bus& b : grid.buses()) out << ",p_" << b.id;
  out << '\n';
  std::map<int, std::vector<std::ptrdiff_t>> slot;  // column -> position in frame.flows, or -1
  for (const auto& [t, topo] : sc.period_topologies) {
    EdgeList obs = sc.sensors.active_observed(topo);
    auto& s = slot[t];
    for (BranchId id : cols) {
      auto it = std::lower_bound(obs.begin(), obs.end(), id);
      s.push_back(it != obs.end() && *it == id ? it - obs.begin() : -1);
    }
  }
  for (const auto& f : sc.frames) {
    out << f.tick << ',' << f.period;
    for (std::ptrdiff_t p : slot.at(f.period)) {
      out << ',';
      if (p >= 0) out << format_double(f.flows[p] * mva);
    }
    for (Eigen::Index b = 0; b < f.injections.size(); ++b) out << ',' << format_double(f.injections[b] * mva);
    out << '\n';
  }
}

std::vector<MeasurementFrame> read_frames_csv(std::istream& in, const GridCase& grid, const SensorSet& sensors,
                                              const std::map<int, Topology>& periods, int n_tau) {
  const EdgeList cols = baseline_observed(sensors, grid);
  const double mva = grid.base_mva();
  std::string line;
  int line_no = 1;
  if (!std::getline(in, line)) throw ParseError("empty frames file", 1);
  strip_cr(line);
  {
    std::string expect = "tick,period";
    for (BranchId id : cols) expect += ",f_" + std::to_string(id);
    for (const Bus& b : grid.buses()) expect += ",p_" + std::to_string(b.id);
    if (line != expect) throw ParseError("frames header does not match the scenario's sensors and buses", 1);
  }
  const std::size_t n_cols = 2 + cols.size() + grid.buses().size();
  std::map<int, EdgeList> obs;
  for (const auto& [t, topo] : periods) obs[t] = sensors.active_observed(topo);

  std::vector<MeasurementFrame> frames;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (line.empty()) continue;
    auto cells = split(line);
    if (cells.size() != n_cols) {
      throw ParseError("expected " + std::to_string(n_cols) + " fields, got " + std::to_string(cells.size()),
                       line_no);
    }
    MeasurementFrame f;
    f.tick = parse_int(cells[0], line_no);
    f.period = parse_int(cells[1], line_no);
    if (f.tick != static_cast<int>(frames.size()) + 1) throw ParseError("ticks must run 1, 2, ...", line_no);
    if (f.period != (f.tick - 1) / n_tau + 1) throw ParseError("period does not match tick", line_no);
    auto oit = obs.find(f.period);
    if (oit == obs.end()) throw ParseError("no topology for period " + std::to_string(f.period), line_no);
    const EdgeList& active = oit->second;
    f.flows.resize(static_cast<Eigen::Index>(active.size()));
    std::size_t k = 0;
    for (std::size_t c = 0; c < cols.size(); ++c) {
      std::string_view cell = cells[2 + c];
      const bool is_active = k < active.size() && active[k] == cols[c];
      if (is_active) {
        if (cell.empty()) throw ParseError("missing flow on active branch " + std::to_string(cols[c]), line_no);
        f.flows[static_cast<Eigen::Index>(k++)] = parse_number(cell, line_no) / mva;
      } else if (!cell.empty()) {
        throw ParseError("flow given for inactive branch " + std::to_string(cols[c]), line_no);
      }
    }
    f.injections.resize(static_cast<Eigen::Index>(grid.buses().size()));
    for (std::size_t b = 0; b < grid.buses().size(); ++b) {
      f.injections[static_cast<Eigen::Index>(b)] = parse_number(cells[2 + cols.size() + b], line_no) / mva;
    }
    frames.push_back(std::move(f));
  }
  return frames;
}

// ---------------------------------------------------------------------------
// Scenario directory

void save_scenario(const std::filesystem::path& dir, const Scenario& sc, const std::string& case_path) {
  std::filesystem::create_directories(dir);
  {
    ordered_json j;
    j["case"] = case_path;
    j["scenario"] = to_json(sc.config);
    open_out(dir / "config.json") << j.dump(2) << '\n';
  }
  {
    auto out = open_out(dir / "frames.csv");
    write_frames_csv(out, sc);
  }
  {
    auto out = open_out(dir / "truth.csv");
    out << "tick,branch\n";
    for (const auto& a : sc.truth) out << a.tick << ',' << a.branch << '\n';
  }
  {
    ordered_json j;
    j["sensors"] = sc.sensors.buses;
    ordered_json periods = ordered_json::array();
    for (const auto& [t, topo] : sc.period_topologies) {
      EdgeList removed, added;
      const EdgeList& base = sc.baseline.active_edges();
      const EdgeList& e = topo.active_edges();
      std::set_difference(base.begin(), base.end(), e.begin(), e.end(), std::back_inserter(removed));
      std::set_difference(e.begin(), e.end(), base.begin(), base.end(), std::back_inserter(added));
      ordered_json p;
      p["period"] = t;
      p["removed"] = removed;
      p["added"] = added;
      periods.push_back(std::move(p));
    }
    j["periods"] = std::move(periods);
    j["shift_ticks"] = sc.shift_ticks;
    open_out(dir / "topologies.json") << j.dump(2) << '\n';
  }
}

Scenario load_scenario(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw Error(ErrorKind::kData, "scenario directory not found: " + dir.string());
  }
  json cfg = read_json_file(dir / "config.json");
  check_keys(cfg, {"case", "scenario"}, "config.json");
  std::filesystem::path case_path = get<std::string>(cfg, "case", "config.json");
  if (case_path.is_relative() && std::filesystem::exists(dir / case_path)) case_path = dir / case_path;
  auto grid = std::make_shared<const GridCase>(load_case(case_path));
  ScenarioConfig config = scenario_config_from_json(cfg.value("scenario", json::object()));

  json topo = read_json_file(dir / "topologies.json");
  check_keys(topo, {"sensors", "periods", "shift_ticks"}, "topologies.json");
  Scenario sc{config, grid, Topology::baseline(grid), {}, grid->net_injections_pu(), {}, {}, {}, {}};
  sc.sensors = observed_edges(*grid, get<std::vector<BusId>>(topo, "sensors", "topologies.json"));
  if (topo.contains("shift_ticks")) sc.shift_ticks = get<std::vector<int>>(topo, "shift_ticks", "topologies.json");
  for (const auto& p : topo.at("periods")) {
    check_keys(p, {"period", "removed", "added"}, "topologies.json period");
    const int t = get<int>(p, "period", "topologies.json period");
    auto removed = get<EdgeList>(p, "removed", "topologies.json period");
    auto added = get<EdgeList>(p, "added", "topologies.json period");
    for (BranchId id : removed) {
      if (!sc.baseline.contains(id)) throw ModelError("period " + std::to_string(t) + " removes inactive branch " + std::to_string(id));
    }
    for (BranchId id : added) {
      // The mapping is defined on baseline edges only.
      throw ModelError("period " + std::to_string(t) + " adds branch " + std::to_string(id) +
                       ", which is not in the baseline");
    }
    if (!sc.period_topologies.emplace(t, sc.baseline.without(removed, t).with(added, t)).second) {
      throw ModelError("duplicate period " + std::to_string(t));
    }
  }
  for (int t = 1; t <= config.n_periods; ++t) {
    if (!sc.period_topologies.contains(t)) throw ModelError("topologies.json lacks period " + std::to_string(t));
  }

  {
    std::ifstream in(dir / "frames.csv", std::ios::binary);
    if (!in) throw Error(ErrorKind::kData, "cannot open " + (dir / "frames.csv").string());
    try {
      sc.frames = read_frames_csv(in, *grid, sc.sensors, sc.period_topologies, config.n_tau);
    } catch (const ParseError& e) {
      throw Error(ErrorKind::kData, (dir / "frames.csv").string() + ": " + e.what());
    }
    if (static_cast<int>(sc.frames.size()) != config.n_ticks()) {
      throw ModelError("frames.csv has " + std::to_string(sc.frames.size()) + " ticks, config expects " +
                       std::to_string(config.n_ticks()));
    }
  }
  {
    std::istringstream in(read_file(dir / "truth.csv"));
    std::string line;
    std::getline(in, line);
    strip_cr(line);
    if (line != "tick,branch") throw ParseError("truth.csv header must be 'tick,branch'", 1);
    int line_no = 1;
    std::set<int> seen;
    while (std::getline(in, line)) {
      ++line_no;
      strip_cr(line);
      if (line.empty()) continue;
      auto cells = split(line);
      if (cells.size() != 2) throw ParseError("expected tick,branch", line_no);
      AnomalyEvent a;
      a.tick = parse_int(cells[0], line_no);
      a.branch = parse_int(cells[1], line_no);
      if (a.tick < 1 || a.tick > config.n_ticks() || !seen.insert(a.tick).second) {
        throw ParseError("bad or repeated truth tick " + std::to_string(a.tick), line_no);
      }
      sc.truth.push_back(a);
    }
    std::sort(sc.truth.begin(), sc.truth.end(), [](const auto& x, const auto& y) { return x.tick < y.tick; });
  }
  return sc;
}

// ---------------------------------------------------------------------------

std::string verdict_json(const AnomalyVerdict& v) {
  ordered_json j;
  j["tick"] = v.tick;
  if (std::isfinite(v.score)) {
    j["score"] = v.score;
  } else {
    j["score"] = nullptr;
  }
  j["argmax_edge"] = v.argmax_edge;
  j["anomalous"] = v.is_anomalous;
  if (v.warmup) j["warmup"] = true;
  if (!v.error.empty()) j["error"] = v.error;
  return j.dump();
}

EvalConfig eval_config_from_json(const json& j, const std::filesystem::path& base_dir) {
  const std::string where = "eval config";
  check_keys(j,
             {"case", "scenario", "variants", "sensor_fractions", "sensor_counts", "seeds", "rho", "threshold",
              "k", "warmup", "threads"},
             where);
  EvalConfig c;
  std::filesystem::path case_path = get<std::string>(j, "case", where);
  c.case_path = case_path.is_relative() ? base_dir / case_path : case_path;
  if (j.contains("scenario")) c.scenario = scenario_config_from_json(j.at("scenario"));
  if (j.contains("variants")) {
    c.variants.clear();
    for (const auto& s : get<std::vector<std::string>>(j, "variants", where)) c.variants.push_back(parse_variant(s));
  }
  read_opt(j, "sensor_fractions", c.sensor_fractions, where);
  read_opt(j, "sensor_counts", c.sensor_counts, where);
  read_opt(j, "seeds", c.seeds, where);
  if (j.contains("rho")) c.run.rho = get<double>(j, "rho", where);
  read_opt(j, "threshold", c.run.threshold, where);
  if (j.contains("k")) c.run.k = get<std::size_t>(j, "k", where);
  if (j.contains("warmup")) c.run.warmup = get<int>(j, "warmup", where);
  read_opt(j, "threads", c.threads, where);
  if (c.variants.empty() || c.seeds.empty()) throw UsageError("variants and seeds must be non-empty");
  return c;
}

json read_json_file(const std::filesystem::path& path) {
  std::string text = read_file(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::kData, path.string() + ": " + e.what());
  }
}

}  // namespace gridcal
