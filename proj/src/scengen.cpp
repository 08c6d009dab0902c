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

#include "gridcal/scengen.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "gridcal/error.hpp"
#include "gridcal/sensitivity.hpp"

namespace gridcal {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// RNG stream purposes.
enum : std::uint64_t {
  kTopologyStream = 1,
  kSensorStream = 2,
  kShiftStream = 3,
  kNoiseStream = 4,
  kAnomalyStream = 5,
};

}  // namespace

Rng Rng::stream(std::uint64_t seed, std::uint64_t purpose, std::uint64_t index) {
  return Rng(splitmix64(splitmix64(splitmix64(seed) ^ purpose) ^ index));
}

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double Rng::normal() {
  if (spare_) {
    double v = *spare_;
    spare_.reset();
    return v;
  }
  double u1 = 0.0;
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(a);
  return r * std::cos(a);
}

std::size_t Rng::index(std::size_t n) {
  if (n == 0) throw UsageError("cannot draw from an empty range");
  const std::uint64_t bound = static_cast<std::uint64_t>(n);
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  std::uint64_t x = engine_();
  while (x >= limit) x = engine_();
  return static_cast<std::size_t>(x % bound);
}

std::vector<std::size_t> Rng::sample(std::size_t n, std::size_t k) {
  if (k > n) throw UsageError("cannot sample " + std::to_string(k) + " of " + std::to_string(n));
  std::vector<std::size_t> pool(n);
  for (std::size_t i = 0; i < n; ++i) pool[i] = i;
  for (std::size_t i = 0; i < k; ++i) std::swap(pool[i], pool[i + index(n - i)]);
  pool.resize(k);
  return pool;
}

void ScenarioConfig::validate() const {
  if (n_periods <= 0) throw UsageError("n_periods must be positive");
  if (n_tau <= 0) throw UsageError("n_tau must be positive");
  if (n_anomalies < 0 || n_shift_events < 0) throw UsageError("counts must be nonnegative");
  if (first_anomaly_tick() < 1) throw UsageError("anomaly_start_tick must be at least 1");
  if (n_anomalies > n_ticks() - first_anomaly_tick() + 1) {
    throw UsageError("n_anomalies " + std::to_string(n_anomalies) + " exceeds the " +
                     std::to_string(std::max(0, n_ticks() - first_anomaly_tick() + 1)) +
                     " eligible ticks");
  }
  if (load_variability < 0.0 || noise_stdev < 0.0) {
    throw UsageError("load_variability and noise_stdev must be nonnegative");
  }
  if (!(shift_bus_fraction > 0.0 && shift_bus_fraction <= 1.0)) {
    throw UsageError("shift_bus_fraction must be in (0, 1]");
  }
  if (sensor_buses.empty() && !sensor_count && !(sensor_fraction > 0.0 && sensor_fraction <= 1.0)) {
    throw UsageError("sensor_fraction must be in (0, 1]");
  }
  if (sensor_count && *sensor_count <= 0) throw UsageError("sensor_count must be positive");
  for (int t : shift_ticks) {
    if (t < 1 || t > n_ticks()) throw UsageError("shift tick " + std::to_string(t) + " out of range");
  }
}

LoadProfile generate_load_profile(const ScenarioConfig& config, const GridCase& grid) {
  config.validate();
  const std::size_t n_bus = grid.buses().size();
  const int n_ticks = config.n_ticks();
  const std::vector<double> base = grid.net_injections_pu();

  LoadProfile out;
  if (!config.shift_ticks.empty()) {
    out.shift_ticks = config.shift_ticks;
  } else if (config.n_shift_events > 0) {
    Rng rng = Rng::stream(config.seed, kShiftStream);
    if (config.n_shift_events > n_ticks - 1) throw UsageError("too many shift events");
    for (std::size_t i : rng.sample(static_cast<std::size_t>(n_ticks - 1),
                                    static_cast<std::size_t>(config.n_shift_events))) {
      out.shift_ticks.push_back(static_cast<int>(i) + 2);
    }
  }
  std::sort(out.shift_ticks.begin(), out.shift_ticks.end());
  out.shift_ticks.erase(std::unique(out.shift_ticks.begin(), out.shift_ticks.end()),
                        out.shift_ticks.end());

  // Persistent multiplicative step per shift, each on its own random bus subset.
  const std::size_t shifted = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::lround(config.shift_bus_fraction * static_cast<double>(n_bus))));
  std::vector<std::vector<std::size_t>> shift_buses;
  for (std::size_t s = 0; s < out.shift_ticks.size(); ++s) {
    Rng rng = Rng::stream(config.seed, kShiftStream, s + 1);
    shift_buses.push_back(rng.sample(n_bus, std::min(shifted, n_bus)));
  }

  std::vector<double> factor(n_bus, 1.0);
  std::size_t next_shift = 0;
  out.injections.resize(static_cast<std::size_t>(n_ticks));
  for (int tick = 1; tick <= n_ticks; ++tick) {
    while (next_shift < out.shift_ticks.size() && out.shift_ticks[next_shift] == tick) {
      for (std::size_t b : shift_buses[next_shift]) factor[b] *= 1.0 + config.shift_magnitude;
      ++next_shift;
    }
    const double pattern =
        std::sin(2.0 * std::numbers::pi * static_cast<double>(tick - 1) / static_cast<double>(n_ticks));
    const double level = 1.0 + config.load_variability * pattern;
    Rng noise = Rng::stream(config.seed, kNoiseStream, static_cast<std::uint64_t>(tick));
    auto& inj = out.injections[static_cast<std::size_t>(tick - 1)];
    inj.resize(n_bus);
    for (std::size_t b = 0; b < n_bus; ++b) {
      inj[b] = base[b] * factor[b] * level;
      if (config.noise_stdev > 0.0) inj[b] += config.noise_stdev * std::abs(base[b]) * noise.normal();
    }
  }
  return out;
}

std::vector<BusId> choose_sensors(const ScenarioConfig& config, const GridCase& grid) {
  if (!config.sensor_buses.empty()) return config.sensor_buses;
  const std::size_t n_bus = grid.buses().size();
  std::size_t count = config.sensor_count
                          ? static_cast<std::size_t>(*config.sensor_count)
                          : static_cast<std::size_t>(std::lround(config.sensor_fraction * static_cast<double>(n_bus)));
  count = std::clamp<std::size_t>(count, 1, n_bus);
  Rng rng = Rng::stream(config.seed, kSensorStream);
  std::vector<BusId> out;
  for (std::size_t i : rng.sample(n_bus, count)) out.push_back(grid.buses()[i].id);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<int> Scenario::truth_ticks() const {
  std::vector<int> t;
  for (const auto& a : truth) t.push_back(a.tick);
  return t;
}

std::shared_ptr<const BaselineContext> Scenario::baseline_context() const {
  return std::make_shared<const BaselineContext>(baseline, baseline_injections, sensors);
}

namespace {

Scenario generate(const ScenarioConfig& config, CasePtr grid, bool with_anomalies) {
  config.validate();
  Scenario sc{config, grid, Topology::baseline(grid), {}, grid->net_injections_pu(), {}, {}, {}, {}};
  sc.baseline.check_connected();
  auto sensor_buses = choose_sensors(config, *grid);
  sc.sensors = observed_edges(*grid, sensor_buses);

  // One anticipated outage per period, off the baseline, never a bridge.
  const EdgeList bridges = sc.baseline.bridges();
  EdgeList candidates;
  std::set_difference(sc.baseline.active_edges().begin(), sc.baseline.active_edges().end(),
                      bridges.begin(), bridges.end(), std::back_inserter(candidates));
  if (candidates.empty()) throw ModelError("case has no non-bridge branch to switch out");
  Rng topo_rng = Rng::stream(config.seed, kTopologyStream);
  for (int t = 1; t <= config.n_periods; ++t) {
    BranchId k = candidates[topo_rng.index(candidates.size())];
    std::array<BranchId, 1> removed{k};
    sc.period_topologies.emplace(t, sc.baseline.without(removed, t));
  }

  LoadProfile profile = generate_load_profile(config, *grid);
  sc.shift_ticks = profile.shift_ticks;

  std::map<int, std::shared_ptr<DcNetwork>> period_net;
  std::map<int, EdgeList> period_obs;
  for (const auto& [t, topo] : sc.period_topologies) {
    period_net.emplace(t, std::make_shared<DcNetwork>(topo));
    period_obs.emplace(t, sc.sensors.active_observed(topo));
  }
  auto period_of = [&](int tick) { return (tick - 1) / config.n_tau + 1; };

  // Anomalies: unobserved, non-bridge active branches of the period topology
  // that visibly couple onto the observed flows.
  std::map<int, std::pair<AnomalyEvent, std::shared_ptr<DcNetwork>>> anomalies;
  if (with_anomalies && config.n_anomalies > 0) {
    Rng rng = Rng::stream(config.seed, kAnomalyStream);
    const int first = config.first_anomaly_tick();
    auto picks = rng.sample(static_cast<std::size_t>(config.n_ticks() - first + 1),
                            static_cast<std::size_t>(config.n_anomalies));
    std::map<int, EdgeList> period_bridges;
    for (std::size_t i : picks) {
      const int tick = first + static_cast<int>(i);
      const int t = period_of(tick);
      const Topology& topo = sc.period_topologies.at(t);
      auto [bit, fresh] = period_bridges.try_emplace(t);
      if (fresh) bit->second = topo.bridges();
      EdgeList pool;
      for (BranchId id : topo.active_edges()) {
        if (!sc.sensors.observes(id) && !std::binary_search(bit->second.begin(), bit->second.end(), id)) {
          pool.push_back(id);
        }
      }
      const DcNetwork& net = *period_net.at(t);
      const EdgeList& obs = period_obs.at(t);
      DcFlowSolution pre = net.solve(profile.injections[static_cast<std::size_t>(tick - 1)]);
      std::optional<AnomalyEvent> chosen;
      // Draw without replacement until a candidate passes the coupling test.
      for (std::size_t j : rng.sample(pool.size(), pool.size())) {
        BranchId k = pool[j];
        LodfVector d = net.lodf(obs, k);
        const double coupling = obs.empty() ? 0.0 : d.values.cwiseAbs().maxCoeff();
        const double impact = coupling * std::abs(pre.flow(k));
        if (coupling >= config.min_anomaly_coupling && impact >= config.min_anomaly_impact) {
          chosen = AnomalyEvent{tick, k, coupling, impact};
          break;
        }
      }
      if (!chosen) {
        throw ModelError("no unobserved branch couples onto the observed flows at tick " +
                         std::to_string(tick));
      }
      std::array<BranchId, 1> out{chosen->branch};
      auto true_net = std::make_shared<DcNetwork>(topo.without(out, t));
      anomalies.emplace(tick, std::make_pair(*chosen, std::move(true_net)));
    }
  }
  for (const auto& [tick, a] : anomalies) sc.truth.push_back(a.first);

  sc.frames.reserve(static_cast<std::size_t>(config.n_ticks()));
  for (int tick = 1; tick <= config.n_ticks(); ++tick) {
    const int t = period_of(tick);
    auto an = anomalies.find(tick);
    const DcNetwork& net = an != anomalies.end() ? *an->second.second : *period_net.at(t);
    DcFlowSolution sol = net.solve(profile.injections[static_cast<std::size_t>(tick - 1)]);
    MeasurementFrame f;
    f.tick = tick;
    f.period = t;
    f.flows = sol.flows_on(period_obs.at(t));
    f.injections = Eigen::Map<const Eigen::VectorXd>(sol.injections.data(),
                                                     static_cast<Eigen::Index>(sol.injections.size()));
    sc.frames.push_back(std::move(f));
  }
  return sc;
}

}  // namespace

Scenario generate_scenario(const ScenarioConfig& config, CasePtr grid) {
  return generate(config, std::move(grid), true);
}

Scenario without_anomalies(const Scenario& scenario) {
  return generate(scenario.config, scenario.grid, false);
}

}  // namespace gridcal
