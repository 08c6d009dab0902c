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

// Synthetic measurement streams: periodic load with noise and shift events,
// one anticipated branch outage per period, DC-generated line flows, and
// unobserved branch outages injected at sampled ticks as ground truth.

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "gridcal/mapping.hpp"
#include "gridcal/netmodel.hpp"

namespace gridcal {

/// Seedable generator with a fixed output sequence on every platform:
/// mt19937_64 bits, converted to uniforms and normals by hand rather than
/// through the implementation-defined std distributions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Independent stream for (seed, purpose, index).
  static Rng stream(std::uint64_t seed, std::uint64_t purpose, std::uint64_t index = 0);

  std::uint64_t bits() { return engine_(); }
  double uniform();                       // [0, 1)
  double normal();                        // standard normal, Box-Muller
  std::size_t index(std::size_t n);       // uniform on [0, n)
  /// k distinct values from [0, n), in draw order.
  std::vector<std::size_t> sample(std::size_t n, std::size_t k);

 private:
  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

struct ScenarioConfig {
  int n_periods = 20;
  int n_tau = 60;
  int n_anomalies = 20;
  double load_variability = 0.0;  // amplitude of the periodic pattern, relative
  int n_shift_events = 0;
  std::vector<int> shift_ticks;   // explicit ticks; overrides n_shift_events when set
  double shift_magnitude = 0.2;   // relative step applied at a shift
  double shift_bus_fraction = 0.1;
  double noise_stdev = 0.0;       // relative to |base injection|
  std::uint64_t seed = 1;
  double sensor_fraction = 0.1;
  std::optional<int> sensor_count;
  std::vector<BusId> sensor_buses;  // explicit sensors; overrides count and fraction
  std::optional<int> anomaly_start_tick;  // first tick eligible for an anomaly; default n_tau + 1
  double min_anomaly_coupling = 1e-3;     // max |LODF| onto observed active edges
  double min_anomaly_impact = 0.0;        // max |flow change| on observed edges, per-unit

  int n_ticks() const { return n_periods * n_tau; }
  int first_anomaly_tick() const { return anomaly_start_tick.value_or(n_tau + 1); }
  /// Throws UsageError on inconsistent parameters.
  void validate() const;
};

struct LoadProfile {
  std::vector<std::vector<double>> injections;  // [tick - 1][bus], per-unit, unbalanced
  std::vector<int> shift_ticks;
};

LoadProfile generate_load_profile(const ScenarioConfig& config, const GridCase& grid);

struct AnomalyEvent {
  int tick = 0;
  BranchId branch = 0;
  double coupling = 0.0;  // max |d_e^k| over observed active edges
  double impact = 0.0;    // max |flow change| on observed active edges at that tick
};

struct Scenario {
  ScenarioConfig config;
  CasePtr grid;
  Topology baseline;
  SensorSet sensors;
  std::vector<double> baseline_injections;   // case base injections, per-unit
  std::map<int, Topology> period_topologies;  // period 1..n_periods
  std::vector<MeasurementFrame> frames;       // ticks 1..n_ticks
  std::vector<AnomalyEvent> truth;            // sorted by tick
  std::vector<int> shift_ticks;

  std::vector<int> truth_ticks() const;
  std::shared_ptr<const BaselineContext> baseline_context() const;
};

/// Sensor buses for a config: explicit list, else `sensor_count` or
/// `sensor_fraction` of buses drawn uniformly.
std::vector<BusId> choose_sensors(const ScenarioConfig& config, const GridCase& grid);

Scenario generate_scenario(const ScenarioConfig& config, CasePtr grid);

/// The same scenario with every anomaly removed (frames regenerated on the
/// presumed topologies); used to diff truth ticks.
Scenario without_anomalies(const Scenario& scenario);

}  // namespace gridcal
