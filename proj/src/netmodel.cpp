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

#include "gridcal/netmodel.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

#include "gridcal/error.hpp"
#include "json.hpp"

namespace gridcal {

GridCase::GridCase(std::string name, double base_mva, std::vector<Bus> buses,
                   std::vector<Branch> branches, BusId slack_bus)
    : name_(std::move(name)),
      base_mva_(base_mva),
      buses_(std::move(buses)),
      branches_(std::move(branches)),
      slack_bus_(slack_bus) {
  if (!(base_mva_ > 0.0) || !std::isfinite(base_mva_)) {
    throw ModelError("baseMVA must be positive, got " + std::to_string(base_mva_));
  }
  for (std::size_t i = 0; i < buses_.size(); ++i) {
    const Bus& b = buses_[i];
    if (!bus_pos_.emplace(b.id, i).second) {
      throw ModelError("duplicate bus id " + std::to_string(b.id));
    }
    if (!std::isfinite(b.net_mw())) {
      throw ModelError("non-finite injection at bus " + std::to_string(b.id));
    }
  }
  if (!bus_pos_.contains(slack_bus_)) {
    throw ModelError("slack bus " + std::to_string(slack_bus_) + " is not in the bus table");
  }
  for (std::size_t i = 0; i < branches_.size(); ++i) {
    const Branch& br = branches_[i];
    if (!branch_pos_.emplace(br.id, i).second) {
      throw ModelError("duplicate branch id " + std::to_string(br.id));
    }
    for (BusId end : {br.from_bus, br.to_bus}) {
      if (!bus_pos_.contains(end)) {
        throw ModelError("branch " + std::to_string(br.id) + " references unknown bus " +
                         std::to_string(end));
      }
    }
    if (br.from_bus == br.to_bus) {
      throw ModelError("branch " + std::to_string(br.id) + " is a self loop");
    }
    if (!(br.reactance > 0.0) || !std::isfinite(br.reactance)) {
      throw ModelError("branch " + std::to_string(br.id) + " has non-positive reactance");
    }
  }
}

std::size_t GridCase::bus_index(BusId id) const {
  auto it = bus_pos_.find(id);
  if (it == bus_pos_.end()) throw ModelError("unknown bus id " + std::to_string(id));
  return it->second;
}

std::size_t GridCase::branch_index(BranchId id) const {
  auto it = branch_pos_.find(id);
  if (it == branch_pos_.end()) throw ModelError("unknown branch id " + std::to_string(id));
  return it->second;
}

std::vector<double> GridCase::net_injections_pu() const {
  std::vector<double> p(buses_.size());
  for (std::size_t i = 0; i < buses_.size(); ++i) p[i] = buses_[i].net_mw() / base_mva_;
  return p;
}

EdgeList GridCase::in_service_branches() const {
  EdgeList out;
  for (const Branch& br : branches_) {
    if (br.in_service) out.push_back(br.id);
  }
  std::sort(out.begin(), out.end());
  return out;
}

// ---------------------------------------------------------------------------
// MATPOWER reader

namespace {

struct Table {
  std::vector<std::vector<double>> rows;
  std::vector<int> lines;
};

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string_view strip_comment(std::string_view line) {
  auto pos = line.find('%');
  return pos == std::string_view::npos ? line : line.substr(0, pos);
}

std::vector<double> parse_row(std::string_view row, int line_no) {
  std::vector<double> values;
  std::size_t i = 0;
  while (i < row.size()) {
    char c = row[i];
    if (std::isspace(static_cast<unsigned char>(c)) || c == ',') {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < row.size() && !std::isspace(static_cast<unsigned char>(row[j])) && row[j] != ',') ++j;
    std::string token(row.substr(i, j - i));
    double v = 0.0;
    if (token == "Inf" || token == "inf") {
      v = HUGE_VAL;
    } else if (token == "-Inf" || token == "-inf") {
      v = -HUGE_VAL;
    } else {
      auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
      if (ec != std::errc() || ptr != token.data() + token.size()) {
        throw ParseError("malformed number '" + token + "'", line_no);
      }
    }
    values.push_back(v);
    i = j;
  }
  return values;
}

class MatpowerReader {
 public:
  explicit MatpowerReader(std::string_view text) {
    std::size_t start = 0;
    while (start <= text.size()) {
      std::size_t end = text.find('\n', start);
      if (end == std::string_view::npos) end = text.size();
      lines_.push_back(text.substr(start, end - start));
      start = end + 1;
    }
  }

  std::optional<double> scalar(std::string_view key) const {
    for (std::size_t n = 0; n < lines_.size(); ++n) {
      std::string_view line = trim(strip_comment(lines_[n]));
      if (!starts_with_key(line, key)) continue;
      auto eq = line.find('=');
      std::string_view rhs = trim(line.substr(eq + 1));
      if (!rhs.empty() && rhs.back() == ';') rhs.remove_suffix(1);
      auto values = parse_row(trim(rhs), static_cast<int>(n + 1));
      if (values.size() != 1) throw ParseError("expected a scalar for " + std::string(key), n + 1);
      return values.front();
    }
    return std::nullopt;
  }

  std::optional<Table> table(std::string_view key, std::size_t min_cols) const {
    for (std::size_t n = 0; n < lines_.size(); ++n) {
      std::string_view line = trim(strip_comment(lines_[n]));
      if (!starts_with_key(line, key)) continue;
      auto open = line.find('[');
      if (open == std::string_view::npos) {
        throw ParseError("expected '[' after " + std::string(key), static_cast<int>(n + 1));
      }
      Table t;
      std::string_view rest = line.substr(open + 1);
      std::size_t cur = n;
      for (;;) {
        bool closed = false;
        auto close = rest.find(']');
        if (close != std::string_view::npos) {
          rest = rest.substr(0, close);
          closed = true;
        }
        // A line may carry several ';'-separated rows.
        std::size_t s = 0;
        while (s <= rest.size()) {
          auto semi = rest.find(';', s);
          std::string_view chunk = rest.substr(s, semi == std::string_view::npos ? std::string_view::npos : semi - s);
          auto values = parse_row(chunk, static_cast<int>(cur + 1));
          if (!values.empty()) {
            if (values.size() < min_cols) {
              throw ParseError(std::string(key) + " row has " + std::to_string(values.size()) +
                                   " columns, need at least " + std::to_string(min_cols),
                               static_cast<int>(cur + 1));
            }
            t.rows.push_back(std::move(values));
            t.lines.push_back(static_cast<int>(cur + 1));
          }
          if (semi == std::string_view::npos) break;
          s = semi + 1;
        }
        if (closed) return t;
        if (++cur >= lines_.size()) {
          throw ParseError("unterminated table " + std::string(key), static_cast<int>(n + 1));
        }
        rest = strip_comment(lines_[cur]);
      }
    }
    return std::nullopt;
  }

 private:
  static bool starts_with_key(std::string_view line, std::string_view key) {
    if (!line.starts_with(key)) return false;
    std::string_view after = trim(line.substr(key.size()));
    return after.starts_with('=');
  }

  std::vector<std::string_view> lines_;
};

int as_int(double v, int line, const char* what) {
  if (v != std::floor(v) || std::abs(v) > 2e9) {
    throw ParseError(std::string(what) + " must be an integer", line);
  }
  return static_cast<int>(v);
}

}  // namespace

GridCase parse_case(std::string_view text, std::string name) {
  MatpowerReader reader(text);
  auto base = reader.scalar("mpc.baseMVA");
  if (!base) throw ParseError("missing mpc.baseMVA", 0);
  auto bus_table = reader.table("mpc.bus", 3);
  if (!bus_table) throw ParseError("missing mpc.bus table", 0);
  auto branch_table = reader.table("mpc.branch", 4);
  if (!branch_table) throw ParseError("missing mpc.branch table", 0);
  auto gen_table = reader.table("mpc.gen", 2);

  std::vector<Bus> buses;
  std::optional<BusId> slack;
  std::unordered_map<BusId, std::size_t> pos;
  for (std::size_t r = 0; r < bus_table->rows.size(); ++r) {
    const auto& row = bus_table->rows[r];
    int line = bus_table->lines[r];
    Bus b;
    b.id = as_int(row[0], line, "bus id");
    int type = as_int(row[1], line, "bus type");
    b.p_load_mw = row[2];
    if (type == 3) {
      if (slack) throw ModelError("more than one slack bus (" + std::to_string(*slack) + ", " + std::to_string(b.id) + ")");
      slack = b.id;
    }
    if (!pos.emplace(b.id, buses.size()).second) {
      throw ModelError("duplicate bus id " + std::to_string(b.id));
    }
    buses.push_back(b);
  }
  if (!slack) throw ModelError("no slack bus declared (bus type 3)");

  if (gen_table) {
    for (std::size_t r = 0; r < gen_table->rows.size(); ++r) {
      const auto& row = gen_table->rows[r];
      int line = gen_table->lines[r];
      BusId at = as_int(row[0], line, "gen bus");
      bool on = row.size() < 8 || row[7] > 0.0;
      auto it = pos.find(at);
      if (it == pos.end()) throw ModelError("generator at unknown bus " + std::to_string(at));
      if (on) buses[it->second].p_gen_mw += row[1];
    }
  }

  std::vector<Branch> branches;
  for (std::size_t r = 0; r < branch_table->rows.size(); ++r) {
    const auto& row = branch_table->rows[r];
    int line = branch_table->lines[r];
    Branch br;
    br.id = static_cast<BranchId>(r + 1);
    br.from_bus = as_int(row[0], line, "branch from bus");
    br.to_bus = as_int(row[1], line, "branch to bus");
    br.resistance = row[2];
    br.reactance = row[3];
    if (row.size() > 4) br.charging = row[4];
    if (row.size() > 8) br.tap_ratio = row[8];
    if (row.size() > 9) br.shift_deg = row[9];
    if (row.size() > 10) br.in_service = row[10] > 0.0;
    branches.push_back(br);
  }
  return GridCase(std::move(name), *base, std::move(buses), std::move(branches), *slack);
}

// ---------------------------------------------------------------------------
// JSON form

GridCase parse_case_json(std::string_view text, std::string name) {
  using nlohmann::json;
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("invalid JSON: ") + e.what(), 0);
  }
  try {
    if (doc.contains("name")) name = doc.at("name").get<std::string>();
    std::vector<Bus> buses;
    for (const auto& b : doc.at("buses")) {
      buses.push_back(Bus{b.at("id").get<int>(), b.value("p_load_mw", 0.0), b.value("p_gen_mw", 0.0)});
    }
    std::vector<Branch> branches;
    for (const auto& b : doc.at("branches")) {
      Branch br;
      br.id = b.at("id").get<int>();
      br.from_bus = b.at("from").get<int>();
      br.to_bus = b.at("to").get<int>();
      br.reactance = b.at("x").get<double>();
      br.resistance = b.value("r", 0.0);
      br.charging = b.value("b", 0.0);
      br.tap_ratio = b.value("tap", 0.0);
      br.shift_deg = b.value("shift_deg", 0.0);
      br.in_service = b.value("status", 1) != 0;
      branches.push_back(br);
    }
    return GridCase(std::move(name), doc.at("baseMVA").get<double>(), std::move(buses),
                    std::move(branches), doc.at("slack_bus").get<int>());
  } catch (const json::exception& e) {
    throw ParseError(std::string("case JSON: ") + e.what(), 0);
  }
}

std::string write_case_json(const GridCase& grid) {
  using nlohmann::ordered_json;
  ordered_json doc;
  doc["name"] = grid.name();
  doc["baseMVA"] = grid.base_mva();
  doc["slack_bus"] = grid.slack_bus();
  auto& buses = doc["buses"] = ordered_json::array();
  for (const Bus& b : grid.buses()) {
    buses.push_back({{"id", b.id}, {"p_load_mw", b.p_load_mw}, {"p_gen_mw", b.p_gen_mw}});
  }
  auto& branches = doc["branches"] = ordered_json::array();
  for (const Branch& br : grid.branches()) {
    branches.push_back({{"id", br.id},
                        {"from", br.from_bus},
                        {"to", br.to_bus},
                        {"x", br.reactance},
                        {"r", br.resistance},
                        {"b", br.charging},
                        {"tap", br.tap_ratio},
                        {"shift_deg", br.shift_deg},
                        {"status", br.in_service ? 1 : 0}});
  }
  return doc.dump(1);
}

GridCase load_case(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kData, "cannot open case file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  std::string name = path.stem().string();
  if (path.extension() == ".json") return parse_case_json(ss.str(), name);
  return parse_case(ss.str(), name);
}

// ---------------------------------------------------------------------------
// Topology

namespace {

EdgeList sorted_unique(EdgeList v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

// Adjacency over bus indices restricted to the given edges; entries are
// (neighbor index, branch id).
std::vector<std::vector<std::pair<std::size_t, BranchId>>> adjacency(const GridCase& grid,
                                                                      const EdgeList& edges) {
  std::vector<std::vector<std::pair<std::size_t, BranchId>>> adj(grid.buses().size());
  for (BranchId id : edges) {
    const Branch& br = grid.branch(id);
    std::size_t f = grid.bus_index(br.from_bus);
    std::size_t t = grid.bus_index(br.to_bus);
    adj[f].emplace_back(t, id);
    adj[t].emplace_back(f, id);
  }
  return adj;
}

}  // namespace

Topology::Topology(CasePtr grid, EdgeList active_edges, int label)
    : grid_(std::move(grid)), active_(sorted_unique(std::move(active_edges))), label_(label) {
  if (!grid_) throw ModelError("topology without a case");
  for (BranchId id : active_) {
    if (!grid_->has_branch(id)) {
      throw ModelError("topology references unknown branch " + std::to_string(id));
    }
  }
}

Topology Topology::baseline(CasePtr grid) {
  EdgeList e = grid->in_service_branches();
  return Topology(std::move(grid), std::move(e), 0);
}

bool Topology::contains(BranchId id) const {
  return std::binary_search(active_.begin(), active_.end(), id);
}

Topology Topology::without(std::span<const BranchId> removed, int label) const {
  EdgeList r = sorted_unique(EdgeList(removed.begin(), removed.end()));
  EdgeList out;
  std::set_difference(active_.begin(), active_.end(), r.begin(), r.end(), std::back_inserter(out));
  return Topology(grid_, std::move(out), label);
}

Topology Topology::with(std::span<const BranchId> added, int label) const {
  EdgeList out = active_;
  out.insert(out.end(), added.begin(), added.end());
  return Topology(grid_, std::move(out), label);
}

Topology Topology::union_with(const Topology& other) const {
  if (grid_ != other.grid_) throw ModelError("topologies belong to different cases");
  EdgeList out;
  std::set_union(active_.begin(), active_.end(), other.active_.begin(), other.active_.end(),
                 std::back_inserter(out));
  return Topology(grid_, std::move(out), label_);
}

std::vector<std::vector<BusId>> Topology::components() const {
  const auto& buses = grid_->buses();
  auto adj = adjacency(*grid_, active_);
  std::vector<int> comp(buses.size(), -1);
  std::vector<std::vector<BusId>> out;
  std::vector<std::size_t> stack;
  for (std::size_t s = 0; s < buses.size(); ++s) {
    if (comp[s] >= 0 || adj[s].empty()) continue;
    int c = static_cast<int>(out.size());
    out.emplace_back();
    comp[s] = c;
    stack.push_back(s);
    while (!stack.empty()) {
      std::size_t u = stack.back();
      stack.pop_back();
      out[c].push_back(buses[u].id);
      for (auto [v, id] : adj[u]) {
        if (comp[v] < 0) {
          comp[v] = c;
          stack.push_back(v);
        }
      }
    }
  }
  for (auto& c : out) std::sort(c.begin(), c.end());
  std::stable_sort(out.begin(), out.end(),
                   [](const auto& a, const auto& b) { return a.size() > b.size(); });
  return out;
}

void Topology::check_connected() const {
  auto comps = components();
  bool slack_attached = false;
  for (const auto& c : comps) {
    if (std::binary_search(c.begin(), c.end(), grid_->slack_bus())) slack_attached = true;
  }
  if (comps.size() > 1 || !slack_attached) {
    std::ostringstream msg;
    msg << "topology " << label_ << " is islanded into " << comps.size() << " component(s)";
    if (!slack_attached) msg << ", slack bus " << grid_->slack_bus() << " has no active branch";
    msg << ":";
    for (const auto& c : comps) {
      msg << " {";
      for (std::size_t i = 0; i < c.size() && i < 8; ++i) msg << (i ? "," : "") << c[i];
      if (c.size() > 8) msg << ",... " << c.size() << " buses";
      msg << "}";
    }
    throw IslandingError(msg.str(), std::move(comps));
  }
}

EdgeList Topology::bridges() const {
  // Iterative Tarjan lowlink over edge ids so parallel branches are handled.
  const std::size_t n = grid_->buses().size();
  auto adj = adjacency(*grid_, active_);
  std::vector<int> disc(n, -1), low(n, 0);
  EdgeList out;
  int timer = 0;
  struct Frame {
    std::size_t node;
    BranchId via;
    std::size_t next;
  };
  std::vector<Frame> stack;
  for (std::size_t root = 0; root < n; ++root) {
    if (disc[root] >= 0 || adj[root].empty()) continue;
    disc[root] = low[root] = timer++;
    stack.push_back({root, -1, 0});
    while (!stack.empty()) {
      Frame& f = stack.back();
      if (f.next < adj[f.node].size()) {
        auto [v, id] = adj[f.node][f.next++];
        if (id == f.via) continue;
        if (disc[v] < 0) {
          disc[v] = low[v] = timer++;
          stack.push_back({v, id, 0});
        } else {
          low[f.node] = std::min(low[f.node], disc[v]);
        }
      } else {
        Frame done = f;
        stack.pop_back();
        if (!stack.empty()) {
          std::size_t parent = stack.back().node;
          low[parent] = std::min(low[parent], low[done.node]);
          if (low[done.node] > disc[parent]) out.push_back(done.via);
        }
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

EdgeList symmetric_difference(const Topology& a, const Topology& b) {
  if (a.grid() != b.grid()) throw ModelError("topologies belong to different cases");
  EdgeList out;
  std::set_symmetric_difference(a.active_edges().begin(), a.active_edges().end(),
                                b.active_edges().begin(), b.active_edges().end(),
                                std::back_inserter(out));
  return out;
}

// ---------------------------------------------------------------------------
// Sensors

bool SensorSet::observes(BranchId id) const {
  return std::binary_search(observed_edges.begin(), observed_edges.end(), id);
}

EdgeList SensorSet::active_observed(const Topology& topology) const {
  return intersect(observed_edges, topology.active_edges());
}

SensorSet observed_edges(const GridCase& grid, std::span<const BusId> sensor_buses) {
  SensorSet s;
  s.buses.assign(sensor_buses.begin(), sensor_buses.end());
  std::sort(s.buses.begin(), s.buses.end());
  s.buses.erase(std::unique(s.buses.begin(), s.buses.end()), s.buses.end());
  for (BusId b : s.buses) {
    if (!grid.has_bus(b)) throw ModelError("sensor on unknown bus " + std::to_string(b));
  }
  for (const Branch& br : grid.branches()) {
    if (std::binary_search(s.buses.begin(), s.buses.end(), br.from_bus) ||
        std::binary_search(s.buses.begin(), s.buses.end(), br.to_bus)) {
      s.observed_edges.push_back(br.id);
    }
  }
  std::sort(s.observed_edges.begin(), s.observed_edges.end());
  return s;
}

EdgeList intersect(const EdgeList& a, const EdgeList& b) {
  EdgeList out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

std::vector<std::size_t> positions_in(const EdgeList& superset, const EdgeList& subset) {
  std::vector<std::size_t> pos;
  pos.reserve(subset.size());
  for (BranchId id : subset) {
    auto it = std::lower_bound(superset.begin(), superset.end(), id);
    if (it == superset.end() || *it != id) {
      throw ModelError("branch " + std::to_string(id) + " is not in the reference edge set");
    }
    pos.push_back(static_cast<std::size_t>(it - superset.begin()));
  }
  return pos;
}

}  // namespace gridcal
