/*
 * Copyright 2026 The Gridweave Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "gridweave/components.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <set>
#include <sstream>

namespace gridweave {

namespace {

using Complex = std::complex<double>;

// Parent-before-child ordering of a radial grid.
struct Tree {
  std::vector<int> order;                // bus ids, slack first
  std::map<int, int> parent;             // bus -> parent bus
  std::map<int, Complex> impedance;      // bus -> impedance of the line to its parent
};

Tree build_tree(const GridModel& grid) {
  if (grid.buses.empty()) throw Error("BadGrid", "grid has no buses");
  std::set<int> ids(grid.buses.begin(), grid.buses.end());
  if (ids.size() != grid.buses.size()) throw Error("BadGrid", "duplicate bus id");
  if (grid.lines.size() + 1 != grid.buses.size()) {
    throw Error("BadGrid", "a radial grid with n buses needs n-1 lines");
  }
  std::map<int, std::vector<std::pair<int, Complex>>> adjacency;
  for (const auto& line : grid.lines) {
    if (!ids.contains(line.from) || !ids.contains(line.to) || line.from == line.to) {
      throw Error("BadGrid", "line references unknown bus or is a self loop");
    }
    if (line.r_ohm < 0 || line.x_ohm < 0 || (line.r_ohm == 0 && line.x_ohm == 0)) {
      throw Error("BadGrid", "line impedance must be nonnegative and nonzero");
    }
    Complex z(line.r_ohm, line.x_ohm);
    adjacency[line.from].emplace_back(line.to, z);
    adjacency[line.to].emplace_back(line.from, z);
  }
  Tree tree;
  const int slack = grid.buses.front();
  tree.order.push_back(slack);
  std::set<int> seen{slack};
  for (std::size_t i = 0; i < tree.order.size(); ++i) {
    int bus = tree.order[i];
    for (const auto& [next, z] : adjacency[bus]) {
      if (seen.insert(next).second) {
        tree.parent[next] = bus;
        tree.impedance[next] = z;
        tree.order.push_back(next);
      }
    }
  }
  if (tree.order.size() != grid.buses.size()) throw Error("BadGrid", "lines do not connect every bus");
  return tree;
}

}  // namespace

PowerFlowResult bfs_powerflow(const GridModel& grid, const std::vector<Injection>& injections) {
  if (!(grid.v_slack > 0) || !(grid.base_kv > 0)) throw Error("BadGrid", "v_slack and base_kv must be > 0");
  Tree tree = build_tree(grid);
  const int slack = tree.order.front();

  std::map<int, Complex> load;  // consumption-positive complex power per bus
  for (const auto& inj : injections) {
    if (inj.bus == slack || !tree.parent.contains(inj.bus)) {
      throw Error("BadGrid", "injection at bus " + std::to_string(inj.bus) + " is the slack or unknown");
    }
    load[inj.bus] += Complex(inj.p_w, inj.q_var);
  }

  std::map<int, Complex> voltage;
  for (int bus : tree.order) voltage[bus] = Complex(grid.v_slack, 0.0);

  for (int iteration = 1; iteration <= kPowerFlowMaxIterations; ++iteration) {
    // Backward: branch currents from the leaves towards the slack.
    std::map<int, Complex> branch;
    for (auto it = tree.order.rbegin(); it != tree.order.rend(); ++it) {
      int bus = *it;
      if (bus == slack) break;
      Complex current = branch[bus];
      if (auto s = load.find(bus); s != load.end()) current += std::conj(s->second / voltage[bus]);
      branch[bus] = current;
      branch[tree.parent[bus]] += current;
    }
    // Forward: voltage drops from the slack outwards.
    double max_delta = 0.0;
    bool finite = true;
    for (std::size_t i = 1; i < tree.order.size(); ++i) {
      int bus = tree.order[i];
      Complex updated = voltage[tree.parent[bus]] - tree.impedance[bus] * branch[bus];
      max_delta = std::max(max_delta, std::abs(updated - voltage[bus]));
      finite = finite && std::isfinite(updated.real()) && std::isfinite(updated.imag());
      voltage[bus] = updated;
    }
    if (!finite) break;
    if (max_delta < kPowerFlowToleranceVolts) {
      PowerFlowResult result;
      result.iterations = iteration;
      const double base_volts = grid.base_kv * 1000.0;
      for (int bus : tree.order) {
        double magnitude = std::abs(voltage[bus]);
        result.voltages[bus] = {magnitude, magnitude / base_volts};
      }
      return result;
    }
  }
  throw Error("Diverged", "backward-forward sweep did not converge in " +
                              std::to_string(kPowerFlowMaxIterations) + " iterations");
}

GridModel grid_from_json(const Json& j) {
  try {
    GridModel grid;
    grid.buses = j.at("buses").get<std::vector<int>>();
    for (const auto& line : j.at("lines")) {
      grid.lines.push_back({line.at("from").get<int>(), line.at("to").get<int>(), line.at("r").get<double>(),
                            line.at("x").get<double>()});
    }
    grid.v_slack = j.at("v_slack").get<double>();
    grid.base_kv = j.contains("base_kv") ? j.at("base_kv").get<double>() : grid.v_slack / 1000.0;
    grid.base_kva = j.contains("base_kva") ? j.at("base_kva").get<double>() : 100.0;
    return grid;
  } catch (const Json::exception& e) {
    throw Error("BadGrid", e.what());
  }
}

double pv_power(double irradiance, const PvParams& params) {
  return std::min(params.p_peak * irradiance / 1000.0, params.p_rated);
}

double volt_var(double v_pu, const std::vector<VoltVarPoint>& curve) {
  if (curve.empty()) return 0.0;
  if (v_pu <= curve.front().v_pu) return curve.front().q_var;
  if (v_pu >= curve.back().v_pu) return curve.back().q_var;
  auto upper = std::upper_bound(curve.begin(), curve.end(), v_pu,
                                [](double v, const VoltVarPoint& p) { return v < p.v_pu; });
  const auto& hi = *upper;
  const auto& lo = *(upper - 1);
  if (v_pu == lo.v_pu) return lo.q_var;
  const double w = (v_pu - lo.v_pu) / (hi.v_pu - lo.v_pu);
  return lo.q_var + w * (hi.q_var - lo.q_var);
}

ProfileSample profile_step(const LoadProfile& profile, TimeUs t_us) {
  const auto& pts = profile.points;
  auto after = std::upper_bound(pts.begin(), pts.end(), t_us,
                                [](TimeUs t, const ProfilePoint& p) { return t < p.t_us; });
  ProfileSample sample;
  if (after != pts.end()) sample.next = after->t_us;
  if (after == pts.begin()) {
    if (profile.mode == ProfileMode::Step) {
      throw Error("BadProfile", "no profile event at t=" + std::to_string(t_us));
    }
    return sample;
  }
  const auto& current = *(after - 1);
  if (profile.mode == ProfileMode::Step && current.t_us != t_us) {
    throw Error("BadProfile", "no profile event at t=" + std::to_string(t_us));
  }
  sample.p = current.p;
  sample.q = current.q;
  return sample;
}

namespace {

void check_increasing(const LoadProfile& profile) {
  for (std::size_t i = 1; i < profile.points.size(); ++i) {
    if (profile.points[i].t_us <= profile.points[i - 1].t_us) {
      throw Error("BadProfile", "profile times must be strictly increasing");
    }
  }
}

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

LoadProfile load_profile_csv(std::string_view text, ProfileMode mode) {
  LoadProfile profile;
  profile.mode = mode;
  std::istringstream in{std::string(text)};
  std::string line;
  bool header = true;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto row = trim(line);
    if (row.empty()) continue;
    if (header) {
      if (row != "t_us,P,Q") throw Error("BadProfile", "expected CSV header t_us,P,Q");
      header = false;
      continue;
    }
    std::istringstream fields(row);
    std::string t, p, q;
    if (!std::getline(fields, t, ',') || !std::getline(fields, p, ',') || !std::getline(fields, q)) {
      throw Error("BadProfile", "line " + std::to_string(line_no) + ": expected three columns");
    }
    try {
      profile.points.push_back({std::stoll(t), std::stod(p), std::stod(q)});
    } catch (const std::exception&) {
      throw Error("BadProfile", "line " + std::to_string(line_no) + ": not a number");
    }
  }
  check_increasing(profile);
  return profile;
}

LoadProfile load_profile_json(const Json& j) {
  LoadProfile profile;
  try {
    if (j.contains("mode")) {
      auto mode = j.at("mode").get<std::string>();
      if (mode == "Hold") {
        profile.mode = ProfileMode::Hold;
      } else if (mode != "Step") {
        throw Error("BadProfile", "mode must be Step or Hold");
      }
    }
    for (const auto& p : j.at("points")) {
      if (p.is_array()) {
        profile.points.push_back({p.at(0).get<TimeUs>(), p.at(1).get<double>(), p.at(2).get<double>()});
      } else {
        profile.points.push_back({p.at("t_us").get<TimeUs>(), p.at("P").get<double>(), p.at("Q").get<double>()});
      }
    }
  } catch (const Json::exception& e) {
    throw Error("BadProfile", e.what());
  }
  check_increasing(profile);
  return profile;
}

LoadProfile load_profile_file(const std::string& path, ProfileMode mode) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("BadProfile", "cannot open " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  if (path.size() >= 4 && path.substr(path.size() - 4) == ".csv") {
    return load_profile_csv(buffer.str(), mode);
  }
  try {
    auto profile = load_profile_json(Json::parse(buffer.str()));
    return profile;
  } catch (const Json::parse_error& e) {
    throw Error("BadProfile", path + ": " + e.what());
  }
}

}  // namespace gridweave
