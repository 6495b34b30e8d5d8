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

#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gridweave/canonical_json.hpp"
#include "gridweave/common.hpp"

namespace gridweave {

struct Line {
  int from = 0;
  int to = 0;
  double r_ohm = 0.0;
  double x_ohm = 0.0;
};

/// Radial single-phase-equivalent feeder. buses.front() is the slack bus.
struct GridModel {
  std::vector<int> buses;
  std::vector<Line> lines;
  double v_slack = 230.0;  // phase-neutral volts
  double base_kv = 0.23;   // phase-neutral base for pu reporting
  double base_kva = 100.0;
};

/// Consumption-positive load at a bus (generation is negative).
struct Injection {
  int bus = 0;
  double p_w = 0.0;
  double q_var = 0.0;
};

struct BusVoltage {
  double volts = 0.0;
  double pu = 0.0;
};

struct PowerFlowResult {
  std::map<int, BusVoltage> voltages;
  int iterations = 0;
};

inline constexpr double kPowerFlowToleranceVolts = 1e-8;
inline constexpr int kPowerFlowMaxIterations = 100;

/// Backward-forward sweep. Throws Error("BadGrid") when the lines are not a
/// spanning tree rooted at the slack (or an injection targets the slack or an
/// unknown bus), Error("Diverged") when 100 sweeps do not settle below 1e-8 V.
PowerFlowResult bfs_powerflow(const GridModel& grid, const std::vector<Injection>& injections);

GridModel grid_from_json(const Json& value);

struct VoltVarPoint {
  double v_pu = 0.0;
  double q_var = 0.0;
};

struct PvParams {
  double p_peak = 0.0;   // W at 1000 W/m2
  double p_rated = 0.0;  // inverter limit, W
  std::vector<VoltVarPoint> voltvar;
};

/// min(p_peak * g / 1000, p_rated), as a positive generation magnitude.
double pv_power(double irradiance, const PvParams& params);

/// Piecewise-linear curve lookup, clamped at both ends; 0 for an empty curve.
double volt_var(double v_pu, const std::vector<VoltVarPoint>& curve);

enum class ProfileMode { Step, Hold };

struct ProfilePoint {
  TimeUs t_us = 0;
  double p = 0.0;
  double q = 0.0;
};

struct LoadProfile {
  std::vector<ProfilePoint> points;  // strictly increasing t_us
  ProfileMode mode = ProfileMode::Step;
};

struct ProfileSample {
  double p = 0.0;
  double q = 0.0;
  std::optional<TimeUs> next;  // nullopt = Done

  bool operator==(const ProfileSample&) const = default;
};

/// Step mode: the point scheduled exactly at `t_us` (Error("BadProfile")
/// otherwise). Hold mode: the latest point at or before `t_us` (zeros before
/// the first point). `next` is the first listed time after `t_us`.
ProfileSample profile_step(const LoadProfile& profile, TimeUs t_us);

/// CSV with header "t_us,P,Q".
LoadProfile load_profile_csv(std::string_view text, ProfileMode mode = ProfileMode::Step);
/// {"mode": "Step"|"Hold", "points": [[t_us, P, Q], ...]}; mode optional.
LoadProfile load_profile_json(const Json& value);
/// Reads a .csv or .json fixture from disk.
LoadProfile load_profile_file(const std::string& path, ProfileMode mode = ProfileMode::Step);

}  // namespace gridweave
