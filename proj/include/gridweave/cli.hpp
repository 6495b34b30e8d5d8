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

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "gridweave/common.hpp"
#include "gridweave/federate.hpp"

namespace gridweave::cli {

/// Stable exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

struct RunReport {
  std::string experiment_id;
  bool completed = false;
  StopReason reason = StopReason::Completed;
  TimeUs final_t_us = 0;
  std::string trace_path;
  double wall_clock_s = 0.0;
};

std::string report_json(const RunReport& report);

struct RunOptions {
  std::string scenario_path;
  bool single_process = false;
  std::optional<std::string> lab;
  std::string out = "trace.jsonl";
  std::optional<std::uint64_t> seed;
  std::optional<double> rt_factor;
  std::optional<std::string> bind;  // GRIDWEAVE_BIND value
};

struct ResultsOptions {
  std::string trace_path;
  std::optional<std::string> component;
  std::optional<std::string> port;
  std::optional<TimeUs> from_us;
  std::optional<TimeUs> to_us;
};

int cmd_validate(const std::string& scenario_path, std::ostream& out, std::ostream& err);
int cmd_plan(const std::string& scenario_path, std::ostream& out, std::ostream& err);
int cmd_run(const RunOptions& options, std::ostream& out, std::ostream& err);
int cmd_results(const ResultsOptions& options, std::ostream& out, std::ostream& err);

/// Parses `args` (without the program name) and dispatches. GRIDWEAVE_BIND
/// is read from the environment.
int main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace gridweave::cli
