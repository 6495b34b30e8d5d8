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

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gridweave/common.hpp"

namespace gridweave {

enum class TraceKind { Step, Deliver, Stop };

std::string_view to_string(TraceKind kind);

struct TraceRecord {
  TimeUs t_us = 0;
  TraceKind kind = TraceKind::Step;
  std::string component;
  std::optional<std::string> port;
  std::optional<double> value;
  std::optional<std::int64_t> route_id;
  std::optional<std::int64_t> seq;
  std::optional<std::string> reason;

  bool operator==(const TraceRecord&) const = default;
};

/// One JSON Lines record, keys in the fixed order
/// t_us, kind, component, port, value, route_id, seq, reason.
std::string to_jsonl(const TraceRecord& record);

/// Throws Error("CorruptTrace") on malformed lines.
TraceRecord parse_trace_line(std::string_view line);

struct Trace {
  std::vector<TraceRecord> records;
  bool aborted = false;
  std::string failure;  // what aborted the run, empty when completed

  std::string to_jsonl() const;
};

/// Reads a whole JSON Lines trace; blank lines are skipped.
std::vector<TraceRecord> parse_trace(std::string_view text);

}  // namespace gridweave
