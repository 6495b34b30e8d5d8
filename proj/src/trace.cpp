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

#include "gridweave/trace.hpp"

#include "gridweave/canonical_json.hpp"

namespace gridweave {

std::string_view to_string(TraceKind kind) {
  switch (kind) {
    case TraceKind::Step: return "step";
    case TraceKind::Deliver: return "deliver";
    case TraceKind::Stop: return "stop";
  }
  return "step";
}

std::string to_jsonl(const TraceRecord& r) {
  std::string out;
  out.reserve(128);
  out += "{\"t_us\":";
  out += std::to_string(r.t_us);
  out += ",\"kind\":\"";
  out += to_string(r.kind);
  out += "\",\"component\":";
  append_string(out, r.component);
  out += ",\"port\":";
  if (r.port) append_string(out, *r.port); else out += "null";
  out += ",\"value\":";
  if (r.value) append_real(out, *r.value); else out += "null";
  out += ",\"route_id\":";
  out += r.route_id ? std::to_string(*r.route_id) : "null";
  out += ",\"seq\":";
  out += r.seq ? std::to_string(*r.seq) : "null";
  out += ",\"reason\":";
  if (r.reason) append_string(out, *r.reason); else out += "null";
  out += '}';
  return out;
}

TraceRecord parse_trace_line(std::string_view line) {
  try {
    auto j = Json::parse(line.begin(), line.end());
    TraceRecord r;
    r.t_us = j.at("t_us").get<TimeUs>();
    auto kind = j.at("kind").get<std::string>();
    if (kind == "step") {
      r.kind = TraceKind::Step;
    } else if (kind == "deliver") {
      r.kind = TraceKind::Deliver;
    } else if (kind == "stop") {
      r.kind = TraceKind::Stop;
    } else {
      throw Error("CorruptTrace", "unknown record kind '" + kind + "'");
    }
    r.component = j.at("component").get<std::string>();
    if (const auto& v = j.at("port"); !v.is_null()) r.port = v.get<std::string>();
    if (const auto& v = j.at("value"); !v.is_null()) r.value = v.get<double>();
    if (const auto& v = j.at("route_id"); !v.is_null()) r.route_id = v.get<std::int64_t>();
    if (const auto& v = j.at("seq"); !v.is_null()) r.seq = v.get<std::int64_t>();
    if (const auto& v = j.at("reason"); !v.is_null()) r.reason = v.get<std::string>();
    return r;
  } catch (const Json::exception& e) {
    throw Error("CorruptTrace", e.what());
  }
}

std::string Trace::to_jsonl() const {
  std::string out;
  out.reserve(records.size() * 96);
  for (const auto& r : records) {
    out += gridweave::to_jsonl(r);
    out += '\n';
  }
  return out;
}

std::vector<TraceRecord> parse_trace(std::string_view text) {
  std::vector<TraceRecord> records;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(start, end - start);
    if (line.find_first_not_of(" \t\r") != std::string_view::npos) records.push_back(parse_trace_line(line));
    start = end + 1;
  }
  return records;
}

}  // namespace gridweave
