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

#include <array>

#include "gridweave/federation.hpp"

namespace gridweave {

namespace {

constexpr std::array<std::string_view, 7> kFrameTypeNames{"HELLO", "PLAN", "TAR", "TAG", "MSG", "STOP", "ACK"};

Json time_or_inf(TimeUs t) { return t == kTimeInfinity ? Json("inf") : Json(t); }

[[noreturn]] void bad_frame(const std::string& what) { throw Error("BadFrame", "BadFrame: " + what); }

TimeUs parse_time_or_inf(const Json& v, const char* field) {
  if (v.is_string() && v.get<std::string>() == "inf") return kTimeInfinity;
  if (v.is_number_integer()) return v.get<TimeUs>();
  bad_frame(std::string(field) + " must be an integer or \"inf\"");
}

const Json& field(const Json& body, const char* key) {
  auto it = body.find(key);
  if (it == body.end()) bad_frame(std::string("missing body field ") + key);
  return *it;
}

std::string string_field(const Json& body, const char* key) {
  const Json& v = field(body, key);
  if (!v.is_string()) bad_frame(std::string(key) + " must be a string");
  return v.get<std::string>();
}

Json body_json(const FrameBody& body) {
  return std::visit(
      [](const auto& b) -> Json {
        using T = std::decay_t<decltype(b)>;
        if constexpr (std::is_same_v<T, HelloBody>) {
          return {{"lab_id", b.lab_id}, {"proto_version", b.proto_version}};
        } else if constexpr (std::is_same_v<T, PlanBody>) {
          return b.plan;
        } else if constexpr (std::is_same_v<T, TarBody>) {
          return {{"lab_id", b.lab_id},
                  {"local_min_us", time_or_inf(b.local_min_us)},
                  {"pending_min_us", time_or_inf(b.pending_min_us)}};
        } else if constexpr (std::is_same_v<T, TagBody>) {
          return {{"granted_until_us", b.granted_until_us}};
        } else if constexpr (std::is_same_v<T, MsgBody>) {
          return envelope_to_json(b.envelope);
        } else if constexpr (std::is_same_v<T, StopBody>) {
          return {{"reason", b.reason}};
        } else {
          return {{"of_type", std::string(to_string(b.of_type))}, {"of_seq", b.of_seq}};
        }
      },
      body);
}

FrameBody parse_body(FrameType type, const Json& body) {
  if (!body.is_object()) bad_frame("body must be an object");
  switch (type) {
    case FrameType::Hello: {
      const Json& version = field(body, "proto_version");
      if (!version.is_number_integer() || version.get<std::int64_t>() < 1) {
        bad_frame("proto_version must be a positive integer");
      }
      return HelloBody{string_field(body, "lab_id"), version.get<std::int64_t>()};
    }
    case FrameType::Plan:
      try {
        plan_from_json(body);
      } catch (const std::exception& e) {
        bad_frame(std::string("invalid plan: ") + e.what());
      }
      return PlanBody{body};
    case FrameType::Tar:
      return TarBody{string_field(body, "lab_id"), parse_time_or_inf(field(body, "local_min_us"), "local_min_us"),
                     parse_time_or_inf(field(body, "pending_min_us"), "pending_min_us")};
    case FrameType::Tag: {
      const Json& g = field(body, "granted_until_us");
      if (!g.is_number_integer()) bad_frame("granted_until_us must be an integer");
      return TagBody{g.get<TimeUs>()};
    }
    case FrameType::Msg:
      try {
        return MsgBody{envelope_from_json(body)};
      } catch (const Error& e) {
        bad_frame(e.what());
      }
    case FrameType::Stop:
      return StopBody{string_field(body, "reason")};
    case FrameType::Ack: {
      auto of = parse_frame_type(string_field(body, "of_type"));
      const Json& seq = field(body, "of_seq");
      if (!of || !seq.is_number_unsigned()) bad_frame("malformed ACK");
      return AckBody{*of, seq.get<std::uint64_t>()};
    }
  }
  bad_frame("unknown type");
}

}  // namespace

std::string_view to_string(FrameType type) { return kFrameTypeNames.at(static_cast<std::size_t>(type)); }

std::optional<FrameType> parse_frame_type(std::string_view text) {
  for (std::size_t i = 0; i < kFrameTypeNames.size(); ++i) {
    if (kFrameTypeNames[i] == text) return static_cast<FrameType>(i);
  }
  return std::nullopt;
}

std::string frame_json(const Frame& frame) {
  Json j = Json::object();
  j["type"] = std::string(to_string(frame.type()));
  j["experiment_id"] = frame.experiment_id;
  j["frame_seq"] = frame.frame_seq;
  j["body"] = body_json(frame.body);
  return canonical_dump(j);
}

std::vector<std::uint8_t> encode_frame(const Frame& frame) {
  const std::string json = frame_json(frame);
  if (json.size() > kMaxFrameBytes) {
    throw Error("FrameTooLarge", "FrameTooLarge: " + std::to_string(json.size()) + " bytes");
  }
  std::vector<std::uint8_t> out(4 + json.size());
  const auto n = static_cast<std::uint32_t>(json.size());
  out[0] = static_cast<std::uint8_t>(n >> 24);
  out[1] = static_cast<std::uint8_t>(n >> 16);
  out[2] = static_cast<std::uint8_t>(n >> 8);
  out[3] = static_cast<std::uint8_t>(n);
  std::copy(json.begin(), json.end(), out.begin() + 4);
  return out;
}

Frame decode_frame(std::span<const std::uint8_t> bytes, std::size_t* consumed) {
  if (bytes.size() < 4) throw Error("Truncated", "Truncated: stream ends inside the length prefix");
  const std::size_t n = (std::size_t{bytes[0]} << 24) | (std::size_t{bytes[1]} << 16) |
                        (std::size_t{bytes[2]} << 8) | std::size_t{bytes[3]};
  if (n == 0 || n > kMaxFrameBytes) throw Error("BadLength", "BadLength: prefix " + std::to_string(n));
  if (bytes.size() < 4 + n) throw Error("Truncated", "Truncated: stream ends inside the frame");
  if (consumed == nullptr && bytes.size() != 4 + n) {
    throw Error("BadLength", "BadLength: prefix " + std::to_string(n) + " but " +
                                 std::to_string(bytes.size() - 4) + " bytes follow");
  }
  if (consumed != nullptr) *consumed = 4 + n;

  const auto* begin = reinterpret_cast<const char*>(bytes.data() + 4);
  Json j;
  try {
    j = Json::parse(begin, begin + n);
  } catch (const Json::parse_error& e) {
    bad_frame(e.what());
  }
  if (!j.is_object()) bad_frame("frame must be an object");
  for (const auto& [key, value] : j.items()) {
    if (key != "type" && key != "experiment_id" && key != "frame_seq" && key != "body") {
      bad_frame("unknown key " + key);
    }
  }
  auto type = parse_frame_type(string_field(j, "type"));
  if (!type) bad_frame("unknown type " + j.at("type").get<std::string>());
  Frame frame;
  frame.experiment_id = string_field(j, "experiment_id");
  const Json& seq = field(j, "frame_seq");
  if (!seq.is_number_unsigned()) bad_frame("frame_seq must be a nonnegative integer");
  frame.frame_seq = seq.get<std::uint64_t>();
  frame.body = parse_body(*type, field(j, "body"));
  return frame;
}

}  // namespace gridweave
