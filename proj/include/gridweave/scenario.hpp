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

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gridweave/canonical_json.hpp"
#include "gridweave/common.hpp"

namespace gridweave {

enum class ComponentKind { DiscreteEvent, Continuous };
enum class PortDirection { In, Out };
enum class SgamLayer { Component, Communication, Information, Function, Business };

std::string_view to_string(ComponentKind kind);
std::string_view to_string(PortDirection direction);
std::string_view to_string(SgamLayer layer);
std::optional<ComponentKind> parse_component_kind(std::string_view text);
std::optional<PortDirection> parse_port_direction(std::string_view text);
std::optional<SgamLayer> parse_sgam_layer(std::string_view text);

struct LabDecl {
  std::string id;
  std::string endpoint;  // host:port of the lab coordinator
  std::string description;

  bool operator==(const LabDecl&) const = default;
};

struct Endpoint {
  std::string host;
  std::uint16_t port = 0;
};

/// Splits "host:port"; nullopt unless the port is an integer in [1, 65535].
std::optional<Endpoint> parse_endpoint(std::string_view text);

struct PortDecl {
  std::string name;
  PortDirection direction = PortDirection::In;
  std::string quantity;
  std::string unit;

  bool operator==(const PortDecl&) const = default;
};

struct ModelRef {
  std::string name;
  Json params = Json::object();

  bool operator==(const ModelRef&) const = default;
};

struct ComponentDecl {
  std::string id;
  std::string lab;
  ComponentKind kind = ComponentKind::DiscreteEvent;
  std::optional<TimeUs> step_us;
  ModelRef model;
  std::vector<PortDecl> ports;
  std::string protocol = "smb-json";
  SgamLayer sgam_layer = SgamLayer::Component;

  const PortDecl* find_port(std::string_view name) const;
  bool operator==(const ComponentDecl&) const = default;
};

struct PortRef {
  std::string component;
  std::string port;

  auto operator<=>(const PortRef&) const = default;
};

struct ChannelModel {
  TimeUs latency_us = 0;
  TimeUs jitter_us = 0;
  double loss_prob = 0.0;
  std::uint64_t bandwidth_Bps = 0;  // 0 = unlimited
  bool reorder_allowed = false;
  std::uint64_t seed = 0;

  bool operator==(const ChannelModel&) const = default;
};

struct LinkDecl {
  PortRef from;
  PortRef to;
  ChannelModel channel;

  bool operator==(const LinkDecl&) const = default;
};

struct RunConfig {
  TimeUs duration_us = 0;
  std::uint64_t seed = 0;
  std::optional<double> rt_factor;
  std::string experiment_id;

  bool operator==(const RunConfig&) const = default;
};

struct ScenarioModel {
  std::string id;
  std::vector<LabDecl> labs;
  std::vector<ComponentDecl> components;
  std::vector<LinkDecl> links;
  RunConfig run;

  const LabDecl* find_lab(std::string_view id) const;
  const ComponentDecl* find_component(std::string_view id) const;
  bool operator==(const ScenarioModel&) const = default;
};

/// Malformed JSON. `line` and `column` are 1-based.
class SyntaxError : public Error {
 public:
  SyntaxError(std::size_t line, std::size_t column, const std::string& detail);
  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

/// Missing, mistyped or unknown field. `path()` is e.g. "components[0].lab".
class SchemaError : public Error {
 public:
  SchemaError(std::string path, const std::string& detail);
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

/// Parses a scenario document (strict: unknown keys are rejected) and applies
/// defaults. Dangling lab references are reported as SchemaError; all other
/// cross-reference rules are left to validate().
ScenarioModel parse_scenario(std::string_view text);

/// Inverse of parse_scenario; every field is written explicitly.
Json scenario_to_json(const ScenarioModel& model);
std::string serialize_scenario(const ScenarioModel& model);

struct Violation {
  std::string code;  // DuplicateId, UnknownLab, UnknownPort, ...
  std::string path;
  std::string detail;

  bool operator==(const Violation&) const = default;
};

/// Checks every model invariant. Empty result iff the model is valid.
std::vector<Violation> validate(const ScenarioModel& model);

/// Components tagged `layer` plus the links whose endpoints both survive.
ScenarioModel layer_view(const ScenarioModel& model, SgamLayer layer);

}  // namespace gridweave
