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
#include <utility>
#include <vector>

#include "gridweave/scenario.hpp"

namespace gridweave {

enum class AdapterKind { Identity, UnitScale, KeyRename };

std::string_view to_string(AdapterKind kind);

/// Translation applied to a value on its way from one port to another.
struct AdapterSpec {
  AdapterKind kind = AdapterKind::Identity;
  double factor = 1.0;                          // UnitScale
  std::string from_unit;                        // UnitScale source unit
  std::string to_unit;                          // UnitScale destination unit
  std::map<std::string, std::string> rename;    // KeyRename: quantity -> quantity

  bool operator==(const AdapterSpec&) const = default;
};

/// Registered quantity-rename mappings between protocol tags. The default
/// registry knows smb-json <-> iec61850-toy.
class AdapterRegistry {
 public:
  static AdapterRegistry with_defaults();

  void add(std::string from_protocol, std::string to_protocol, std::map<std::string, std::string> rename);
  const std::map<std::string, std::string>* find(const std::string& from_protocol,
                                                 const std::string& to_protocol) const;

 private:
  std::map<std::pair<std::string, std::string>, std::map<std::string, std::string>> mappings_;
};

struct Route {
  std::int64_t route_id = 0;
  PortRef from;
  PortRef to;
  ChannelModel channel;
  std::optional<AdapterSpec> adapter;  // absent when both ends speak the same protocol and unit

  bool operator==(const Route&) const = default;
};

struct Launch {
  std::string component;
  std::string model;
  Json params = Json::object();
  ComponentKind kind = ComponentKind::DiscreteEvent;
  std::optional<TimeUs> step_us;

  bool operator==(const Launch&) const = default;
};

struct ExecutionPlan {
  std::string lab;
  std::vector<Launch> launches;
  std::vector<Route> local_routes;
  std::vector<Route> egress_routes;
  std::vector<Route> ingress_routes;
  bool master = false;

  bool operator==(const ExecutionPlan&) const = default;
};

struct FederationTopology {
  std::string master;
  std::vector<std::pair<std::string, std::string>> members;  // (lab id, endpoint)
  std::string experiment_id;

  bool operator==(const FederationTopology&) const = default;
};

struct CompiledScenario {
  std::map<std::string, ExecutionPlan> plans;  // keyed by lab id
  FederationTopology topology;
};

/// Raised by compile(); `code()` is the wrapped cause ("NoAdapter").
class CompileError : public Error {
 public:
  using Error::Error;
};

/// Protocol/unit bridge between two ports. Throws CompileError("NoAdapter").
AdapterSpec select_adapter(const std::string& from_protocol, const std::string& from_unit,
                           const std::string& to_protocol, const std::string& to_unit,
                           const AdapterRegistry& registry = AdapterRegistry::with_defaults());

/// Lexicographically smallest lab id (byte order).
std::string assign_master(const ScenarioModel& model);

/// Splits a validated model into one plan per lab. Route ids follow link
/// declaration order.
CompiledScenario compile(const ScenarioModel& model,
                         const AdapterRegistry& registry = AdapterRegistry::with_defaults());

Json plan_to_json(const ExecutionPlan& plan);
ExecutionPlan plan_from_json(const Json& value);

}  // namespace gridweave
