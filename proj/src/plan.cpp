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

#include "gridweave/plan.hpp"

#include <algorithm>

#include "gridweave/units.hpp"

namespace gridweave {

std::string_view to_string(AdapterKind kind) {
  switch (kind) {
    case AdapterKind::Identity: return "Identity";
    case AdapterKind::UnitScale: return "UnitScale";
    case AdapterKind::KeyRename: return "KeyRename";
  }
  return "Identity";
}

AdapterRegistry AdapterRegistry::with_defaults() {
  AdapterRegistry registry;
  std::map<std::string, std::string> to_iec{
      {"active-power", "MMXU.TotW"},
      {"reactive-power", "MMXU.TotVAr"},
      {"voltage-magnitude", "MMXU.PhV"},
  };
  std::map<std::string, std::string> from_iec;
  for (const auto& [a, b] : to_iec) from_iec.emplace(b, a);
  registry.add("smb-json", "iec61850-toy", std::move(to_iec));
  registry.add("iec61850-toy", "smb-json", std::move(from_iec));
  return registry;
}

void AdapterRegistry::add(std::string from_protocol, std::string to_protocol,
                          std::map<std::string, std::string> rename) {
  mappings_[{std::move(from_protocol), std::move(to_protocol)}] = std::move(rename);
}

const std::map<std::string, std::string>* AdapterRegistry::find(const std::string& from_protocol,
                                                                const std::string& to_protocol) const {
  auto it = mappings_.find({from_protocol, to_protocol});
  return it == mappings_.end() ? nullptr : &it->second;
}

AdapterSpec select_adapter(const std::string& from_protocol, const std::string& from_unit,
                           const std::string& to_protocol, const std::string& to_unit,
                           const AdapterRegistry& registry) {
  const bool same_protocol = from_protocol == to_protocol;
  const bool same_unit = from_unit == to_unit;
  if (same_protocol && same_unit) {
    return {};
  }
  if (same_protocol) {
    auto factor = unit_factor(from_unit, to_unit);
    if (!factor) {
      throw CompileError("NoAdapter", "NoAdapter: no unit conversion " + from_unit + " -> " + to_unit);
    }
    AdapterSpec spec;
    spec.kind = AdapterKind::UnitScale;
    spec.factor = *factor;
    spec.from_unit = from_unit;
    spec.to_unit = to_unit;
    return spec;
  }
  // Renames and unit scaling do not compose.
  const auto* rename = registry.find(from_protocol, to_protocol);
  if (rename == nullptr || !same_unit) {
    throw CompileError("NoAdapter", "NoAdapter: cannot bridge " + from_protocol + "/" + from_unit + " -> " +
                                        to_protocol + "/" + to_unit);
  }
  AdapterSpec spec;
  spec.kind = AdapterKind::KeyRename;
  spec.rename = *rename;
  return spec;
}

std::string assign_master(const ScenarioModel& model) {
  auto it = std::min_element(model.labs.begin(), model.labs.end(),
                             [](const LabDecl& a, const LabDecl& b) { return a.id < b.id; });
  return it == model.labs.end() ? std::string{} : it->id;
}

CompiledScenario compile(const ScenarioModel& model, const AdapterRegistry& registry) {
  CompiledScenario out;
  out.topology.master = assign_master(model);
  out.topology.experiment_id = model.run.experiment_id;

  std::vector<const LabDecl*> labs;
  for (const auto& lab : model.labs) labs.push_back(&lab);
  std::sort(labs.begin(), labs.end(), [](const LabDecl* a, const LabDecl* b) { return a->id < b->id; });
  for (const auto* lab : labs) {
    out.topology.members.emplace_back(lab->id, lab->endpoint);
    ExecutionPlan plan;
    plan.lab = lab->id;
    plan.master = lab->id == out.topology.master;
    out.plans.emplace(lab->id, std::move(plan));
  }

  for (const auto& c : model.components) {
    out.plans.at(c.lab).launches.push_back({c.id, c.model.name, c.model.params, c.kind, c.step_us});
  }

  for (std::size_t i = 0; i < model.links.size(); ++i) {
    const auto& link = model.links[i];
    const auto* from_c = model.find_component(link.from.component);
    const auto* to_c = model.find_component(link.to.component);
    if (from_c == nullptr || to_c == nullptr) {
      throw CompileError("UnknownPort", "link " + std::to_string(i) + " references an undeclared component");
    }
    const auto* from_p = from_c->find_port(link.from.port);
    const auto* to_p = to_c->find_port(link.to.port);
    if (from_p == nullptr || to_p == nullptr) {
      throw CompileError("UnknownPort", "link " + std::to_string(i) + " references an undeclared port");
    }

    Route route;
    route.route_id = static_cast<std::int64_t>(i);
    route.from = link.from;
    route.to = link.to;
    route.channel = link.channel;
    if (from_c->protocol != to_c->protocol || from_p->unit != to_p->unit) {
      route.adapter = select_adapter(from_c->protocol, from_p->unit, to_c->protocol, to_p->unit, registry);
    }

    if (from_c->lab == to_c->lab) {
      out.plans.at(from_c->lab).local_routes.push_back(std::move(route));
    } else {
      out.plans.at(from_c->lab).egress_routes.push_back(route);
      out.plans.at(to_c->lab).ingress_routes.push_back(std::move(route));
    }
  }
  return out;
}

namespace {

Json port_ref_json(const PortRef& ref) { return {{"component", ref.component}, {"port", ref.port}}; }

Json route_json(const Route& route) {
  const auto& ch = route.channel;
  Json j = Json::object();
  j["route_id"] = route.route_id;
  j["from"] = port_ref_json(route.from);
  j["to"] = port_ref_json(route.to);
  j["channel"] = {{"latency_us", ch.latency_us},     {"jitter_us", ch.jitter_us},
                  {"loss_prob", ch.loss_prob},       {"bandwidth_Bps", ch.bandwidth_Bps},
                  {"reorder_allowed", ch.reorder_allowed}, {"seed", ch.seed}};
  if (route.adapter) {
    const auto& a = *route.adapter;
    Json adapter = Json::object();
    adapter["kind"] = std::string(to_string(a.kind));
    if (a.kind == AdapterKind::UnitScale) {
      adapter["factor"] = a.factor;
      adapter["from_unit"] = a.from_unit;
      adapter["to_unit"] = a.to_unit;
    }
    if (a.kind == AdapterKind::KeyRename) {
      adapter["rename"] = Json::object();
      for (const auto& [k, v] : a.rename) adapter["rename"][k] = v;
    }
    j["adapter"] = std::move(adapter);
  } else {
    j["adapter"] = nullptr;
  }
  return j;
}

Route route_from_json(const Json& j) {
  Route route;
  route.route_id = j.at("route_id").get<std::int64_t>();
  route.from = {j.at("from").at("component").get<std::string>(), j.at("from").at("port").get<std::string>()};
  route.to = {j.at("to").at("component").get<std::string>(), j.at("to").at("port").get<std::string>()};
  const auto& ch = j.at("channel");
  route.channel.latency_us = ch.at("latency_us").get<TimeUs>();
  route.channel.jitter_us = ch.at("jitter_us").get<TimeUs>();
  route.channel.loss_prob = ch.at("loss_prob").get<double>();
  route.channel.bandwidth_Bps = ch.at("bandwidth_Bps").get<std::uint64_t>();
  route.channel.reorder_allowed = ch.at("reorder_allowed").get<bool>();
  route.channel.seed = ch.at("seed").get<std::uint64_t>();
  const auto& a = j.at("adapter");
  if (!a.is_null()) {
    AdapterSpec spec;
    auto kind = a.at("kind").get<std::string>();
    if (kind == "UnitScale") {
      spec.kind = AdapterKind::UnitScale;
      spec.factor = a.at("factor").get<double>();
      spec.from_unit = a.at("from_unit").get<std::string>();
      spec.to_unit = a.at("to_unit").get<std::string>();
    } else if (kind == "KeyRename") {
      spec.kind = AdapterKind::KeyRename;
      for (const auto& [k, v] : a.at("rename").items()) spec.rename[k] = v.get<std::string>();
    }
    route.adapter = std::move(spec);
  }
  return route;
}

}  // namespace

Json plan_to_json(const ExecutionPlan& plan) {
  Json j = Json::object();
  j["lab"] = plan.lab;
  j["master"] = plan.master;
  j["launches"] = Json::array();
  for (const auto& l : plan.launches) {
    Json jl = Json::object();
    jl["component"] = l.component;
    jl["model"] = l.model;
    jl["params"] = l.params;
    jl["kind"] = std::string(to_string(l.kind));
    jl["step_us"] = l.step_us ? Json(*l.step_us) : Json(nullptr);
    j["launches"].push_back(std::move(jl));
  }
  for (const auto* key : {"local_routes", "egress_routes", "ingress_routes"}) {
    j[key] = Json::array();
  }
  for (const auto& r : plan.local_routes) j["local_routes"].push_back(route_json(r));
  for (const auto& r : plan.egress_routes) j["egress_routes"].push_back(route_json(r));
  for (const auto& r : plan.ingress_routes) j["ingress_routes"].push_back(route_json(r));
  return j;
}

ExecutionPlan plan_from_json(const Json& j) {
  ExecutionPlan plan;
  plan.lab = j.at("lab").get<std::string>();
  plan.master = j.at("master").get<bool>();
  for (const auto& jl : j.at("launches")) {
    Launch l;
    l.component = jl.at("component").get<std::string>();
    l.model = jl.at("model").get<std::string>();
    l.params = jl.at("params");
    auto kind = parse_component_kind(jl.at("kind").get<std::string>());
    if (!kind) throw Error("BadPlan", "unknown component kind in plan");
    l.kind = *kind;
    if (!jl.at("step_us").is_null()) l.step_us = jl.at("step_us").get<TimeUs>();
    plan.launches.push_back(std::move(l));
  }
  for (const auto& r : j.at("local_routes")) plan.local_routes.push_back(route_from_json(r));
  for (const auto& r : j.at("egress_routes")) plan.egress_routes.push_back(route_from_json(r));
  for (const auto& r : j.at("ingress_routes")) plan.ingress_routes.push_back(route_from_json(r));
  return plan;
}

}  // namespace gridweave
