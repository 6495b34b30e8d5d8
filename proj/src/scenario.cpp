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

#include "gridweave/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <functional>
#include <map>
#include <set>

#include "gridweave/units.hpp"

namespace gridweave {

std::string_view to_string(ComponentKind kind) {
  return kind == ComponentKind::Continuous ? "Continuous" : "DiscreteEvent";
}

std::string_view to_string(PortDirection direction) {
  return direction == PortDirection::Out ? "Out" : "In";
}

std::string_view to_string(SgamLayer layer) {
  switch (layer) {
    case SgamLayer::Component: return "Component";
    case SgamLayer::Communication: return "Communication";
    case SgamLayer::Information: return "Information";
    case SgamLayer::Function: return "Function";
    case SgamLayer::Business: return "Business";
  }
  return "Component";
}

std::optional<ComponentKind> parse_component_kind(std::string_view text) {
  if (text == "DiscreteEvent") return ComponentKind::DiscreteEvent;
  if (text == "Continuous") return ComponentKind::Continuous;
  return std::nullopt;
}

std::optional<PortDirection> parse_port_direction(std::string_view text) {
  if (text == "In") return PortDirection::In;
  if (text == "Out") return PortDirection::Out;
  return std::nullopt;
}

std::optional<SgamLayer> parse_sgam_layer(std::string_view text) {
  for (auto layer : {SgamLayer::Component, SgamLayer::Communication, SgamLayer::Information,
                     SgamLayer::Function, SgamLayer::Business}) {
    if (to_string(layer) == text) return layer;
  }
  return std::nullopt;
}

std::optional<Endpoint> parse_endpoint(std::string_view text) {
  auto colon = text.rfind(':');
  if (colon == std::string_view::npos || colon == 0 || colon + 1 == text.size()) {
    return std::nullopt;
  }
  auto digits = text.substr(colon + 1);
  unsigned port = 0;
  auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), port);
  if (ec != std::errc{} || ptr != digits.data() + digits.size() || port < 1 || port > 65535) {
    return std::nullopt;
  }
  return Endpoint{std::string(text.substr(0, colon)), static_cast<std::uint16_t>(port)};
}

const PortDecl* ComponentDecl::find_port(std::string_view name) const {
  auto it = std::find_if(ports.begin(), ports.end(), [&](const PortDecl& p) { return p.name == name; });
  return it == ports.end() ? nullptr : &*it;
}

const LabDecl* ScenarioModel::find_lab(std::string_view lab_id) const {
  auto it = std::find_if(labs.begin(), labs.end(), [&](const LabDecl& l) { return l.id == lab_id; });
  return it == labs.end() ? nullptr : &*it;
}

const ComponentDecl* ScenarioModel::find_component(std::string_view component_id) const {
  auto it = std::find_if(components.begin(), components.end(),
                         [&](const ComponentDecl& c) { return c.id == component_id; });
  return it == components.end() ? nullptr : &*it;
}

SyntaxError::SyntaxError(std::size_t line, std::size_t column, const std::string& detail)
    : Error("SyntaxError", "line " + std::to_string(line) + ", column " + std::to_string(column) +
                               ": " + detail),
      line_(line),
      column_(column) {}

SchemaError::SchemaError(std::string path, const std::string& detail)
    : Error("SchemaError", path + ": " + detail), path_(std::move(path)) {}

namespace {

// Strict view over one JSON object: every key must be consumed or declared.
class ObjectReader {
 public:
  ObjectReader(const Json& value, std::string path) : value_(value), path_(std::move(path)) {
    if (!value_.is_object()) {
      throw SchemaError(path_.empty() ? "$" : path_, "expected object");
    }
  }

  std::string child(std::string_view key) const {
    return path_.empty() ? std::string(key) : path_ + "." + std::string(key);
  }

  const Json* get(std::string_view key) {
    known_.insert(std::string(key));
    auto it = value_.find(std::string(key));
    return it == value_.end() ? nullptr : &*it;
  }

  const Json& require(std::string_view key) {
    const Json* v = get(key);
    if (v == nullptr) throw SchemaError(child(key), "missing field");
    return *v;
  }

  std::string string(std::string_view key) {
    const Json& v = require(key);
    if (!v.is_string()) throw SchemaError(child(key), "expected string");
    return v.get<std::string>();
  }

  std::string string_or(std::string_view key, std::string fallback) {
    const Json* v = get(key);
    if (v == nullptr) return fallback;
    if (!v->is_string()) throw SchemaError(child(key), "expected string");
    return v->get<std::string>();
  }

  std::int64_t integer(std::string_view key) { return as_integer(require(key), child(key)); }

  std::optional<std::int64_t> optional_integer(std::string_view key) {
    const Json* v = get(key);
    if (v == nullptr) return std::nullopt;
    return as_integer(*v, child(key));
  }

  std::uint64_t unsigned_integer(std::string_view key, std::uint64_t fallback) {
    const Json* v = get(key);
    if (v == nullptr) return fallback;
    if (!v->is_number_unsigned()) throw SchemaError(child(key), "expected nonnegative integer");
    return v->get<std::uint64_t>();
  }

  double real(std::string_view key, double fallback) {
    const Json* v = get(key);
    if (v == nullptr) return fallback;
    if (!v->is_number()) throw SchemaError(child(key), "expected number");
    return v->get<double>();
  }

  bool boolean(std::string_view key, bool fallback) {
    const Json* v = get(key);
    if (v == nullptr) return fallback;
    if (!v->is_boolean()) throw SchemaError(child(key), "expected boolean");
    return v->get<bool>();
  }

  const Json* array(std::string_view key, bool required) {
    const Json* v = required ? &require(key) : get(key);
    if (v != nullptr && !v->is_array()) throw SchemaError(child(key), "expected array");
    return v;
  }

  // Rejects keys that were never asked for.
  void finish() const {
    for (const auto& [key, item] : value_.items()) {
      if (!known_.contains(key)) throw SchemaError(child(key), "unknown field");
    }
  }

 private:
  static std::int64_t as_integer(const Json& v, const std::string& path) {
    if (v.is_number_unsigned()) {
      auto u = v.get<std::uint64_t>();
      if (u > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max())) {
        throw SchemaError(path, "integer out of range");
      }
      return static_cast<std::int64_t>(u);
    }
    if (v.is_number_integer()) return v.get<std::int64_t>();
    throw SchemaError(path, "expected integer");
  }

  const Json& value_;
  std::string path_;
  std::set<std::string> known_;
};

std::string indexed(const std::string& path, std::size_t i) {
  return path + "[" + std::to_string(i) + "]";
}

PortRef parse_port_ref(const Json& value, const std::string& path) {
  ObjectReader r(value, path);
  PortRef ref{r.string("component"), r.string("port")};
  r.finish();
  return ref;
}

ChannelModel parse_channel(const Json& value, const std::string& path) {
  ObjectReader r(value, path);
  ChannelModel ch;
  ch.latency_us = r.optional_integer("latency_us").value_or(0);
  ch.jitter_us = r.optional_integer("jitter_us").value_or(0);
  ch.loss_prob = r.real("loss_prob", 0.0);
  ch.bandwidth_Bps = r.unsigned_integer("bandwidth_Bps", 0);
  ch.reorder_allowed = r.boolean("reorder_allowed", false);
  ch.seed = r.unsigned_integer("seed", 0);
  r.finish();
  return ch;
}

ComponentDecl parse_component(const Json& value, const std::string& path) {
  ObjectReader r(value, path);
  ComponentDecl c;
  c.id = r.string("id");
  c.lab = r.string("lab");
  auto kind_text = r.string("kind");
  auto kind = parse_component_kind(kind_text);
  if (!kind) throw SchemaError(r.child("kind"), "unknown kind '" + kind_text + "'");
  c.kind = *kind;
  c.step_us = r.optional_integer("step_us");

  {
    const Json& model = r.require("model");
    ObjectReader m(model, r.child("model"));
    c.model.name = m.string("name");
    if (const Json* params = m.get("params")) {
      if (!params->is_object()) throw SchemaError(m.child("params"), "expected object");
      c.model.params = *params;
    }
    m.finish();
  }

  if (const Json* ports = r.array("ports", false)) {
    for (std::size_t i = 0; i < ports->size(); ++i) {
      ObjectReader p((*ports)[i], indexed(r.child("ports"), i));
      PortDecl port;
      port.name = p.string("name");
      auto dir_text = p.string("direction");
      auto dir = parse_port_direction(dir_text);
      if (!dir) throw SchemaError(p.child("direction"), "unknown direction '" + dir_text + "'");
      port.direction = *dir;
      port.quantity = p.string("quantity");
      port.unit = p.string("unit");
      p.finish();
      c.ports.push_back(std::move(port));
    }
  }
  c.protocol = r.string_or("protocol", "smb-json");
  auto layer_text = r.string_or("sgam_layer", "Component");
  auto layer = parse_sgam_layer(layer_text);
  if (!layer) throw SchemaError(r.child("sgam_layer"), "unknown layer '" + layer_text + "'");
  c.sgam_layer = *layer;
  r.finish();
  return c;
}

std::pair<std::size_t, std::size_t> line_and_column(std::string_view text, std::size_t byte) {
  std::size_t line = 1;
  std::size_t column = 1;
  for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return {line, column};
}

}  // namespace

ScenarioModel parse_scenario(std::string_view text) {
  Json doc;
  try {
    doc = Json::parse(text.begin(), text.end());
  } catch (const Json::parse_error& e) {
    auto [line, column] = line_and_column(text, e.byte);
    throw SyntaxError(line, column, e.what());
  }

  ObjectReader r(doc, "");
  ScenarioModel model;
  model.id = r.string("id");

  const Json& labs = *r.array("labs", true);
  for (std::size_t i = 0; i < labs.size(); ++i) {
    ObjectReader l(labs[i], indexed("labs", i));
    LabDecl lab{l.string("id"), l.string("endpoint"), l.string_or("description", "")};
    l.finish();
    model.labs.push_back(std::move(lab));
  }

  const Json& components = *r.array("components", true);
  for (std::size_t i = 0; i < components.size(); ++i) {
    auto path = indexed("components", i);
    auto component = parse_component(components[i], path);
    if (model.find_lab(component.lab) == nullptr) {
      throw SchemaError(path + ".lab", "references undeclared lab '" + component.lab + "'");
    }
    model.components.push_back(std::move(component));
  }

  if (const Json* links = r.array("links", false)) {
    for (std::size_t i = 0; i < links->size(); ++i) {
      auto path = indexed("links", i);
      ObjectReader k((*links)[i], path);
      LinkDecl link;
      link.from = parse_port_ref(k.require("from"), k.child("from"));
      link.to = parse_port_ref(k.require("to"), k.child("to"));
      if (const Json* channel = k.get("channel")) {
        link.channel = parse_channel(*channel, k.child("channel"));
      }
      k.finish();
      model.links.push_back(std::move(link));
    }
  }

  {
    ObjectReader run(r.require("run"), "run");
    model.run.duration_us = run.integer("duration_us");
    model.run.seed = run.unsigned_integer("seed", 0);
    if (const Json* rt = run.get("rt_factor"); rt != nullptr && !rt->is_null()) {
      if (!rt->is_number()) throw SchemaError("run.rt_factor", "expected number");
      model.run.rt_factor = rt->get<double>();
    }
    model.run.experiment_id = run.string_or("experiment_id", model.id);
    run.finish();
  }
  r.finish();
  return model;
}

Json scenario_to_json(const ScenarioModel& model) {
  Json doc = Json::object();
  doc["id"] = model.id;
  doc["labs"] = Json::array();
  for (const auto& lab : model.labs) {
    doc["labs"].push_back({{"id", lab.id}, {"endpoint", lab.endpoint}, {"description", lab.description}});
  }
  doc["components"] = Json::array();
  for (const auto& c : model.components) {
    Json jc = Json::object();
    jc["id"] = c.id;
    jc["lab"] = c.lab;
    jc["kind"] = std::string(to_string(c.kind));
    if (c.step_us) jc["step_us"] = *c.step_us;
    jc["model"] = {{"name", c.model.name}, {"params", c.model.params}};
    jc["ports"] = Json::array();
    for (const auto& p : c.ports) {
      jc["ports"].push_back({{"name", p.name},
                             {"direction", std::string(to_string(p.direction))},
                             {"quantity", p.quantity},
                             {"unit", p.unit}});
    }
    jc["protocol"] = c.protocol;
    jc["sgam_layer"] = std::string(to_string(c.sgam_layer));
    doc["components"].push_back(std::move(jc));
  }
  doc["links"] = Json::array();
  for (const auto& link : model.links) {
    const auto& ch = link.channel;
    doc["links"].push_back({
        {"from", {{"component", link.from.component}, {"port", link.from.port}}},
        {"to", {{"component", link.to.component}, {"port", link.to.port}}},
        {"channel",
         {{"latency_us", ch.latency_us},
          {"jitter_us", ch.jitter_us},
          {"loss_prob", ch.loss_prob},
          {"bandwidth_Bps", ch.bandwidth_Bps},
          {"reorder_allowed", ch.reorder_allowed},
          {"seed", ch.seed}}},
    });
  }
  Json run = Json::object();
  run["duration_us"] = model.run.duration_us;
  run["seed"] = model.run.seed;
  if (model.run.rt_factor) run["rt_factor"] = *model.run.rt_factor;
  run["experiment_id"] = model.run.experiment_id;
  doc["run"] = std::move(run);
  return doc;
}

std::string serialize_scenario(const ScenarioModel& model) {
  return canonical_dump(scenario_to_json(model));
}

namespace {

bool zero_delay(const ChannelModel& ch) {
  return ch.latency_us - ch.jitter_us <= 0 && ch.bandwidth_Bps == 0;
}

// Strongly connected components of the zero-delay DiscreteEvent subgraph
// that contain a cycle (size > 1, or a self loop).
std::vector<std::vector<std::size_t>> algebraic_loops(const ScenarioModel& model) {
  const std::size_t n = model.components.size();
  std::map<std::string, std::size_t, std::less<>> index;
  for (std::size_t i = 0; i < n; ++i) index.emplace(model.components[i].id, i);

  std::vector<std::vector<std::size_t>> adj(n);
  std::vector<bool> self_loop(n, false);
  for (const auto& link : model.links) {
    auto a = index.find(link.from.component);
    auto b = index.find(link.to.component);
    if (a == index.end() || b == index.end()) continue;
    if (model.components[a->second].kind == ComponentKind::Continuous ||
        model.components[b->second].kind == ComponentKind::Continuous || !zero_delay(link.channel)) {
      continue;
    }
    adj[a->second].push_back(b->second);
    if (a->second == b->second) self_loop[a->second] = true;
  }

  // Tarjan, iterative.
  std::vector<int> order(n, -1), low(n, 0);
  std::vector<bool> on_stack(n, false);
  std::vector<std::size_t> stack;
  std::vector<std::vector<std::size_t>> result;
  int counter = 0;
  for (std::size_t root = 0; root < n; ++root) {
    if (order[root] != -1) continue;
    std::vector<std::pair<std::size_t, std::size_t>> frames{{root, 0}};
    order[root] = low[root] = counter++;
    stack.push_back(root);
    on_stack[root] = true;
    while (!frames.empty()) {
      auto& [v, next] = frames.back();
      if (next < adj[v].size()) {
        std::size_t w = adj[v][next++];
        if (order[w] == -1) {
          order[w] = low[w] = counter++;
          stack.push_back(w);
          on_stack[w] = true;
          frames.emplace_back(w, 0);
        } else if (on_stack[w]) {
          low[v] = std::min(low[v], order[w]);
        }
        continue;
      }
      if (low[v] == order[v]) {
        std::vector<std::size_t> scc;
        std::size_t w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = false;
          scc.push_back(w);
        } while (w != v);
        if (scc.size() > 1 || self_loop[v]) {
          std::sort(scc.begin(), scc.end());
          result.push_back(std::move(scc));
        }
      }
      std::size_t finished = v;
      frames.pop_back();
      if (!frames.empty()) {
        low[frames.back().first] = std::min(low[frames.back().first], low[finished]);
      }
    }
  }
  std::sort(result.begin(), result.end());
  return result;
}

}  // namespace

std::vector<Violation> validate(const ScenarioModel& model) {
  std::vector<Violation> out;
  auto add = [&](std::string code, std::string path, std::string detail) {
    out.push_back({std::move(code), std::move(path), std::move(detail)});
  };

  std::set<std::string, std::less<>> lab_ids;
  for (std::size_t i = 0; i < model.labs.size(); ++i) {
    const auto& lab = model.labs[i];
    auto path = indexed("labs", i);
    if (!lab_ids.insert(lab.id).second) add("DuplicateId", path, "lab id '" + lab.id + "' repeated");
    if (!parse_endpoint(lab.endpoint)) {
      add("BadEndpoint", path + ".endpoint", "'" + lab.endpoint + "' is not host:port");
    }
  }

  std::set<std::string, std::less<>> component_ids;
  for (std::size_t i = 0; i < model.components.size(); ++i) {
    const auto& c = model.components[i];
    auto path = indexed("components", i);
    if (!component_ids.insert(c.id).second) {
      add("DuplicateId", path, "component id '" + c.id + "' repeated");
    }
    if (!lab_ids.contains(c.lab)) add("UnknownLab", path + ".lab", "lab '" + c.lab + "' not declared");
    if (c.kind == ComponentKind::Continuous && !c.step_us) {
      add("MissingStep", path + ".step_us", "Continuous components need step_us");
    } else if (c.kind == ComponentKind::DiscreteEvent && c.step_us) {
      add("UnexpectedStep", path + ".step_us", "step_us is only allowed on Continuous components");
    } else if (c.step_us && *c.step_us < 1) {
      add("BadStep", path + ".step_us", "step_us must be >= 1");
    }
    std::set<std::string, std::less<>> port_names;
    for (std::size_t j = 0; j < c.ports.size(); ++j) {
      const auto& p = c.ports[j];
      auto ppath = indexed(path + ".ports", j);
      if (!port_names.insert(p.name).second) {
        add("DuplicatePort", ppath, "port '" + p.name + "' repeated in '" + c.id + "'");
      }
      if (p.quantity.empty() || p.unit.empty()) add("EmptyField", ppath, "quantity and unit must be nonempty");
    }
  }

  for (std::size_t i = 0; i < model.links.size(); ++i) {
    const auto& link = model.links[i];
    auto path = indexed("links", i);
    const auto* from_c = model.find_component(link.from.component);
    const auto* to_c = model.find_component(link.to.component);
    const PortDecl* from = from_c ? from_c->find_port(link.from.port) : nullptr;
    const PortDecl* to = to_c ? to_c->find_port(link.to.port) : nullptr;
    if (from == nullptr) {
      add("UnknownPort", path + ".from", link.from.component + "." + link.from.port + " not declared");
    }
    if (to == nullptr) {
      add("UnknownPort", path + ".to", link.to.component + "." + link.to.port + " not declared");
    }
    if (from != nullptr && to != nullptr) {
      if (from->direction != PortDirection::Out || to->direction != PortDirection::In) {
        add("DirectionMismatch", path, "links must run from an Out port to an In port");
      } else if (from->quantity != to->quantity) {
        add("QuantityMismatch", path, from->quantity + " vs " + to->quantity);
      } else if (!unit_factor(from->unit, to->unit)) {
        add("NoAdapter", path, "no conversion from " + from->unit + " to " + to->unit);
      }
    }
    const auto& ch = link.channel;
    if (ch.latency_us < 0 || ch.jitter_us < 0 || ch.jitter_us > ch.latency_us || !(ch.loss_prob >= 0.0) ||
        !(ch.loss_prob <= 1.0)) {
      add("BadChannel", path + ".channel", "need 0 <= jitter_us <= latency_us and loss_prob in [0,1]");
    }
  }

  if (model.run.duration_us < 1) add("BadRun", "run.duration_us", "duration_us must be >= 1");
  if (model.run.rt_factor && !(*model.run.rt_factor > 0.0)) {
    add("BadRun", "run.rt_factor", "rt_factor must be > 0");
  }

  for (const auto& loop : algebraic_loops(model)) {
    std::string members;
    for (auto idx : loop) {
      if (!members.empty()) members += " -> ";
      members += model.components[idx].id;
    }
    members += " -> " + model.components[loop.front()].id;
    add("AlgebraicLoop", "links", members);
  }
  return out;
}

ScenarioModel layer_view(const ScenarioModel& model, SgamLayer layer) {
  ScenarioModel view;
  view.id = model.id;
  view.labs = model.labs;
  view.run = model.run;
  std::set<std::string, std::less<>> kept;
  for (const auto& c : model.components) {
    if (c.sgam_layer == layer) {
      view.components.push_back(c);
      kept.insert(c.id);
    }
  }
  for (const auto& link : model.links) {
    if (kept.contains(link.from.component) && kept.contains(link.to.component)) {
      view.links.push_back(link);
    }
  }
  return view;
}

}  // namespace gridweave
