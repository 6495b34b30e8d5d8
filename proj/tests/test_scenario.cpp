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

#include <doctest.h>

#include "support.hpp"

using namespace gridweave;
using gwtest::link;
using gwtest::port;
using gwtest::relay;

namespace {

const char* kMinimal = R"({
  "id": "mini",
  "labs": [{"id": "lab1", "endpoint": "127.0.0.1:7841"}],
  "components": [{"id": "c1", "lab": "lab1", "kind": "DiscreteEvent",
                  "model": {"name": "relay", "params": {}},
                  "ports": [{"name": "out", "direction": "Out", "quantity": "signal", "unit": "1"}]}],
  "links": [],
  "run": {"duration_us": 1000, "seed": 3}
})";

std::vector<std::string> codes(const std::vector<Violation>& violations) {
  std::vector<std::string> out;
  for (const auto& v : violations) out.push_back(v.code);
  return out;
}

ScenarioModel two_relays() {
  return gwtest::scenario({"lab1"},
                          {relay("a", "lab1", {}, {port("out", PortDirection::Out), port("in", PortDirection::In)}),
                           relay("b", "lab1", {}, {port("out", PortDirection::Out), port("in", PortDirection::In)})},
                          {link("a", "out", "b", "in")}, 1'000'000);
}

}  // namespace

TEST_CASE("minimal document parses with defaults") {
  auto m = parse_scenario(kMinimal);
  CHECK(m.labs.size() == 1);
  CHECK(m.components.size() == 1);
  CHECK(m.links.empty());
  CHECK(m.labs[0].description.empty());
  const auto& c = m.components[0];
  CHECK(c.protocol == "smb-json");
  CHECK(c.sgam_layer == SgamLayer::Component);
  CHECK_FALSE(c.step_us.has_value());
  CHECK(m.run.experiment_id == "mini");
  CHECK_FALSE(m.run.rt_factor.has_value());
  CHECK(validate(m).empty());
}

TEST_CASE("omitted channel is ideal") {
  auto doc = Json::parse(kMinimal);
  doc["components"][0]["ports"].push_back({{"name", "in"}, {"direction", "In"}, {"quantity", "signal"}, {"unit", "1"}});
  doc["links"].push_back({{"from", {{"component", "c1"}, {"port", "out"}}}, {"to", {{"component", "c1"}, {"port", "in"}}}});
  auto m = parse_scenario(doc.dump());
  REQUIRE(m.links.size() == 1);
  CHECK(m.links[0].channel == ChannelModel{});
}

TEST_CASE("dangling lab reference names the field path") {
  auto doc = Json::parse(kMinimal);
  doc["components"][0]["lab"] = "labX";
  try {
    parse_scenario(doc.dump());
    FAIL("expected SchemaError");
  } catch (const SchemaError& e) {
    CHECK(e.path() == "components[0].lab");
  }
}

TEST_CASE("syntax errors carry line and column") {
  try {
    parse_scenario("{\n  \"id\": \"x\",\n  oops\n}");
    FAIL("expected SyntaxError");
  } catch (const SyntaxError& e) {
    CHECK(e.line() == 3);
    CHECK(e.column() >= 3);
  }
}

TEST_CASE("schema errors") {
  SUBCASE("unknown key") {
    auto doc = Json::parse(kMinimal);
    doc["extra"] = 1;
    CHECK_THROWS_AS(parse_scenario(doc.dump()), SchemaError);
  }
  SUBCASE("unknown key in a component") {
    auto doc = Json::parse(kMinimal);
    doc["components"][0]["colour"] = "red";
    try {
      parse_scenario(doc.dump());
      FAIL("expected SchemaError");
    } catch (const SchemaError& e) {
      CHECK(e.path() == "components[0].colour");
    }
  }
  SUBCASE("mistyped field") {
    auto doc = Json::parse(kMinimal);
    doc["run"]["duration_us"] = "long";
    try {
      parse_scenario(doc.dump());
      FAIL("expected SchemaError");
    } catch (const SchemaError& e) {
      CHECK(e.path() == "run.duration_us");
    }
  }
  SUBCASE("missing field") {
    auto doc = Json::parse(kMinimal);
    doc.erase("run");
    CHECK_THROWS_AS(parse_scenario(doc.dump()), SchemaError);
  }
  SUBCASE("bad enum") {
    auto doc = Json::parse(kMinimal);
    doc["components"][0]["kind"] = "Hybrid";
    CHECK_THROWS_AS(parse_scenario(doc.dump()), SchemaError);
  }
}

TEST_CASE("two-lab PV and grid fixture") {
  auto m = gwtest::load_fixture("pv_to_grid.json");
  CHECK(m.labs.size() == 2);
  CHECK(m.components.size() >= 3);
  CHECK(validate(m).empty());
}

TEST_CASE("validate reports each rule") {
  SUBCASE("duplicate component id") {
    auto m = two_relays();
    m.components[1].id = "a";
    m.links.clear();
    auto v = validate(m);
    REQUIRE(v.size() == 1);
    CHECK(v[0].code == "DuplicateId");
    CHECK(v[0].path == "components[1]");
  }
  SUBCASE("out to out") {
    auto m = two_relays();
    m.links[0].to.port = "out";
    auto v = validate(m);
    REQUIRE(v.size() == 1);
    CHECK(v[0].code == "DirectionMismatch");
    CHECK(v[0].path == "links[0]");
  }
  SUBCASE("zero-delay loop between discrete components") {
    auto m = two_relays();
    m.links.push_back(link("b", "out", "a", "in"));
    auto v = validate(m);
    REQUIRE(v.size() == 1);
    CHECK(v[0].code == "AlgebraicLoop");
    CHECK(v[0].detail.find("a -> b") != std::string::npos);
  }
  SUBCASE("a delayed link breaks the loop") {
    auto m = two_relays();
    ChannelModel delayed;
    delayed.latency_us = 10;
    m.links.push_back(link("b", "out", "a", "in", delayed));
    CHECK(validate(m).empty());
  }
  SUBCASE("jitter equal to latency keeps the loop") {
    auto m = two_relays();
    ChannelModel ch;
    ch.latency_us = 10;
    ch.jitter_us = 10;
    m.links.push_back(link("b", "out", "a", "in", ch));
    CHECK(codes(validate(m)) == std::vector<std::string>{"AlgebraicLoop"});
  }
  SUBCASE("a continuous member breaks the loop") {
    auto m = two_relays();
    m.components[1].kind = ComponentKind::Continuous;
    m.components[1].step_us = 1000;
    m.links.push_back(link("b", "out", "a", "in"));
    CHECK(validate(m).empty());
  }
  SUBCASE("self loop") {
    auto m = two_relays();
    m.links = {link("a", "out", "a", "in")};
    CHECK(codes(validate(m)) == std::vector<std::string>{"AlgebraicLoop"});
  }
  SUBCASE("unknown port") {
    auto m = two_relays();
    m.links[0].to.port = "nope";
    auto v = validate(m);
    REQUIRE(v.size() == 1);
    CHECK(v[0].code == "UnknownPort");
    CHECK(v[0].path == "links[0].to");
  }
  SUBCASE("quantity mismatch") {
    auto m = two_relays();
    m.components[1].ports[1].quantity = "irradiance";
    CHECK(codes(validate(m)) == std::vector<std::string>{"QuantityMismatch"});
  }
  SUBCASE("convertible units are fine") {
    auto m = two_relays();
    m.components[0].ports[0].unit = "kW";
    m.components[1].ports[1].unit = "W";
    CHECK(validate(m).empty());
  }
  SUBCASE("unconvertible units") {
    auto m = two_relays();
    m.components[0].ports[0].unit = "pu";
    m.components[1].ports[1].unit = "W";
    CHECK(codes(validate(m)) == std::vector<std::string>{"NoAdapter"});
  }
  SUBCASE("continuous without a step") {
    auto m = two_relays();
    m.components[0].kind = ComponentKind::Continuous;
    CHECK(codes(validate(m)) == std::vector<std::string>{"MissingStep"});
  }
  SUBCASE("step on a discrete component") {
    auto m = two_relays();
    m.components[0].step_us = 5;
    CHECK(codes(validate(m)) == std::vector<std::string>{"UnexpectedStep"});
  }
  SUBCASE("zero step") {
    auto m = two_relays();
    m.components[0].kind = ComponentKind::Continuous;
    m.components[0].step_us = 0;
    CHECK(codes(validate(m)) == std::vector<std::string>{"BadStep"});
  }
  SUBCASE("duplicate port") {
    auto m = two_relays();
    m.components[0].ports[1].name = "out";
    m.links.clear();
    CHECK(codes(validate(m)) == std::vector<std::string>{"DuplicatePort"});
  }
  SUBCASE("empty unit") {
    auto m = two_relays();
    m.components[0].ports[1].unit = "";
    CHECK(codes(validate(m)) == std::vector<std::string>{"EmptyField"});
  }
  SUBCASE("endpoint port out of range") {
    auto m = two_relays();
    m.labs[0].endpoint = "host:70000";
    CHECK(codes(validate(m)) == std::vector<std::string>{"BadEndpoint"});
  }
  SUBCASE("jitter above latency") {
    auto m = two_relays();
    m.links[0].channel.jitter_us = 5;
    CHECK(codes(validate(m)) == std::vector<std::string>{"BadChannel"});
  }
  SUBCASE("loss above one") {
    auto m = two_relays();
    m.links[0].channel.loss_prob = 1.5;
    CHECK(codes(validate(m)) == std::vector<std::string>{"BadChannel"});
  }
  SUBCASE("zero duration") {
    auto m = two_relays();
    m.run.duration_us = 0;
    CHECK(codes(validate(m)) == std::vector<std::string>{"BadRun"});
  }
  SUBCASE("nonpositive rt factor") {
    auto m = two_relays();
    m.run.rt_factor = 0.0;
    CHECK(codes(validate(m)) == std::vector<std::string>{"BadRun"});
  }
  SUBCASE("unknown lab") {
    auto m = two_relays();
    m.components[0].lab = "elsewhere";
    CHECK(codes(validate(m)) == std::vector<std::string>{"UnknownLab"});
  }
}

TEST_CASE("parse_endpoint") {
  auto e = parse_endpoint("10.0.0.1:7841");
  REQUIRE(e);
  CHECK(e->host == "10.0.0.1");
  CHECK(e->port == 7841);
  CHECK_FALSE(parse_endpoint("host:0"));
  CHECK_FALSE(parse_endpoint("host:65536"));
  CHECK_FALSE(parse_endpoint("host"));
  CHECK_FALSE(parse_endpoint(":80"));
  CHECK(parse_endpoint("h:65535"));
}

TEST_CASE("layer view keeps tagged components and their links") {
  auto m = two_relays();
  m.components[1].sgam_layer = SgamLayer::Communication;
  auto component_layer = layer_view(m, SgamLayer::Component);
  CHECK(component_layer.components.size() == 1);
  CHECK(component_layer.links.empty());
  m.components[1].sgam_layer = SgamLayer::Component;
  CHECK(layer_view(m, SgamLayer::Component).links.size() == 1);
  CHECK(layer_view(m, SgamLayer::Business).components.empty());
}

TEST_CASE("serialize then parse is the identity over random scenarios") {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 200; ++i) {
    auto m = gwtest::random_scenario(rng);
    m.components[0].protocol = "iec61850-toy";
    m.components[0].sgam_layer = SgamLayer::Function;
    if (i % 3 == 0) m.run.rt_factor = 2.5;
    m.labs[0].description = "lab \"quoted\" é";
    const auto text = serialize_scenario(m);
    const auto back = parse_scenario(text);
    CHECK(back == m);
    CHECK(serialize_scenario(back) == text);
  }
}

TEST_CASE("injecting one fault yields exactly that violation") {
  std::mt19937_64 rng(12);
  for (int i = 0; i < 200; ++i) {
    auto m = gwtest::random_scenario(rng);
    const auto pick = i % 4;
    std::string expected;
    if (pick == 0) {
      m.components.push_back(m.components[0]);
      m.links.clear();
      expected = "DuplicateId";
    } else if (pick == 1) {
      m.run.duration_us = 0;
      expected = "BadRun";
    } else if (pick == 2) {
      m.components[0].ports[0].quantity.clear();
      m.links.clear();
      expected = "EmptyField";
    } else {
      m.labs[0].endpoint = "nowhere";
      expected = "BadEndpoint";
    }
    auto v = validate(m);
    REQUIRE(v.size() == 1);
    CHECK(v[0].code == expected);
  }
}
