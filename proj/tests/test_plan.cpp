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

ScenarioModel pair_in(const std::string& lab_a, const std::string& lab_b) {
  std::vector<std::string> labs{lab_a};
  if (lab_b != lab_a) labs.push_back(lab_b);
  return gwtest::scenario(labs,
                          {relay("src", lab_a, {}, {port("out", PortDirection::Out)}),
                           relay("dst", lab_b, {}, {port("in", PortDirection::In)})},
                          {link("src", "out", "dst", "in")}, 1'000'000);
}

}  // namespace

TEST_CASE("single lab compiles to one master plan") {
  auto compiled = compile(pair_in("lab1", "lab1"));
  REQUIRE(compiled.plans.size() == 1);
  const auto& plan = compiled.plans.at("lab1");
  CHECK(plan.master);
  CHECK(plan.launches.size() == 2);
  CHECK(plan.local_routes.size() == 1);
  CHECK(plan.egress_routes.empty());
  CHECK(plan.ingress_routes.empty());
  CHECK_FALSE(plan.local_routes[0].adapter.has_value());
  CHECK(compiled.topology.master == "lab1");
  CHECK(compiled.topology.experiment_id == "exp");
}

TEST_CASE("cross-lab link becomes an egress and ingress pair") {
  auto compiled = compile(pair_in("sesa", "smartest"));
  const auto& src = compiled.plans.at("sesa");
  const auto& dst = compiled.plans.at("smartest");
  REQUIRE(src.egress_routes.size() == 1);
  REQUIRE(dst.ingress_routes.size() == 1);
  CHECK(src.egress_routes[0].route_id == 0);
  CHECK(dst.ingress_routes[0].route_id == 0);
  CHECK(src.egress_routes[0] == dst.ingress_routes[0]);
  CHECK(src.ingress_routes.empty());
  CHECK(dst.egress_routes.empty());
  CHECK(src.master);
  CHECK_FALSE(dst.master);
  REQUIRE(compiled.topology.members.size() == 2);
  CHECK(compiled.topology.members[0].first == "sesa");
}

TEST_CASE("PV fixture has exactly one egress and ingress route") {
  auto compiled = compile(gwtest::load_fixture("pv_to_grid.json"));
  REQUIRE(compiled.plans.size() == 2);
  std::size_t egress = 0, ingress = 0;
  for (const auto& [lab, plan] : compiled.plans) {
    egress += plan.egress_routes.size();
    ingress += plan.ingress_routes.size();
  }
  CHECK(egress == 1);
  CHECK(ingress == 1);
  const auto& route = compiled.plans.at("smartest").egress_routes.at(0);
  CHECK(route.route_id == 1);
  REQUIRE(route.adapter.has_value());
  CHECK(route.adapter->kind == AdapterKind::KeyRename);
}

TEST_CASE("unit mismatch inserts a scale adapter") {
  auto m = pair_in("lab1", "lab1");
  m.components[0].ports[0].unit = "kW";
  m.components[1].ports[0].unit = "W";
  auto compiled = compile(m);
  const auto& adapter = compiled.plans.at("lab1").local_routes.at(0).adapter;
  REQUIRE(adapter);
  CHECK(adapter->kind == AdapterKind::UnitScale);
  CHECK(adapter->factor == 1000.0);
  CHECK(adapter->from_unit == "kW");
  CHECK(adapter->to_unit == "W");
}

TEST_CASE("unbridgeable protocols fail to compile") {
  auto m = pair_in("lab1", "lab1");
  m.components[0].protocol = "csv-frame";
  try {
    compile(m);
    FAIL("expected CompileError");
  } catch (const CompileError& e) {
    CHECK(e.code() == "NoAdapter");
  }
}

TEST_CASE("select_adapter") {
  CHECK(select_adapter("smb-json", "W", "smb-json", "W").kind == AdapterKind::Identity);
  auto scale = select_adapter("smb-json", "kW", "smb-json", "W");
  CHECK(scale.kind == AdapterKind::UnitScale);
  CHECK(scale.factor == 1000.0);
  CHECK(select_adapter("smb-json", "W", "smb-json", "kW").factor == doctest::Approx(1e-3));
  CHECK(select_adapter("smb-json", "MW", "smb-json", "W").factor == 1e6);
  CHECK(select_adapter("smb-json", "kvar", "smb-json", "var").factor == 1000.0);
  CHECK_THROWS_AS(select_adapter("smb-json", "W", "csv-frame", "pu"), CompileError);
  CHECK_THROWS_AS(select_adapter("smb-json", "kW", "smb-json", "MW"), CompileError);
  auto rename = select_adapter("smb-json", "W", "iec61850-toy", "W");
  CHECK(rename.kind == AdapterKind::KeyRename);
  CHECK(rename.rename.at("active-power") == "MMXU.TotW");
  auto back = select_adapter("iec61850-toy", "W", "smb-json", "W");
  CHECK(back.rename.at("MMXU.TotW") == "active-power");
}

TEST_CASE("assign_master uses byte order") {
  auto m = gwtest::scenario({"sesa"}, {}, {}, 1);
  CHECK(assign_master(m) == "sesa");
  m = gwtest::scenario({"smartest", "sesa"}, {}, {}, 1);
  CHECK(assign_master(m) == "sesa");
  m = gwtest::scenario({"B", "a"}, {}, {}, 1);
  CHECK(assign_master(m) == "B");
}

TEST_CASE("compile invariants over random scenarios") {
  std::mt19937_64 rng(21);
  for (int i = 0; i < 300; ++i) {
    const auto m = gwtest::random_scenario(rng);
    const auto compiled = compile(m);
    std::size_t launches = 0, local = 0, egress = 0, masters = 0;
    std::map<std::int64_t, int> egress_ids, ingress_ids;
    for (const auto& [lab, plan] : compiled.plans) {
      CHECK(plan.lab == lab);
      launches += plan.launches.size();
      local += plan.local_routes.size();
      egress += plan.egress_routes.size();
      masters += plan.master ? 1 : 0;
      for (const auto& launch : plan.launches) CHECK(m.find_component(launch.component)->lab == lab);
      for (const auto& r : plan.egress_routes) ++egress_ids[r.route_id];
      for (const auto& r : plan.ingress_routes) ++ingress_ids[r.route_id];
    }
    CHECK(launches == m.components.size());
    CHECK(local + egress == m.links.size());
    CHECK(masters == 1);
    CHECK(egress_ids == ingress_ids);
    for (const auto& [id, n] : egress_ids) CHECK(n == 1);

    const auto again = compile(m);
    CHECK(again.topology == compiled.topology);
    for (const auto& [lab, plan] : compiled.plans) {
      CHECK(again.plans.at(lab) == plan);
      CHECK(plan_from_json(plan_to_json(plan)) == plan);
    }
  }
}

TEST_CASE("plan JSON round trip keeps adapters") {
  auto compiled = compile(gwtest::load_fixture("pv_to_grid.json"));
  for (const auto& [lab, plan] : compiled.plans) {
    const auto j = plan_to_json(plan);
    CHECK(plan_from_json(j) == plan);
    CHECK(canonical_dump(plan_to_json(plan_from_json(j))) == canonical_dump(j));
  }
  CHECK_THROWS(plan_from_json(Json::parse(R"({"lab": 3})")));
}
