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

constexpr TimeUs kSecond = 1'000'000;

// Registry whose relays are observable after the run.
struct Observed {
  ModelRegistry registry = ModelRegistry::builtin();
  std::shared_ptr<gwtest::Relay::Log> log = std::make_shared<gwtest::Relay::Log>();
  std::vector<gwtest::Relay*> relays;

  Observed() {
    registry.add("relay", [this] {
      auto r = std::make_unique<gwtest::Relay>(log);
      relays.push_back(r.get());
      return r;
    });
  }
};

std::vector<PortDecl> io_ports() {
  return {port("o0", PortDirection::Out), port("i0", PortDirection::In)};
}


}  // namespace

TEST_CASE("start schedules first steps") {
  auto registry = gwtest::test_registry();
  SUBCASE("continuous component starts one step in") {
    auto m = gwtest::scenario({"lab"}, {relay("c", "lab", {}, io_ports(), kSecond)}, {}, 10 * kSecond);
    auto compiled = compile(m);
    Kernel k(m, compiled, {"lab"}, registry);
    k.start();
    CHECK(k.next_step("c") == kSecond);
    CHECK(k.t_global() == 0);
  }
  SUBCASE("profile player starts at its first event") {
    ComponentDecl p;
    p.id = "p";
    p.lab = "lab";
    p.model = {"profile-player", Json::parse(R"({"points":[[300000000,1,0],[360000000,2,0]]})")};
    p.ports = {port("P", PortDirection::Out, "active-power", "W")};
    auto m = gwtest::scenario({"lab"}, {p}, {}, 600 * kSecond);
    auto compiled = compile(m);
    Kernel k(m, compiled, {"lab"}, registry);
    k.start();
    CHECK(k.next_step("p") == 300 * kSecond);
  }
  SUBCASE("unknown model") {
    auto m = gwtest::scenario({"lab"}, {relay("c", "lab", {}, io_ports())}, {}, kSecond);
    m.components[0].model.name = "does-not-exist";
    auto compiled = compile(m);
    Kernel k(m, compiled, {"lab"}, registry);
    CHECK(gwtest::error_code([&] { k.start(); }) == "UnknownModel");
  }
  SUBCASE("rejected parameters") {
    auto m = gwtest::scenario({"lab"}, {relay("c", "lab", {{"interval_us", 0}}, io_ports())}, {}, kSecond);
    auto compiled = compile(m);
    Kernel k(m, compiled, {"lab"}, registry);
    CHECK(gwtest::error_code([&] { k.start(); }) == "InitFailure");
  }
}

TEST_CASE("next_component picks the earliest, then lab and id order") {
  auto registry = gwtest::test_registry();
  SUBCASE("minimum time") {
    auto m = gwtest::scenario({"lab"},
                              {relay("a", "lab", {{"first_us", 50}}, io_ports()),
                               relay("b", "lab", {{"first_us", 30}}, io_ports())},
                              {}, kSecond);
    auto compiled = compile(m);
    Kernel k(m, compiled, {"lab"}, registry);
    k.start();
    CHECK(k.next_component() == "b");
    CHECK(k.next_time() == 30);
  }
  SUBCASE("tie broken by id") {
    auto m = gwtest::scenario({"lab"},
                              {relay("b", "lab", {{"first_us", 30}}, io_ports()),
                               relay("a", "lab", {{"first_us", 30}}, io_ports())},
                              {}, kSecond);
    auto compiled = compile(m);
    Kernel k(m, compiled, {"lab"}, registry);
    k.start();
    CHECK(k.next_component() == "a");
  }
  SUBCASE("tie broken by lab before id") {
    auto m = gwtest::scenario({"x", "y"},
                              {relay("a", "y", {{"first_us", 30}}, io_ports()),
                               relay("b", "x", {{"first_us", 30}}, io_ports())},
                              {}, kSecond);
    auto compiled = compile(m);
    Kernel k(m, compiled, {"x", "y"}, registry);
    k.start();
    CHECK(k.next_component() == "b");
  }
  SUBCASE("idle when everything is done") {
    auto m = gwtest::scenario({"lab"}, {relay("a", "lab", {{"first_us", 10}, {"until_us", 10}}, io_ports())}, {},
                              kSecond);
    auto compiled = compile(m);
    Kernel k(m, compiled, {"lab"}, registry);
    k.start();
    k.advance("a");
    CHECK_FALSE(k.next_component().has_value());
    CHECK(k.next_time() == kTimeInfinity);
  }
}

TEST_CASE("advance") {
  Observed obs;
  SUBCASE("ideal route delivers at the send time") {
    auto m = gwtest::scenario({"lab"},
                              {relay("a", "lab", {{"first_us", 60 * kSecond}, {"until_us", 60 * kSecond}, {"outputs", {"o0"}}}, io_ports()),
                               relay("b", "lab", {{"first_us", 61 * kSecond}}, io_ports())},
                              {link("a", "o0", "b", "i0")}, 100 * kSecond);
    auto compiled = compile(m);
    Kernel k(m, compiled, {"lab"}, obs.registry);
    k.start();
    k.advance("a");
    CHECK(k.t_global() == 60 * kSecond);
    CHECK(k.pending_count() == 1);
    k.advance("b");
    CHECK(k.pending_count() == 0);
    const auto& rec = k.trace().records;
    auto deliver = std::find_if(rec.begin(), rec.end(), [](const TraceRecord& r) { return r.kind == TraceKind::Deliver; });
    REQUIRE(deliver != rec.end());
    CHECK(deliver->t_us == 60 * kSecond);
    CHECK(deliver->component == "b");
    CHECK(deliver->port == "i0");
    CHECK(deliver->route_id == 0);
    CHECK(deliver->seq == 0);
  }
  SUBCASE("later deliveries overwrite earlier ones on the same port") {
    auto m = gwtest::scenario(
        {"lab"},
        {relay("a", "lab", {{"first_us", 50 * kSecond}, {"interval_us", 5 * kSecond}, {"until_us", 55 * kSecond},
                            {"outputs", {"o0"}}},
               io_ports()),
         relay("b", "lab", {{"first_us", 60 * kSecond}, {"interval_us", 100 * kSecond}}, io_ports())},
        {link("a", "o0", "b", "i0")}, 100 * kSecond);
    auto compiled = compile(m);
    Kernel k(m, compiled, {"lab"}, obs.registry);
    k.start();
    run_to_completion(k, m.run);
    REQUIRE(obs.log->size() == 3);
    const auto& [t, inputs] = obs.log->back();
    CHECK(t == 60 * kSecond);
    REQUIRE(inputs.size() == 1);
    CHECK(inputs[0] == PortValue{"i0", static_cast<double>(55 * kSecond)});
    auto delivers = std::count_if(k.trace().records.begin(), k.trace().records.end(),
                                  [](const TraceRecord& r) { return r.kind == TraceKind::Deliver; });
    CHECK(delivers == 2);
  }
  SUBCASE("a failing step stops every component once") {
    auto m = gwtest::scenario({"lab"},
                              {relay("a", "lab", {{"fail_at_us", 3 * kSecond}}, io_ports()),
                               relay("b", "lab", {}, io_ports()), relay("c", "lab", {}, io_ports(), kSecond)},
                              {}, 10 * kSecond);
    auto compiled = compile(m);
    Kernel k(m, compiled, {"lab"}, obs.registry);
    k.start();
    auto trace = run_to_completion(k, m.run);
    CHECK(trace.aborted);
    CHECK(trace.failure.find("StepFailure") == 0);
    REQUIRE(obs.relays.size() == 3);
    for (auto* r : obs.relays) {
      CHECK(r->stops_ == 1);
      CHECK(r->last_reason_ == StopReason::ComponentFailure);
    }
    int stops = 0;
    for (const auto& r : trace.records) {
      if (r.kind != TraceKind::Stop) continue;
      ++stops;
      CHECK(r.reason == "component_failure");
      CHECK(r.t_us == 3 * kSecond);
    }
    CHECK(stops == 3);
    k.stop_all(StopReason::Completed, 0);
    for (auto* r : obs.relays) CHECK(r->stops_ == 1);
  }
  SUBCASE("only the next component may advance") {
    auto m = gwtest::scenario({"lab"},
                              {relay("a", "lab", {{"first_us", 1}}, io_ports()),
                               relay("b", "lab", {{"first_us", 2}}, io_ports())},
                              {}, kSecond);
    auto compiled = compile(m);
    Kernel k(m, compiled, {"lab"}, obs.registry);
    k.start();
    CHECK_THROWS_AS(k.advance("b"), Error);
  }
}

TEST_CASE("lbts") {
  CHECK(lbts({30, 45}, 28, 1000).granted_until_us == 28);
  CHECK(lbts({30, 45}, kTimeInfinity, 1000).granted_until_us == 30);
  CHECK(lbts({kTimeInfinity, kTimeInfinity}, kTimeInfinity, 86'400 * kSecond).granted_until_us == 86'400 * kSecond);
  CHECK(lbts({}, kTimeInfinity, 5).granted_until_us == 5);
}

TEST_CASE("lab_grant keeps the single-process tie order") {
  std::map<std::string, TimeUs> minima{{"a", 100}, {"b", 100}, {"c", 250}};
  CHECK(lab_grant("a", minima, 1000).granted_until_us == 100);
  CHECK(lab_grant("b", minima, 1000).granted_until_us == 99);
  CHECK(lab_grant("c", minima, 1000).granted_until_us == 99);
  CHECK(lab_grant("a", {{"a", 5}}, 1000).granted_until_us == 1000);
  CHECK(lab_grant("a", {{"a", 5}, {"b", kTimeInfinity}}, 1000).granted_until_us == 1000);
}

TEST_CASE("run_to_completion") {
  auto registry = gwtest::test_registry();
  SUBCASE("empty scenario") {
    auto m = gwtest::scenario({"lab"}, {}, {}, 5 * kSecond);
    auto compiled = compile(m);
    Kernel k(m, compiled, {"lab"}, registry);
    k.start();
    CHECK(run_to_completion(k, m.run).records.empty());
  }
  SUBCASE("continuous stepping hits every multiple") {
    auto m = gwtest::scenario({"lab"}, {relay("c", "lab", {}, io_ports(), kSecond)}, {}, 5 * kSecond);
    auto compiled = compile(m);
    Kernel k(m, compiled, {"lab"}, registry);
    k.start();
    auto trace = run_to_completion(k, m.run);
    std::vector<TimeUs> steps;
    for (const auto& r : trace.records) {
      if (r.kind == TraceKind::Step) steps.push_back(r.t_us);
    }
    CHECK(steps == std::vector<TimeUs>{kSecond, 2 * kSecond, 3 * kSecond, 4 * kSecond, 5 * kSecond});
    CHECK(trace.records.back().kind == TraceKind::Stop);
    CHECK(trace.records.back().t_us == 5 * kSecond);
    CHECK(trace.records.back().reason == "completed");
  }
  SUBCASE("step count is floor(duration / step)") {
    for (TimeUs step : {TimeUs{3}, TimeUs{7}, TimeUs{250'000}}) {
      auto m = gwtest::scenario({"lab"}, {relay("c", "lab", {}, io_ports(), step)}, {}, 1'000'001);
      auto compiled = compile(m);
      Kernel k(m, compiled, {"lab"}, registry);
      k.start();
      auto trace = run_to_completion(k, m.run);
      auto n = std::count_if(trace.records.begin(), trace.records.end(),
                             [](const TraceRecord& r) { return r.kind == TraceKind::Step; });
      CHECK(n == 1'000'001 / step);
    }
  }
  SUBCASE("equal seeds give byte-identical traces, pacing changes nothing") {
    std::mt19937_64 rng(5);
    for (int i = 0; i < 20; ++i) {
      auto m = gwtest::random_scenario(rng);
      const auto a = gwtest::run_single(m, registry).to_jsonl();
      const auto b = gwtest::run_single(m, registry).to_jsonl();
      CHECK(a == b);
      if (i < 3) {
        m.run.rt_factor = 1000.0;
        CHECK(gwtest::run_single(m, registry).to_jsonl() == a);
      }
    }
  }
  SUBCASE("the run seed changes impaired channels") {
    auto m = gwtest::scenario({"lab"},
                              {relay("a", "lab", {{"interval_us", 1000}, {"outputs", {"o0"}}}, io_ports()),
                               relay("b", "lab", {{"interval_us", 1000}}, io_ports())},
                              {}, kSecond);
    ChannelModel lossy;
    lossy.loss_prob = 0.5;
    m.links = {link("a", "o0", "b", "i0", lossy)};
    const auto a = gwtest::run_single(m, registry).to_jsonl();
    m.run.seed = 1;
    CHECK(gwtest::run_single(m, registry).to_jsonl() != a);
  }
}

TEST_CASE("time grants gate stepping") {
  auto registry = gwtest::test_registry();
  auto m = gwtest::scenario({"lab"}, {relay("c", "lab", {}, io_ports(), kSecond)}, {}, 10 * kSecond);
  auto compiled = compile(m);
  Kernel k(m, compiled, {"lab"}, registry);
  k.start();
  k.set_grant(3 * kSecond);
  k.run_until(kTimeInfinity);
  CHECK(k.t_global() == 3 * kSecond);
  CHECK(k.next_time() == 4 * kSecond);
  CHECK_THROWS_AS(k.advance("c"), Error);
  CHECK_THROWS_AS(k.set_grant(2 * kSecond), Error);
  k.set_grant(20 * kSecond);
  k.run_until(20 * kSecond);
  CHECK(k.t_global() == 10 * kSecond);  // capped by the duration
}

TEST_CASE("remote envelopes go to the outbox and come back through ingest") {
  auto registry = gwtest::test_registry();
  auto m = gwtest::scenario({"x", "y"},
                            {relay("a", "x", {{"first_us", 5}, {"until_us", 5}, {"outputs", {"o0"}}}, io_ports()),
                             relay("b", "y", {{"first_us", 10}}, io_ports())},
                            {link("a", "o0", "b", "i0")}, 100);
  auto compiled = compile(m);
  Kernel kx(m, compiled, {"x"}, registry);
  Kernel ky(m, compiled, {"y"}, registry);
  kx.start();
  ky.start();
  kx.advance("a");
  auto out = kx.take_outbox();
  REQUIRE(out.size() == 1);
  CHECK(out[0].t_send_us == 5);
  CHECK(out[0].t_deliver_us == 5);
  CHECK(out[0].experiment_id == "exp");
  CHECK(kx.take_outbox().empty());
  CHECK(kx.route_destination_lab(0) == "y");
  ky.ingest(out[0]);
  CHECK(ky.pending_count() == 1);
  ky.advance("b");
  CHECK(ky.trace().records.front().kind == TraceKind::Deliver);
  out[0].t_deliver_us = 1;
  CHECK(gwtest::error_code([&] { ky.ingest(out[0]); }) == "CausalityViolation");
  out[0].route_id = 99;
  CHECK_THROWS_AS(ky.ingest(out[0]), Error);
}

TEST_CASE("causality holds over random scenarios") {
  auto registry = gwtest::test_registry();
  std::mt19937_64 rng(77);
  for (int i = 0; i < 150; ++i) {
    auto m = gwtest::random_scenario(rng);
    auto trace = gwtest::run_single(m, registry);
    auto problems = gwtest::causality_problems(trace.records);
    CHECK_MESSAGE(problems.empty(), serialize_scenario(m));
  }
}
