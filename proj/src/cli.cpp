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

#include "gridweave/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include "gridweave/federation.hpp"
#include "gridweave/kernel.hpp"
#include "gridweave/plan.hpp"
#include "gridweave/scenario.hpp"

namespace gridweave::cli {

namespace {

using Clock = std::chrono::steady_clock;

std::optional<std::string> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Loads and parses a scenario; prints the reason and returns nullopt on
// unreadable, malformed or schema-invalid input.
std::optional<ScenarioModel> load_scenario(const std::string& path, std::ostream& err) {
  auto text = read_file(path);
  if (!text) {
    err << "cannot read " << path << "\n";
    return std::nullopt;
  }
  try {
    return parse_scenario(*text);
  } catch (const SyntaxError& e) {
    err << e.what() << "\n";
  } catch (const SchemaError& e) {
    err << e.what() << "\n";
  }
  return std::nullopt;
}

void print_violations(const std::vector<Violation>& violations, std::ostream& os) {
  for (const auto& v : violations) os << v.code << " " << v.path << " " << v.detail << "\n";
}

std::optional<Endpoint> parse_bind(const std::string& text) {
  if (text.find(':') == std::string::npos) return Endpoint{text, kDefaultPort};
  return parse_endpoint(text);
}

StopReason reason_of(const Trace& trace) {
  for (auto it = trace.records.rbegin(); it != trace.records.rend(); ++it) {
    if (it->kind == TraceKind::Stop && it->reason) {
      return parse_stop_reason(*it->reason).value_or(StopReason::OperatorAbort);
    }
  }
  return trace.aborted ? StopReason::ComponentFailure : StopReason::Completed;
}

int finish_run(const RunOptions& options, const std::string& experiment_id, const Trace& trace, StopReason reason,
               TimeUs final_t, Clock::time_point started, std::ostream& out, std::ostream& err) {
  std::ofstream file(options.out, std::ios::binary | std::ios::trunc);
  if (!file) {
    err << "cannot write " << options.out << "\n";
    return kExitUsage;
  }
  file << trace.to_jsonl();
  file.close();

  RunReport report;
  report.experiment_id = experiment_id;
  report.reason = reason;
  report.completed = reason == StopReason::Completed;
  report.final_t_us = final_t;
  report.trace_path = options.out;
  report.wall_clock_s = std::chrono::duration<double>(Clock::now() - started).count();
  out << report_json(report) << "\n";
  if (!trace.failure.empty()) err << trace.failure << "\n";
  return report.completed ? kExitOk : kExitFailure;
}

FederatedResult run_as_master(Kernel& kernel, const std::string& lab, const ScenarioModel& model,
                              const CompiledScenario& compiled, const RunOptions& options, std::ostream& err) {
  const std::string& experiment = kernel.run().experiment_id;
  auto fail_early = [&](StopReason reason) {
    kernel.stop_all(reason, kernel.t_global());
    return FederatedResult{kernel.trace(), reason};
  };

  std::optional<Endpoint> bind = options.bind ? parse_bind(*options.bind)
                                              : parse_endpoint(model.find_lab(lab)->endpoint);
  if (!bind) throw Error("BadBind", "cannot parse bind address");
  Listener listener(bind->host, bind->port);

  std::set<std::string> expected;
  for (const auto& [member, endpoint] : compiled.topology.members) {
    if (member != lab) expected.insert(member);
  }

  auto inbox = std::make_shared<Inbox>();
  std::vector<std::unique_ptr<Session>> sessions;
  std::map<std::string, Session*> peers;
  const auto deadline = Clock::now() + kConnectTimeout;
  try {
    while (peers.size() < expected.size()) {
      const auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now());
      if (remaining.count() <= 0) throw Error("PeerDisconnect", "PeerDisconnect: members did not connect in time");
      auto session = std::make_unique<Session>(listener.accept(remaining), lab);
      try {
        session->handshake(experiment, inbox, remaining);
      } catch (const Error& e) {
        err << e.what() << "\n";
        continue;
      }
      const std::string peer = session->peer_lab();
      if (!expected.contains(peer) || peers.contains(peer)) {
        err << "ignoring unexpected peer '" << peer << "'\n";
        session->release(experiment);
        continue;
      }
      peers[peer] = session.get();
      sessions.push_back(std::move(session));
    }
  } catch (const Error& e) {
    err << e.what() << "\n";
    stop_broadcast(std::string(to_string(StopReason::PeerDisconnect)), experiment, peers, *inbox);
    return fail_early(StopReason::PeerDisconnect);
  }
  return run_master(kernel, lab, compiled, peers, *inbox);
}

FederatedResult run_as_member(Kernel& kernel, const std::string& lab, const ScenarioModel& model,
                              const CompiledScenario& compiled, std::ostream& err) {
  const std::string& experiment = kernel.run().experiment_id;
  auto endpoint = parse_endpoint(model.find_lab(compiled.topology.master)->endpoint);
  try {
    if (!endpoint) throw Error("PeerDisconnect", "PeerDisconnect: bad master endpoint");
    Session session(connect_with_retry(endpoint->host, endpoint->port), lab);
    auto inbox = std::make_shared<Inbox>();
    session.handshake(experiment, inbox);
    return run_member(kernel, lab, compiled, session, *inbox);
  } catch (const Error& e) {
    if (e.code() != "PeerDisconnect" && e.code() != "VersionMismatch") throw;
    err << e.what() << "\n";
    kernel.stop_all(StopReason::PeerDisconnect, kernel.t_global());
    return {kernel.trace(), StopReason::PeerDisconnect};
  }
}

}  // namespace

std::string report_json(const RunReport& report) {
  Json j = Json::object();
  j["experiment_id"] = report.experiment_id;
  j["completed"] = report.completed;
  j["reason"] = std::string(to_string(report.reason));
  j["final_t_us"] = report.final_t_us;
  j["trace_path"] = report.trace_path;
  j["wall_clock_s"] = report.wall_clock_s;
  return canonical_dump(j);
}

int cmd_validate(const std::string& scenario_path, std::ostream& out, std::ostream& err) {
  auto model = load_scenario(scenario_path, err);
  if (!model) return kExitUsage;
  auto violations = validate(*model);
  print_violations(violations, out);
  return violations.empty() ? kExitOk : kExitFailure;
}

int cmd_plan(const std::string& scenario_path, std::ostream& out, std::ostream& err) {
  auto model = load_scenario(scenario_path, err);
  if (!model) return kExitUsage;
  if (auto violations = validate(*model); !violations.empty()) {
    print_violations(violations, err);
    return kExitFailure;
  }
  try {
    const CompiledScenario compiled = compile(*model);
    Json plans = Json::array();
    for (const auto& [lab, plan] : compiled.plans) plans.push_back(plan_to_json(plan));
    out << plans.dump(2) << "\n";
    return kExitOk;
  } catch (const CompileError& e) {
    err << e.code() << " " << e.what() << "\n";
    return kExitFailure;
  }
}

int cmd_run(const RunOptions& options, std::ostream& out, std::ostream& err) {
  const auto started = Clock::now();
  if (options.single_process == options.lab.has_value()) {
    err << "run needs exactly one of --single-process or --lab\n";
    return kExitUsage;
  }
  auto model = load_scenario(options.scenario_path, err);
  if (!model) return kExitUsage;
  if (options.seed) model->run.seed = *options.seed;
  if (options.rt_factor) model->run.rt_factor = *options.rt_factor;
  if (auto violations = validate(*model); !violations.empty()) {
    print_violations(violations, err);
    return kExitUsage;
  }

  try {
    const CompiledScenario compiled = compile(*model);
    const ModelRegistry registry = ModelRegistry::builtin();

    std::vector<std::string> hosted;
    if (options.single_process) {
      for (const auto& [lab, plan] : compiled.plans) hosted.push_back(lab);
    } else {
      if (!compiled.plans.contains(*options.lab)) {
        err << "unknown lab '" << *options.lab << "'\n";
        return kExitUsage;
      }
      hosted.push_back(*options.lab);
    }

    Kernel kernel(*model, compiled, hosted, registry);
    try {
      kernel.start();
    } catch (const Error& e) {
      if (e.code() != "InitFailure") throw;
      err << e.what() << "\n";
      kernel.stop_all(StopReason::ComponentFailure, 0);
      return finish_run(options, model->run.experiment_id, kernel.trace(), StopReason::ComponentFailure, 0, started,
                        out, err);
    }

    if (options.single_process) {
      const Trace trace = run_to_completion(kernel, model->run);
      const StopReason reason = reason_of(trace);
      const TimeUs final_t = reason == StopReason::Completed ? model->run.duration_us : kernel.t_global();
      return finish_run(options, model->run.experiment_id, trace, reason, final_t, started, out, err);
    }

    const std::string& lab = *options.lab;
    const FederatedResult result = lab == compiled.topology.master
                                       ? run_as_master(kernel, lab, *model, compiled, options, err)
                                       : run_as_member(kernel, lab, *model, compiled, err);
    const TimeUs final_t = result.completed() ? model->run.duration_us : kernel.t_global();
    return finish_run(options, model->run.experiment_id, result.trace, result.reason, final_t, started, out, err);
  } catch (const Error& e) {
    err << e.what() << "\n";
    return kExitUsage;
  }
}

int cmd_results(const ResultsOptions& options, std::ostream& out, std::ostream& err) {
  auto text = read_file(options.trace_path);
  if (!text) {
    err << "cannot read " << options.trace_path << "\n";
    return kExitUsage;
  }
  std::vector<TraceRecord> records;
  try {
    records = parse_trace(*text);
  } catch (const Error& e) {
    err << e.what() << "\n";
    return kExitUsage;
  }

  std::string csv = "t_us,component,port,value\n";
  for (const auto& r : records) {
    if (r.kind != TraceKind::Deliver) continue;
    if (options.component && r.component != *options.component) continue;
    if (options.port && r.port.value_or("") != *options.port) continue;
    if (options.from_us && r.t_us < *options.from_us) continue;
    if (options.to_us && r.t_us > *options.to_us) continue;
    csv += std::to_string(r.t_us);
    csv += ',';
    csv += r.component;
    csv += ',';
    csv += r.port.value_or("");
    csv += ',';
    if (r.value) append_real(csv, *r.value);
    csv += '\n';
  }
  out << csv;
  return kExitOk;
}

int main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"gridweave: distributed multi-lab co-simulation"};
  app.require_subcommand(1);

  std::string scenario_path;
  auto* validate_cmd = app.add_subcommand("validate", "check a scenario file");
  validate_cmd->add_option("scenario", scenario_path)->required();

  auto* plan_cmd = app.add_subcommand("plan", "print the per-lab execution plans");
  plan_cmd->add_option("scenario", scenario_path)->required();

  RunOptions run;
  std::string lab;
  std::uint64_t seed = 0;
  double rt_factor = 0;
  auto* run_cmd = app.add_subcommand("run", "execute an experiment");
  run_cmd->add_option("scenario", run.scenario_path)->required();
  auto* single = run_cmd->add_flag("--single-process", run.single_process, "run every lab in this process");
  auto* lab_opt = run_cmd->add_option("--lab", lab, "run one lab coordinator");
  single->excludes(lab_opt);
  run_cmd->add_option("--out", run.out, "trace file")->capture_default_str();
  auto* seed_opt = run_cmd->add_option("--seed", seed, "override run.seed");
  auto* rt_opt = run_cmd->add_option("--rt-factor", rt_factor, "pace simulated time against the wall clock");

  ResultsOptions results;
  std::string component, port, from, to;
  auto* results_cmd = app.add_subcommand("results", "export delivered values as CSV");
  results_cmd->add_option("trace", results.trace_path)->required();
  auto* component_opt = results_cmd->add_option("--component", component);
  auto* port_opt = results_cmd->add_option("--port", port);
  auto* from_opt = results_cmd->add_option("--from", from, "inclusive lower bound, e.g. 60s");
  auto* to_opt = results_cmd->add_option("--to", to, "inclusive upper bound");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
  }

  if (validate_cmd->parsed()) return cmd_validate(scenario_path, out, err);
  if (plan_cmd->parsed()) return cmd_plan(scenario_path, out, err);
  if (run_cmd->parsed()) {
    if (*lab_opt) run.lab = lab;
    if (*seed_opt) run.seed = seed;
    if (*rt_opt) run.rt_factor = rt_factor;
    if (const char* bind = std::getenv("GRIDWEAVE_BIND"); bind != nullptr && *bind != '\0') run.bind = bind;
    return cmd_run(run, out, err);
  }
  if (*component_opt) results.component = component;
  if (*port_opt) results.port = port;
  for (auto [opt, text, target] : {std::tuple{from_opt, &from, &results.from_us},
                                   std::tuple{to_opt, &to, &results.to_us}}) {
    if (!*opt) continue;
    *target = parse_duration(*text);
    if (!*target) {
      err << "bad time '" << *text << "'\n";
      return kExitUsage;
    }
  }
  return cmd_results(results, out, err);
}

}  // namespace gridweave::cli
