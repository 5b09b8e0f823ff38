#include <fstream>
#include <sstream>
#include <thread>

#include "vstubmw/harness.hpp"

namespace vstubmw {

namespace {

[[noreturn]] void scenario_fail(const std::string& what) {
  raise(ErrorCode::kParseError, "scenario: " + what);
}

Json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    raise(ErrorCode::kIoFailure, "cannot open " + path);
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  Json doc = Json::parse(buffer.str(), nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded()) {
    raise(ErrorCode::kParseError, path + " is not valid JSON");
  }
  return doc;
}

}  // namespace

ScenarioReport run_scenario_file(const std::string& path,
                                 const ScenarioOptions& options) {
  return run_scenario_json(load_json_file(path), options);
}

// Schema (docs/formats.md):
//   {"registry": {"listen": "host:port"}?,          default 127.0.0.1:0
//    "services": [{"key","type","port"?}...],
//    "users": ["alice", ...]?,
//    "policies": [...] | "policy_file": "path",
//    "trace": [{"t_ms", "event_type", "user", "location", "phase"} |
//              {"t_ms", "action": "stop"|"restart", "service": key}]}
ScenarioReport run_scenario_json(const Json& scenario,
                                 const ScenarioOptions& options) {
  if (!scenario.is_object()) scenario_fail("top level must be an object");
  if (!scenario.contains("services") || !scenario.at("services").is_array()) {
    scenario_fail("missing 'services' array");
  }
  if (!scenario.contains("trace") || !scenario.at("trace").is_array()) {
    scenario_fail("missing 'trace' array");
  }

  Json policies;
  if (scenario.contains("policies")) {
    policies = Json{{"policies", scenario.at("policies")}};
  } else if (scenario.contains("policy_file")) {
    policies = load_json_file(scenario.at("policy_file").get<std::string>());
  } else {
    scenario_fail("needs 'policies' (inline) or 'policy_file'");
  }

  HostPort registry_listen{"127.0.0.1", 0};
  if (scenario.contains("registry") && scenario.at("registry").contains("listen")) {
    registry_listen =
        HostPort::parse(scenario.at("registry").at("listen").get<std::string>());
  }

  Orchestrator orchestrator({options.self_exe});
  orchestrator.start_registry(registry_listen);
  for (const Json& svc : scenario.at("services")) {
    if (!svc.contains("key") || !svc.contains("type")) {
      scenario_fail("each service needs 'key' and 'type'");
    }
    orchestrator.start_service(svc.at("key").get<std::string>(),
                               svc.at("type").get<std::string>(),
                               svc.value("port", uint16_t{0}));
  }

  auto cache = StubCache::create(orchestrator.registry_addr());
  ReconfigEngine engine(cache);
  engine.load_policies_json(policies);
  if (scenario.contains("users")) {
    for (const Json& u : scenario.at("users")) {
      engine.user(u.get<std::string>());
    }
  }

  ScenarioReport result;
  Json events = Json::array();
  uint64_t start_ns = mono_now_ns();

  for (const Json& step : scenario.at("trace")) {
    uint64_t t_ms = step.value("t_ms", uint64_t{0});
    uint64_t due_ns = start_ns + t_ms * 1'000'000ull;
    uint64_t now = mono_now_ns();
    if (due_ns > now) {
      std::this_thread::sleep_for(std::chrono::nanoseconds(due_ns - now));
    }

    if (step.contains("action")) {
      std::string action = step.at("action").get<std::string>();
      std::string service = step.value("service", std::string{});
      Json entry{{"t_ms", t_ms}, {"directive", action}, {"service", service}};
      try {
        if (action == "stop") {
          orchestrator.stop_service(service);
        } else if (action == "restart") {
          orchestrator.restart_service(
              service, step.value("port", uint16_t{0}));
        } else {
          scenario_fail("unknown trace action '" + action + "'");
        }
        entry["outcome"] = "ok";
      } catch (const Error& e) {
        if (e.code() == ErrorCode::kParseError) throw;
        entry["outcome"] = "error";
        entry["error"] = e.what();
        result.ok = false;
      }
      events.push_back(std::move(entry));
      continue;
    }

    ContextEvent event = ContextEvent::from_json(step);
    event.emitted_at = mono_now_ns();
    std::vector<ActionRecord> records = engine.submit_event_detailed(event);
    Json actions = Json::array();
    for (const auto& record : records) {
      if (record.outcome == "error") result.ok = false;
      actions.push_back(record.to_json());
    }
    events.push_back(Json{{"t_ms", t_ms},
                          {"event", event.to_json()},
                          {"actions", std::move(actions)}});
  }

  // Post-trace checks run against the live incarnations, outside any
  // measured interval.
  Json final_states = Json::object();
  uint64_t failovers = 0;
  for (const auto& key : orchestrator.service_keys()) {
    if (!orchestrator.service_running(key)) {
      final_states[key] = Json{{"stopped", true}};
      continue;
    }
    try {
      final_states[key] = raw_invoke(orchestrator.current_descriptor(key),
                                     "getState", Json::object());
    } catch (const Error& e) {
      final_states[key] = Json{{"error", e.what()}};
      result.ok = false;
    }
  }
  // Failovers observed by the stubs the cache still holds.
  for (const auto& key : orchestrator.service_keys()) {
    if (StubPtr stub = cache->peek(key)) {
      failovers += stub->counters().failovers;
    }
  }

  result.report = Json{{"ok", result.ok},
                       {"events", std::move(events)},
                       {"final_states", std::move(final_states)},
                       {"cache_stats", cache->stats().to_json()},
                       {"cache_dump", cache->dump()},
                       {"failovers", failovers}};
  return result;
}

}  // namespace vstubmw
