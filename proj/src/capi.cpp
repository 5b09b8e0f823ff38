#include "vstubmw/vstubmw.h"

#include <cstdlib>
#include <cstring>
#include <memory>
#include <string>

#include "vstubmw/harness.hpp"

using namespace vstubmw;

namespace {

thread_local std::string g_last_error;

vsmw_status map_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::kOversizedFrame: return VSMW_ERR_OVERSIZED_FRAME;
    case ErrorCode::kTruncatedFrame: return VSMW_ERR_TRUNCATED_FRAME;
    case ErrorCode::kMalformedPayload: return VSMW_ERR_MALFORMED_PAYLOAD;
    case ErrorCode::kInvalidKey: return VSMW_ERR_INVALID_KEY;
    case ErrorCode::kServiceNotFound: return VSMW_ERR_NOT_FOUND;
    case ErrorCode::kRegistryUnavailable: return VSMW_ERR_REGISTRY_UNAVAILABLE;
    case ErrorCode::kTransportFailure: return VSMW_ERR_TRANSPORT;
    case ErrorCode::kStaleEpoch: return VSMW_ERR_STALE_EPOCH;
    case ErrorCode::kNoSuchMethod: return VSMW_ERR_NO_SUCH_METHOD;
    case ErrorCode::kBadArgs: return VSMW_ERR_BAD_ARGS;
    case ErrorCode::kInternal: return VSMW_ERR_INTERNAL;
    case ErrorCode::kUnresolvableBinding: return VSMW_ERR_UNRESOLVABLE_BINDING;
    case ErrorCode::kKeyMismatch: return VSMW_ERR_KEY_MISMATCH;
    case ErrorCode::kNotBound: return VSMW_ERR_NOT_BOUND;
    case ErrorCode::kDuplicatePolicyId: return VSMW_ERR_DUPLICATE_POLICY;
    case ErrorCode::kParseError: return VSMW_ERR_PARSE;
    case ErrorCode::kPortInUse: return VSMW_ERR_PORT_IN_USE;
    case ErrorCode::kSetupFailure: return VSMW_ERR_SETUP;
    case ErrorCode::kTrialError: return VSMW_ERR_TRIAL;
    case ErrorCode::kInsufficientSamples: return VSMW_ERR_INSUFFICIENT_SAMPLES;
    case ErrorCode::kIoFailure: return VSMW_ERR_IO;
    case ErrorCode::kInvalidArgument: return VSMW_ERR_INVALID_ARG;
  }
  return VSMW_ERR_INTERNAL;
}

template <typename Fn>
vsmw_status guarded(Fn&& fn) {
  try {
    fn();
    return VSMW_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return map_code(e.code());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return VSMW_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return VSMW_ERR_INTERNAL;
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

vsmw_status require_args(bool ok) {
  if (!ok) g_last_error = "null argument";
  return ok ? VSMW_OK : VSMW_ERR_INVALID_ARG;
}

Json parse_required_json(const char* text, const char* what) {
  Json doc = Json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded()) {
    raise(ErrorCode::kParseError, std::string(what) + " is not valid JSON");
  }
  return doc;
}

std::vector<TrialRecord> records_from_json(const Json& arr) {
  if (!arr.is_array()) {
    raise(ErrorCode::kParseError, "expected a JSON array of trial records");
  }
  std::vector<TrialRecord> records;
  for (const Json& item : arr) {
    TrialRecord record;
    record.trial_index = item.at("trial").get<int>();
    record.mode = bench_mode_from_name(item.at("mode").get<std::string>());
    record.latency_ns = item.at("latency_ns").get<uint64_t>();
    record.registry_lookups_delta = item.at("registry_lookups").get<uint64_t>();
    record.cache_outcome = item.at("cache_outcome").get<std::string>();
    records.push_back(std::move(record));
  }
  return records;
}

}  // namespace

struct vsmw_registry_server {
  RegistryServer server;
};
struct vsmw_registry {
  RegistryClient client;
};
struct vsmw_service {
  std::unique_ptr<ServiceHost> host;
};
struct vsmw_cache {
  std::shared_ptr<StubCache> cache;
};
struct vsmw_stub {
  StubPtr stub;
};
struct vsmw_engine {
  std::unique_ptr<ReconfigEngine> engine;
};

extern "C" {

const char* vsmw_status_name(vsmw_status status) {
  switch (status) {
    case VSMW_OK: return "OK";
    case VSMW_ERR_INVALID_ARG: return "InvalidArgument";
    case VSMW_ERR_PARSE: return "ParseError";
    case VSMW_ERR_INVALID_KEY: return "InvalidKey";
    case VSMW_ERR_NOT_FOUND: return "ServiceNotFound";
    case VSMW_ERR_REGISTRY_UNAVAILABLE: return "RegistryUnavailable";
    case VSMW_ERR_TRANSPORT: return "TransportFailure";
    case VSMW_ERR_STALE_EPOCH: return "StaleEpoch";
    case VSMW_ERR_NO_SUCH_METHOD: return "NoSuchMethod";
    case VSMW_ERR_BAD_ARGS: return "BadArgs";
    case VSMW_ERR_INTERNAL: return "Internal";
    case VSMW_ERR_UNRESOLVABLE_BINDING: return "UnresolvableBinding";
    case VSMW_ERR_KEY_MISMATCH: return "KeyMismatch";
    case VSMW_ERR_NOT_BOUND: return "NotBound";
    case VSMW_ERR_DUPLICATE_POLICY: return "DuplicatePolicyId";
    case VSMW_ERR_PORT_IN_USE: return "PortInUse";
    case VSMW_ERR_SETUP: return "SetupFailure";
    case VSMW_ERR_TRIAL: return "TrialError";
    case VSMW_ERR_INSUFFICIENT_SAMPLES: return "InsufficientSamples";
    case VSMW_ERR_IO: return "IoFailure";
    case VSMW_ERR_OVERSIZED_FRAME: return "OversizedFrame";
    case VSMW_ERR_TRUNCATED_FRAME: return "TruncatedFrame";
    case VSMW_ERR_MALFORMED_PAYLOAD: return "MalformedPayload";
  }
  return "Unknown";
}

const char* vsmw_last_error(void) { return g_last_error.c_str(); }

void vsmw_string_free(char* s) { std::free(s); }

/* ---- registry server ---- */

vsmw_status vsmw_registry_server_start(const char* host, uint16_t port,
                                       vsmw_registry_server** out) {
  if (auto rc = require_args(host && out)) return rc;
  return guarded([&] {
    auto server = std::make_unique<vsmw_registry_server>();
    server->server.start(HostPort{host, port});
    *out = server.release();
  });
}

uint16_t vsmw_registry_server_port(const vsmw_registry_server* server) {
  return server ? server->server.port() : 0;
}

void vsmw_registry_server_free(vsmw_registry_server* server) {
  if (!server) return;
  server->server.stop();
  delete server;
}

/* ---- registry client ---- */

vsmw_status vsmw_registry_open(const char* addr, vsmw_registry** out) {
  if (auto rc = require_args(addr && out)) return rc;
  return guarded([&] {
    *out = new vsmw_registry{RegistryClient(HostPort::parse(addr))};
  });
}

vsmw_status vsmw_registry_register(vsmw_registry* registry, const char* key,
                                   const char* type, const char* host,
                                   uint16_t port, uint64_t service_id,
                                   char** out_descriptor_json) {
  if (auto rc = require_args(registry && key && type && host)) return rc;
  return guarded([&] {
    ServiceDescription description;
    description.key = key;
    description.service_type = type;
    ProxyDescriptor descriptor =
        registry->client.register_service(description, host, port, service_id);
    if (out_descriptor_json) {
      *out_descriptor_json = dup_string(descriptor.to_json().dump());
    }
  });
}

vsmw_status vsmw_registry_lookup(vsmw_registry* registry, const char* key,
                                 char** out_descriptor_json) {
  if (auto rc = require_args(registry && key && out_descriptor_json)) return rc;
  return guarded([&] {
    *out_descriptor_json =
        dup_string(registry->client.lookup(key).to_json().dump());
  });
}

vsmw_status vsmw_registry_unregister(vsmw_registry* registry, const char* key,
                                     uint64_t epoch) {
  if (auto rc = require_args(registry && key)) return rc;
  return guarded([&] { registry->client.unregister(key, epoch); });
}

vsmw_status vsmw_registry_list(vsmw_registry* registry, const char* prefix,
                               char** out_json) {
  if (auto rc = require_args(registry && prefix && out_json)) return rc;
  return guarded([&] {
    Json arr = Json::array();
    for (const auto& description : registry->client.list(prefix)) {
      arr.push_back(description.to_json());
    }
    *out_json = dup_string(arr.dump());
  });
}

vsmw_status vsmw_registry_stats(vsmw_registry* registry, char** out_json) {
  if (auto rc = require_args(registry && out_json)) return rc;
  return guarded([&] {
    RegistryStats stats = registry->client.stats();
    *out_json = dup_string(Json{{"lookup_count", stats.lookup_count},
                                {"register_count", stats.register_count},
                                {"entry_count", stats.entry_count}}
                               .dump());
  });
}

void vsmw_registry_free(vsmw_registry* registry) { delete registry; }

/* ---- service host ---- */

vsmw_status vsmw_service_start(const char* registry_addr, const char* key,
                               const char* type, const char* listen_host,
                               uint16_t port, vsmw_service** out) {
  if (auto rc = require_args(registry_addr && key && type && listen_host && out))
    return rc;
  return guarded([&] {
    auto host = std::make_unique<ServiceHost>(
        make_device_service(type, key), HostPort::parse(registry_addr),
        HostPort{listen_host, port});
    *out = new vsmw_service{std::move(host)};
  });
}

vsmw_status vsmw_service_descriptor(const vsmw_service* service,
                                    char** out_json) {
  if (auto rc = require_args(service && out_json)) return rc;
  return guarded([&] {
    *out_json = dup_string(service->host->descriptor().to_json().dump());
  });
}

void vsmw_service_stop(vsmw_service* service) {
  if (service) service->host->stop();
}

void vsmw_service_free(vsmw_service* service) { delete service; }

/* ---- cache and stubs ---- */

vsmw_status vsmw_cache_new(const char* registry_addr, size_t capacity,
                           vsmw_cache** out) {
  if (auto rc = require_args(registry_addr && out)) return rc;
  return guarded([&] {
    std::optional<size_t> cap;
    if (capacity > 0) cap = capacity;
    *out = new vsmw_cache{StubCache::create(HostPort::parse(registry_addr), cap)};
  });
}

vsmw_status vsmw_cache_get(vsmw_cache* cache, const char* key, int* out_hit,
                           vsmw_stub** out) {
  if (auto rc = require_args(cache && key && out)) return rc;
  return guarded([&] {
    ServiceDescription description;
    description.key = key;
    GetResult got = cache->cache->get_virtual_stub(description);
    if (out_hit) *out_hit = got.hit ? 1 : 0;
    *out = new vsmw_stub{std::move(got.stub)};
  });
}

vsmw_status vsmw_cache_invalidate(vsmw_cache* cache, const char* key,
                                  int* out_removed) {
  if (auto rc = require_args(cache && key)) return rc;
  return guarded([&] {
    bool removed = cache->cache->invalidate(key);
    if (out_removed) *out_removed = removed ? 1 : 0;
  });
}

vsmw_status vsmw_cache_clear(vsmw_cache* cache, size_t* out_removed) {
  if (auto rc = require_args(cache != nullptr)) return rc;
  return guarded([&] {
    size_t removed = cache->cache->clear();
    if (out_removed) *out_removed = removed;
  });
}

vsmw_status vsmw_cache_stats(const vsmw_cache* cache, char** out_json) {
  if (auto rc = require_args(cache && out_json)) return rc;
  return guarded([&] {
    *out_json = dup_string(cache->cache->stats().to_json().dump());
  });
}

vsmw_status vsmw_cache_dump(const vsmw_cache* cache, char** out_json) {
  if (auto rc = require_args(cache && out_json)) return rc;
  return guarded([&] { *out_json = dup_string(cache->cache->dump().dump()); });
}

void vsmw_cache_free(vsmw_cache* cache) { delete cache; }

vsmw_status vsmw_stub_invoke(vsmw_stub* stub, const char* method,
                             const char* args_json, char** out_value_json) {
  if (auto rc = require_args(stub && method)) return rc;
  return guarded([&] {
    Json args = args_json ? parse_required_json(args_json, "args")
                          : Json::object();
    Json value = stub->stub->invoke(method, args);
    if (out_value_json) *out_value_json = dup_string(value.dump());
  });
}

vsmw_status vsmw_stub_snapshot(const vsmw_stub* stub, char** out_json) {
  if (auto rc = require_args(stub && out_json)) return rc;
  return guarded([&] {
    *out_json = dup_string(stub->stub->snapshot().to_json().dump());
  });
}

vsmw_status vsmw_stub_counters(const vsmw_stub* stub, uint64_t* calls,
                               uint64_t* failovers, uint64_t* retries) {
  if (auto rc = require_args(stub != nullptr)) return rc;
  return guarded([&] {
    StubCounters counters = stub->stub->counters();
    if (calls) *calls = counters.calls_total;
    if (failovers) *failovers = counters.failovers;
    if (retries) *retries = counters.retries;
  });
}

void vsmw_stub_free(vsmw_stub* stub) { delete stub; }

/* ---- engine ---- */

vsmw_status vsmw_engine_new(vsmw_cache* cache, int bypass, vsmw_engine** out) {
  if (auto rc = require_args(cache && out)) return rc;
  return guarded([&] {
    auto engine = std::make_unique<ReconfigEngine>(
        cache->cache, bypass ? BindPath::kBypass : BindPath::kCache);
    *out = new vsmw_engine{std::move(engine)};
  });
}

vsmw_status vsmw_engine_load_policies(vsmw_engine* engine,
                                      const char* policies_json,
                                      size_t* out_count) {
  if (auto rc = require_args(engine && policies_json)) return rc;
  return guarded([&] {
    size_t count = engine->engine->load_policies(policies_json);
    if (out_count) *out_count = count;
  });
}

vsmw_status vsmw_engine_submit_event(vsmw_engine* engine, const char* event_json,
                                     char** out_reports_json) {
  if (auto rc = require_args(engine && event_json)) return rc;
  return guarded([&] {
    ContextEvent event =
        ContextEvent::from_json(parse_required_json(event_json, "event"));
    Json reports = Json::array();
    for (const auto& report : engine->engine->submit_event(event)) {
      reports.push_back(report.to_json());
    }
    if (out_reports_json) *out_reports_json = dup_string(reports.dump());
  });
}

vsmw_status vsmw_engine_bind(vsmw_engine* engine, const char* user,
                             const char* key, char** out_report_json) {
  if (auto rc = require_args(engine && user && key)) return rc;
  return guarded([&] {
    ServiceDescription description;
    description.key = key;
    BindingReport report =
        engine->engine->bind(engine->engine->user(user), description);
    if (out_report_json) *out_report_json = dup_string(report.to_json().dump());
  });
}

vsmw_status vsmw_engine_unbind(vsmw_engine* engine, const char* user,
                               const char* key, int* out_removed) {
  if (auto rc = require_args(engine && user && key)) return rc;
  return guarded([&] {
    bool removed = engine->engine->unbind(engine->engine->user(user), key);
    if (out_removed) *out_removed = removed ? 1 : 0;
  });
}

vsmw_status vsmw_engine_invoke_bound(vsmw_engine* engine, const char* user,
                                     const char* key, const char* method,
                                     const char* args_json,
                                     char** out_value_json) {
  if (auto rc = require_args(engine && user && key && method)) return rc;
  return guarded([&] {
    Json args =
        args_json ? parse_required_json(args_json, "args") : Json::object();
    Json value =
        engine->engine->invoke_bound(engine->engine->user(user), key, method, args);
    if (out_value_json) *out_value_json = dup_string(value.dump());
  });
}

void vsmw_engine_free(vsmw_engine* engine) { delete engine; }

/* ---- harness ---- */

vsmw_status vsmw_bench_run(const char* config_json, char** out_result_json) {
  if (auto rc = require_args(config_json && out_result_json)) return rc;
  return guarded([&] {
    BenchConfig config =
        BenchConfig::from_json(parse_required_json(config_json, "config"));
    BenchResult result = run_bench(config);
    *out_result_json = dup_string(result.to_json().dump());
  });
}

vsmw_status vsmw_scenario_run(const char* scenario_path, const char* self_exe,
                              char** out_report_json) {
  if (auto rc = require_args(scenario_path != nullptr)) return rc;
  return guarded([&] {
    ScenarioOptions options;
    if (self_exe) options.self_exe = self_exe;
    ScenarioReport report = run_scenario_file(scenario_path, options);
    if (out_report_json) *out_report_json = dup_string(report.report.dump());
    if (!report.ok) {
      raise(ErrorCode::kTrialError, "one or more scenario actions failed");
    }
  });
}

vsmw_status vsmw_report_csv(const char* records_json, char** out_csv) {
  if (auto rc = require_args(records_json && out_csv)) return rc;
  return guarded([&] {
    auto records =
        records_from_json(parse_required_json(records_json, "records"));
    *out_csv = dup_string(emit_csv(records));
  });
}

vsmw_status vsmw_report_text(const char* records_json, char** out_text) {
  if (auto rc = require_args(records_json && out_text)) return rc;
  return guarded([&] {
    auto records =
        records_from_json(parse_required_json(records_json, "records"));
    *out_text = dup_string(emit_text(records));
  });
}

vsmw_status vsmw_csv_parse(const char* csv_text, char** out_json) {
  if (auto rc = require_args(csv_text && out_json)) return rc;
  return guarded([&] {
    std::vector<TrialRecord> records = parse_csv(csv_text);
    Json records_json = Json::array();
    for (const auto& record : records) records_json.push_back(record.to_json());
    Json summaries = Json::array();
    for (const auto& summary : summarize_by_mode(records)) {
      summaries.push_back(summary.to_json());
    }
    *out_json = dup_string(
        Json{{"records", records_json}, {"summaries", summaries}}.dump());
  });
}

}  // extern "C"
