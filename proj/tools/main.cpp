// vstub-mw: registry/service daemons, the reconfiguration benchmark, the
// scenario runner, and cache diagnostics. Everything goes through the C API
// of libvstubmw.

#include <pthread.h>
#include <signal.h>
#include <unistd.h>

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "vstubmw/vstubmw.h"

namespace {

using nlohmann::json;

// Exit codes: 0 success, 2 setup failure, 3 trial error, 4 parse error.
int exit_code_for(vsmw_status status) {
  switch (status) {
    case VSMW_OK: return 0;
    case VSMW_ERR_PARSE:
    case VSMW_ERR_MALFORMED_PAYLOAD: return 4;
    case VSMW_ERR_SETUP:
    case VSMW_ERR_PORT_IN_USE:
    case VSMW_ERR_REGISTRY_UNAVAILABLE:
    case VSMW_ERR_INVALID_ARG: return 2;
    default: return 3;
  }
}

int fail(vsmw_status status) {
  std::cerr << "error: " << vsmw_status_name(status) << ": "
            << vsmw_last_error() << "\n";
  return exit_code_for(status);
}

struct OwnedString {
  char* ptr = nullptr;
  ~OwnedString() { vsmw_string_free(ptr); }
  std::string str() const { return ptr ? std::string(ptr) : std::string{}; }
};

void split_addr(const std::string& addr, std::string* host, uint16_t* port) {
  auto colon = addr.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == addr.size()) {
    throw CLI::ValidationError("address", "expected host:port: " + addr);
  }
  unsigned long parsed = 0;
  try {
    parsed = std::stoul(addr.substr(colon + 1));
  } catch (const std::exception&) {
    throw CLI::ValidationError("address", "bad port in " + addr);
  }
  if (parsed > 65535) {
    throw CLI::ValidationError("address", "port out of range in " + addr);
  }
  *host = addr.substr(0, colon);
  *port = static_cast<uint16_t>(parsed);
}

void wait_for_shutdown_signal() {
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);
  int sig = 0;
  sigwait(&set, &sig);
}

int cmd_registry(const std::string& listen) {
  std::string host;
  uint16_t port = 0;
  split_addr(listen, &host, &port);
  vsmw_registry_server* server = nullptr;
  if (vsmw_status rc = vsmw_registry_server_start(host.c_str(), port, &server)) {
    return fail(rc);
  }
  // Parents watch for this line; stay quiet afterwards.
  std::printf("READY {\"port\":%u}\n", vsmw_registry_server_port(server));
  std::fflush(stdout);
  wait_for_shutdown_signal();
  vsmw_registry_server_free(server);
  return 0;
}

int cmd_service(const std::string& registry, const std::string& key,
                const std::string& type, const std::string& listen) {
  std::string host;
  uint16_t port = 0;
  split_addr(listen, &host, &port);
  vsmw_service* service = nullptr;
  if (vsmw_status rc = vsmw_service_start(registry.c_str(), key.c_str(),
                                          type.c_str(), host.c_str(), port,
                                          &service)) {
    return fail(rc);
  }
  OwnedString descriptor;
  vsmw_service_descriptor(service, &descriptor.ptr);
  json desc = json::parse(descriptor.str());
  std::printf("READY {\"port\":%u,\"descriptor\":%s}\n",
              desc.at("port").get<unsigned>(), descriptor.ptr);
  std::fflush(stdout);
  wait_for_shutdown_signal();
  // Leaves the registry entry in place: a stopped service goes stale, it
  // does not vanish.
  vsmw_service_stop(service);
  vsmw_service_free(service);
  return 0;
}

std::string self_exe_path() {
  char buf[4096];
  ssize_t n = ::readlink("/proc/self/exe", buf, sizeof(buf) - 1);
  if (n <= 0) return {};
  buf[n] = '\0';
  return std::string(buf);
}

int cmd_bench(const std::vector<std::string>& modes, int trials, int bindings,
              uint64_t seed, int warmup, int pace_ms,
              const std::string& out_path, bool text, bool in_process) {
  json all_records = json::array();
  for (const std::string& mode : modes) {
    json config{{"mode", mode},
                {"trials", trials},
                {"bindings_per_trigger", bindings},
                {"seed", seed},
                {"warmup_trials", warmup},
                {"inter_trial_delay_ms", pace_ms},
                {"self_exe", in_process ? std::string{} : self_exe_path()}};
    if (!out_path.empty() && out_path != "-") {
      config["partial_csv_path"] = out_path;  // flushed on a trial error
    }
    OwnedString result;
    std::string config_text = config.dump();
    if (vsmw_status rc = vsmw_bench_run(config_text.c_str(), &result.ptr)) {
      return fail(rc);
    }
    json mode_result = json::parse(result.str());
    for (auto& record : mode_result.at("records")) {
      all_records.push_back(std::move(record));
    }
  }

  std::string records_text = all_records.dump();
  OwnedString csv;
  if (vsmw_status rc = vsmw_report_csv(records_text.c_str(), &csv.ptr)) {
    return fail(rc);
  }
  if (out_path.empty() || out_path == "-") {
    std::cout << csv.str();
  } else {
    std::ofstream out(out_path);
    if (!out) {
      std::cerr << "error: cannot write " << out_path << "\n";
      return 3;
    }
    out << csv.str();
  }
  if (text) {
    OwnedString report;
    if (vsmw_status rc = vsmw_report_text(records_text.c_str(), &report.ptr)) {
      return fail(rc);
    }
    std::cout << report.str();
  }
  return 0;
}

int cmd_scenario_run(const std::string& path, const std::string& report_path,
                     bool in_process) {
  OwnedString report;
  std::string self = in_process ? std::string{} : self_exe_path();
  vsmw_status rc = vsmw_scenario_run(path.c_str(), self.c_str(), &report.ptr);
  if (report.ptr && !report_path.empty()) {
    std::ofstream out(report_path);
    out << json::parse(report.str()).dump(2) << "\n";
  } else if (report.ptr) {
    std::cout << json::parse(report.str()).dump(2) << "\n";
  }
  if (rc != VSMW_OK) return fail(rc);
  return 0;
}

int cmd_cache_dump(const std::string& registry, const std::string& prefix) {
  vsmw_registry* client = nullptr;
  if (vsmw_status rc = vsmw_registry_open(registry.c_str(), &client)) {
    return fail(rc);
  }
  std::unique_ptr<vsmw_registry, decltype(&vsmw_registry_free)> client_guard(
      client, &vsmw_registry_free);
  OwnedString listing;
  if (vsmw_status rc = vsmw_registry_list(client, prefix.c_str(), &listing.ptr)) {
    return fail(rc);
  }

  vsmw_cache* cache = nullptr;
  if (vsmw_status rc = vsmw_cache_new(registry.c_str(), 0, &cache)) {
    return fail(rc);
  }
  std::unique_ptr<vsmw_cache, decltype(&vsmw_cache_free)> cache_guard(
      cache, &vsmw_cache_free);
  for (const auto& description : json::parse(listing.str())) {
    vsmw_stub* stub = nullptr;
    std::string key = description.at("key").get<std::string>();
    if (vsmw_status rc = vsmw_cache_get(cache, key.c_str(), nullptr, &stub)) {
      return fail(rc);
    }
    vsmw_stub_free(stub);
  }
  OwnedString dump;
  if (vsmw_status rc = vsmw_cache_dump(cache, &dump.ptr)) {
    return fail(rc);
  }
  std::cout << json::parse(dump.str()).dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"virtual-stub caching middleware"};
  app.require_subcommand(1);

  auto* registry_cmd = app.add_subcommand("registry", "run a registry server");
  std::string listen = "127.0.0.1:4710";
  registry_cmd->add_option("--listen", listen, "listen address (host:port)");

  auto* service_cmd = app.add_subcommand("service", "host one device service");
  std::string registry_addr = "127.0.0.1:4710";
  std::string key, type = "light", service_listen = "127.0.0.1:0";
  service_cmd->add_option("--registry", registry_addr, "registry address");
  service_cmd->add_option("--key", key, "service key, e.g. /room1/light")
      ->required();
  service_cmd->add_option("--type", type, "service type: light | ac");
  service_cmd->add_option("--listen", service_listen, "listen address");

  auto* bench_cmd =
      app.add_subcommand("bench", "measure reconfiguration time per mode");
  std::vector<std::string> modes{"uncached"};
  int trials = 20, bindings = 1, warmup = 1;
  uint64_t seed = 0;
  std::string out_path;
  bool text = false, in_process = false;
  bench_cmd
      ->add_option("--mode", modes,
                   "cached|uncached|cold-clear (repeat or comma-separate "
                   "to compare modes in one report)")
      ->delimiter(',');
  bench_cmd->add_option("--trials", trials, "timed triggers per mode");
  bench_cmd->add_option("--bindings", bindings, "bindings per trigger");
  bench_cmd->add_option("--seed", seed, "run seed (recorded, not yet used)");
  bench_cmd->add_option("--warmup", warmup,
                        "untimed cache-populating triggers (cached mode)");
  int pace_ms = 2;
  bench_cmd->add_option("--pace-ms", pace_ms,
                        "quiet gap before each trigger, outside the "
                        "measured interval");
  bench_cmd->add_option("--out", out_path, "CSV output path ('-' = stdout)");
  bench_cmd->add_flag("--text", text, "print the mean/stddev table");
  bench_cmd->add_flag("--in-process", in_process,
                      "host registry/services in this process");

  auto* scenario_cmd = app.add_subcommand("scenario", "scenario tools");
  auto* scenario_run = scenario_cmd->add_subcommand("run", "replay a scenario");
  std::string scenario_path, report_path;
  bool scenario_in_process = false;
  scenario_run->add_option("file", scenario_path, "scenario JSON file")
      ->required();
  scenario_run->add_option("--report", report_path, "write the report here");
  scenario_run->add_flag("--in-process", scenario_in_process,
                         "host registry/services in this process");

  auto* cache_cmd = app.add_subcommand("cache", "cache diagnostics");
  auto* cache_dump = cache_cmd->add_subcommand(
      "dump", "resolve all services under a prefix and dump the cache");
  std::string dump_registry = "127.0.0.1:4710", dump_prefix = "/";
  cache_dump->add_option("--registry", dump_registry, "registry address");
  cache_dump->add_option("--prefix", dump_prefix, "key prefix");

  CLI11_PARSE(app, argc, argv);

  try {
    if (registry_cmd->parsed()) return cmd_registry(listen);
    if (service_cmd->parsed()) {
      return cmd_service(registry_addr, key, type, service_listen);
    }
    if (bench_cmd->parsed()) {
      return cmd_bench(modes, trials, bindings, seed, warmup, pace_ms, out_path,
                       text, in_process);
    }
    if (scenario_cmd->parsed()) {
      if (!scenario_run->parsed()) {
        std::cerr << "usage: vstub-mw scenario run <file.json>\n";
        return 2;
      }
      return cmd_scenario_run(scenario_path, report_path, scenario_in_process);
    }
    if (cache_cmd->parsed()) {
      if (!cache_dump->parsed()) {
        std::cerr << "usage: vstub-mw cache dump --registry <addr>\n";
        return 2;
      }
      return cmd_cache_dump(dump_registry, dump_prefix);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
