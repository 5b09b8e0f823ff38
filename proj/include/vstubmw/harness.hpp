#pragma once

#include <memory>
#include <string>
#include <vector>

#include "vstubmw/reconfig.hpp"

namespace vstubmw {

// Spawns and tears down the registry and service processes a benchmark or
// scenario needs. With a self_exe path the servers run as child processes of
// that binary ("vstub-mw registry ..." / "vstub-mw service ..."); without
// one they run in-process on their own threads. Either way they are reached
// over loopback TCP.
class Orchestrator {
 public:
  struct Options {
    std::string self_exe;  // empty: in-process servers
  };

  explicit Orchestrator(Options options = {});
  ~Orchestrator();
  Orchestrator(const Orchestrator&) = delete;

  HostPort start_registry(const HostPort& listen = {"127.0.0.1", 0});
  const HostPort& registry_addr() const { return registry_addr_; }

  ProxyDescriptor start_service(const std::string& key,
                                const std::string& service_type,
                                uint16_t port = 0);
  // Closes the service's listener; the registry entry stays (stale).
  void stop_service(const std::string& key);
  // stop + start under the same key; same port unless new_port is given.
  ProxyDescriptor restart_service(const std::string& key, uint16_t new_port = 0);

  ProxyDescriptor current_descriptor(const std::string& key) const;
  bool service_running(const std::string& key) const;
  std::vector<std::string> service_keys() const;

  RegistryStats registry_stats();
  bool in_process() const { return options_.self_exe.empty(); }

 private:
  struct Child;  // subprocess bookkeeping

  Options options_;
  HostPort registry_addr_;

  std::unique_ptr<RegistryServer> registry_;   // in-process mode
  std::unique_ptr<Child> registry_child_;      // subprocess mode

  struct Service {
    std::string key;
    std::string service_type;
    uint16_t port = 0;
    ProxyDescriptor descriptor;
    bool running = false;
    std::unique_ptr<ServiceHost> host;  // in-process
    std::unique_ptr<Child> child;       // subprocess
  };
  std::vector<Service> services_;

  Service& find_service(const std::string& key);
  const Service& find_service(const std::string& key) const;
};

enum class BenchMode { kCached, kUncached, kColdClear };

const char* bench_mode_name(BenchMode mode);
BenchMode bench_mode_from_name(const std::string& name);  // throws kParseError

struct BenchConfig {
  BenchMode mode = BenchMode::kUncached;
  int trials = 20;
  int warmup_trials = 1;  // cached mode only; excluded from statistics
  int bindings_per_trigger = 1;
  uint64_t seed = 0;
  // Quiet gap before each trigger so trials measure a single reconfiguration,
  // not queueing behind the previous one. Outside the measured interval.
  int inter_trial_delay_ms = 2;
  std::string self_exe;  // servers as child processes when set
  HostPort registry_listen{"127.0.0.1", 0};
  // On a per-trial error the records so far are written here before the
  // error propagates. Empty disables the flush.
  std::string partial_csv_path;
  // Fault injection: unregister every service after this trial index, so the
  // following trial fails. -1 disables.
  int unregister_after_trial = -1;

  static BenchConfig from_json(const Json& doc);
  Json to_json() const;
};

struct TrialRecord {
  int trial_index = 0;
  BenchMode mode = BenchMode::kUncached;
  uint64_t latency_ns = 0;
  uint64_t registry_lookups_delta = 0;
  std::string cache_outcome;  // "hit" | "miss" | "bypass"

  Json to_json() const;
};

struct Summary {
  std::string mode;
  size_t n = 0;
  double mean_ns = 0.0;
  double stddev_ns = 0.0;  // sample (n-1)
  uint64_t min_ns = 0;
  uint64_t max_ns = 0;

  Json to_json() const;
};

struct BenchResult {
  std::vector<TrialRecord> records;
  Summary summary;

  Json to_json() const;
};

// Arithmetic mean and sample standard deviation. Throws
// kInsufficientSamples for fewer than two values.
Summary summarize(const std::vector<uint64_t>& latencies_ns,
                  const std::string& mode = {});
Summary summarize(const std::vector<TrialRecord>& records);
// One summary per mode, in first-appearance order.
std::vector<Summary> summarize_by_mode(const std::vector<TrialRecord>& records);

// The reconfiguration-time measurement of one mode: spawn registry and
// services, load the binding policy, trigger it `trials` times, measure
// event-emission -> binding-established per trigger.
BenchResult run_bench(const BenchConfig& config);

// CSV: header "trial,mode,latency_ns,registry_lookups,cache_outcome".
std::string emit_csv(const std::vector<TrialRecord>& records);
std::vector<TrialRecord> parse_csv(const std::string& text);
std::string emit_text(const std::vector<TrialRecord>& records);

// Scenario runner: see docs/formats.md for the file schema.
struct ScenarioReport {
  bool ok = true;
  Json report;
};

struct ScenarioOptions {
  std::string self_exe;
};

ScenarioReport run_scenario_json(const Json& scenario,
                                 const ScenarioOptions& options = {});
ScenarioReport run_scenario_file(const std::string& path,
                                 const ScenarioOptions& options = {});

}  // namespace vstubmw
