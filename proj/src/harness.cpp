#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <thread>

#include "vstubmw/harness.hpp"

namespace vstubmw {

const char* bench_mode_name(BenchMode mode) {
  switch (mode) {
    case BenchMode::kCached: return "cached";
    case BenchMode::kUncached: return "uncached";
    case BenchMode::kColdClear: return "cold-clear";
  }
  return "uncached";
}

BenchMode bench_mode_from_name(const std::string& name) {
  if (name == "cached") return BenchMode::kCached;
  if (name == "uncached") return BenchMode::kUncached;
  if (name == "cold-clear") return BenchMode::kColdClear;
  raise(ErrorCode::kParseError,
        "mode must be cached|uncached|cold-clear, got '" + name + "'");
}

BenchConfig BenchConfig::from_json(const Json& doc) {
  BenchConfig config;
  config.mode = bench_mode_from_name(doc.value("mode", std::string("uncached")));
  config.trials = doc.value("trials", 20);
  config.warmup_trials = doc.value("warmup_trials", 1);
  config.bindings_per_trigger = doc.value("bindings_per_trigger", 1);
  config.seed = doc.value("seed", uint64_t{0});
  config.inter_trial_delay_ms = doc.value("inter_trial_delay_ms", 2);
  config.self_exe = doc.value("self_exe", std::string{});
  config.partial_csv_path = doc.value("partial_csv_path", std::string{});
  config.unregister_after_trial = doc.value("unregister_after_trial", -1);
  if (doc.contains("registry_listen")) {
    config.registry_listen = HostPort::parse(doc.at("registry_listen").get<std::string>());
  }
  return config;
}

Json BenchConfig::to_json() const {
  return Json{{"mode", bench_mode_name(mode)},
              {"trials", trials},
              {"warmup_trials", warmup_trials},
              {"bindings_per_trigger", bindings_per_trigger},
              {"seed", seed},
              {"inter_trial_delay_ms", inter_trial_delay_ms},
              {"self_exe", self_exe},
              {"registry_listen", registry_listen.str()},
              {"partial_csv_path", partial_csv_path},
              {"unregister_after_trial", unregister_after_trial}};
}

Json TrialRecord::to_json() const {
  return Json{{"trial", trial_index},
              {"mode", bench_mode_name(mode)},
              {"latency_ns", latency_ns},
              {"registry_lookups", registry_lookups_delta},
              {"cache_outcome", cache_outcome}};
}

Json Summary::to_json() const {
  return Json{{"mode", mode},     {"n", n},           {"mean_ns", mean_ns},
              {"stddev_ns", stddev_ns}, {"min_ns", min_ns}, {"max_ns", max_ns}};
}

Json BenchResult::to_json() const {
  Json records_json = Json::array();
  for (const auto& record : records) records_json.push_back(record.to_json());
  return Json{{"records", records_json}, {"summary", summary.to_json()}};
}

Summary summarize(const std::vector<uint64_t>& latencies_ns,
                  const std::string& mode) {
  if (latencies_ns.size() < 2) {
    raise(ErrorCode::kInsufficientSamples,
          "need at least 2 samples for a sample standard deviation, got " +
              std::to_string(latencies_ns.size()));
  }
  Summary summary;
  summary.mode = mode;
  summary.n = latencies_ns.size();
  double sum = 0.0;
  summary.min_ns = latencies_ns.front();
  summary.max_ns = latencies_ns.front();
  for (uint64_t v : latencies_ns) {
    sum += static_cast<double>(v);
    summary.min_ns = std::min(summary.min_ns, v);
    summary.max_ns = std::max(summary.max_ns, v);
  }
  summary.mean_ns = sum / static_cast<double>(summary.n);
  double ss = 0.0;
  for (uint64_t v : latencies_ns) {
    double d = static_cast<double>(v) - summary.mean_ns;
    ss += d * d;
  }
  summary.stddev_ns = std::sqrt(ss / static_cast<double>(summary.n - 1));
  return summary;
}

Summary summarize(const std::vector<TrialRecord>& records) {
  std::vector<uint64_t> latencies;
  latencies.reserve(records.size());
  for (const auto& record : records) latencies.push_back(record.latency_ns);
  std::string mode = records.empty() ? std::string{}
                                     : bench_mode_name(records.front().mode);
  return summarize(latencies, mode);
}

std::vector<Summary> summarize_by_mode(const std::vector<TrialRecord>& records) {
  std::vector<std::string> order;
  std::map<std::string, std::vector<uint64_t>> by_mode;
  for (const auto& record : records) {
    std::string mode = bench_mode_name(record.mode);
    if (!by_mode.count(mode)) order.push_back(mode);
    by_mode[mode].push_back(record.latency_ns);
  }
  std::vector<Summary> summaries;
  for (const auto& mode : order) {
    summaries.push_back(summarize(by_mode[mode], mode));
  }
  return summaries;
}

namespace {

Json bench_policy(int bindings_per_trigger) {
  Json actions = Json::array();
  for (int i = 0; i < bindings_per_trigger; ++i) {
    actions.push_back(Json{{"bind", "{location}/svc" + std::to_string(i)}});
  }
  return Json{{"policies",
               Json::array({Json{{"id", "bench-bind"},
                                 {"on", Json{{"event", "user_presence"},
                                             {"phase", "enter"}}},
                                 {"do", actions}}})}};
}

// One policy trigger, measured from event emission until every binding of
// the trigger is established. Report emission and registry stats reads stay
// outside the interval.
uint64_t run_trigger(ReconfigEngine& engine, const std::string& user,
                     int expected_binds, std::string* outcome) {
  uint64_t emitted_at = mono_now_ns();
  ContextEvent event{"user_presence", user, "/bench", Phase::kEnter, emitted_at};
  std::vector<BindingReport> reports = engine.submit_event(event);

  if (static_cast<int>(reports.size()) != expected_binds) {
    raise(ErrorCode::kTrialError,
          "expected " + std::to_string(expected_binds) + " bindings, got " +
              std::to_string(reports.size()));
  }
  uint64_t established_at = emitted_at;
  bool all_hit = true;
  for (const auto& report : reports) {
    if (report.outcome == BindingReport::Outcome::kError) {
      raise(ErrorCode::kTrialError,
            "bind " + report.service_key + " failed: " + report.error);
    }
    all_hit &= report.outcome == BindingReport::Outcome::kHit;
    established_at = std::max(established_at, report.binding_established_at);
  }
  if (outcome) *outcome = all_hit ? "hit" : "miss";
  return established_at - emitted_at;
}

}  // namespace

BenchResult run_bench(const BenchConfig& config) {
  if (config.trials < 2) {
    raise(ErrorCode::kInvalidArgument,
          "trials must be >= 2 (sample stddev undefined otherwise)");
  }
  if (config.bindings_per_trigger < 1) {
    raise(ErrorCode::kInvalidArgument, "bindings_per_trigger must be >= 1");
  }

  Orchestrator orchestrator({config.self_exe});
  orchestrator.start_registry(config.registry_listen);
  for (int i = 0; i < config.bindings_per_trigger; ++i) {
    orchestrator.start_service("/bench/svc" + std::to_string(i), "light");
  }

  auto cache = StubCache::create(orchestrator.registry_addr());
  ReconfigEngine engine(cache, config.mode == BenchMode::kUncached
                                   ? BindPath::kBypass
                                   : BindPath::kCache);
  engine.load_policies_json(bench_policy(config.bindings_per_trigger));

  const std::string user = "bench-user-" + std::to_string(config.seed);

  if (config.mode == BenchMode::kCached) {
    for (int i = 0; i < config.warmup_trials; ++i) {
      run_trigger(engine, user, config.bindings_per_trigger, nullptr);
    }
  }

  BenchResult result;
  result.records.reserve(config.trials);
  // Between the chained counter reads nothing but the trial itself talks to
  // the registry, so successive reads delimit per-trial lookup deltas with a
  // single STATS call per trial.
  uint64_t lookups_prev = orchestrator.registry_stats().lookup_count;
  for (int trial = 0; trial < config.trials; ++trial) {
    if (config.inter_trial_delay_ms > 0) {
      std::this_thread::sleep_for(
          std::chrono::milliseconds(config.inter_trial_delay_ms));
    }
    if (config.mode == BenchMode::kColdClear) cache->clear();

    TrialRecord record;
    record.trial_index = trial;
    record.mode = config.mode;
    try {
      record.latency_ns = run_trigger(engine, user, config.bindings_per_trigger,
                                      &record.cache_outcome);
    } catch (const Error&) {
      if (!config.partial_csv_path.empty()) {
        std::ofstream out(config.partial_csv_path);
        if (out) out << emit_csv(result.records);
      }
      throw;
    }
    if (config.mode == BenchMode::kUncached) record.cache_outcome = "bypass";

    uint64_t lookups_now = orchestrator.registry_stats().lookup_count;
    record.registry_lookups_delta = lookups_now - lookups_prev;
    lookups_prev = lookups_now;
    result.records.push_back(std::move(record));

    if (config.unregister_after_trial == trial) {
      RegistryClient registry(orchestrator.registry_addr());
      for (const auto& key : orchestrator.service_keys()) {
        registry.unregister(key, orchestrator.current_descriptor(key).epoch);
      }
      lookups_prev = orchestrator.registry_stats().lookup_count;
      cache->clear();  // the next trial must resolve, and fail
    }
  }
  result.summary = summarize(result.records);
  return result;
}

std::string emit_csv(const std::vector<TrialRecord>& records) {
  std::ostringstream out;
  out << "trial,mode,latency_ns,registry_lookups,cache_outcome\n";
  for (const auto& record : records) {
    out << record.trial_index << ',' << bench_mode_name(record.mode) << ','
        << record.latency_ns << ',' << record.registry_lookups_delta << ','
        << record.cache_outcome << '\n';
  }
  return out.str();
}

std::vector<TrialRecord> parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) ||
      line != "trial,mode,latency_ns,registry_lookups,cache_outcome") {
    raise(ErrorCode::kParseError, "bad CSV header: '" + line + "'");
  }
  std::vector<TrialRecord> records;
  size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string trial, mode, latency, lookups, outcome;
    if (!std::getline(fields, trial, ',') || !std::getline(fields, mode, ',') ||
        !std::getline(fields, latency, ',') ||
        !std::getline(fields, lookups, ',') || !std::getline(fields, outcome)) {
      raise(ErrorCode::kParseError,
            "line " + std::to_string(line_no) + ": expected 5 fields");
    }
    TrialRecord record;
    try {
      record.trial_index = std::stoi(trial);
      record.mode = bench_mode_from_name(mode);
      record.latency_ns = std::stoull(latency);
      record.registry_lookups_delta = std::stoull(lookups);
    } catch (const std::exception& e) {
      raise(ErrorCode::kParseError,
            "line " + std::to_string(line_no) + ": " + e.what());
    }
    record.cache_outcome = outcome;
    records.push_back(std::move(record));
  }
  return records;
}

std::string emit_text(const std::vector<TrialRecord>& records) {
  std::vector<Summary> summaries = summarize_by_mode(records);
  std::ostringstream out;
  out << "mode         n    mean_ns          stddev_ns        min_ns       max_ns\n";
  const Summary* cached = nullptr;
  const Summary* uncached = nullptr;
  for (const auto& summary : summaries) {
    char line[160];
    std::snprintf(line, sizeof(line), "%-12s %-4zu %-16.1f %-16.1f %-12lu %-12lu\n",
                  summary.mode.c_str(), summary.n, summary.mean_ns,
                  summary.stddev_ns,
                  static_cast<unsigned long>(summary.min_ns),
                  static_cast<unsigned long>(summary.max_ns));
    out << line;
    if (summary.mode == "cached") cached = &summary;
    if (summary.mode == "uncached") uncached = &summary;
  }
  if (cached && uncached && cached->mean_ns > 0.0) {
    char line[96];
    std::snprintf(line, sizeof(line), "uncached/cached mean ratio: %.2f\n",
                  uncached->mean_ns / cached->mean_ns);
    out << line;
  }
  return out.str();
}

}  // namespace vstubmw
