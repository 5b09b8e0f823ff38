#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "vstubmw/harness.hpp"

using namespace vstubmw;

namespace {

std::vector<TrialRecord> fabricate_records() {
  std::vector<TrialRecord> records;
  std::mt19937_64 rng(99);
  for (int mode_index = 0; mode_index < 2; ++mode_index) {
    BenchMode mode = mode_index == 0 ? BenchMode::kUncached : BenchMode::kCached;
    for (int trial = 0; trial < 20; ++trial) {
      TrialRecord record;
      record.trial_index = trial;
      record.mode = mode;
      record.latency_ns = mode == BenchMode::kUncached
                              ? 50000 + rng() % 20000
                              : 900 + rng() % 400;
      record.registry_lookups_delta = mode == BenchMode::kUncached ? 1 : 0;
      record.cache_outcome = mode == BenchMode::kUncached ? "bypass" : "hit";
      records.push_back(record);
    }
  }
  return records;
}

}  // namespace

TEST_CASE("summarize") {
  SUBCASE("constant series has zero deviation") {
    Summary summary = summarize({10, 10, 10});
    CHECK(summary.mean_ns == 10.0);
    CHECK(summary.stddev_ns == 0.0);
    CHECK(summary.min_ns == 10);
    CHECK(summary.max_ns == 10);
  }

  SUBCASE("two-point series: mean 15, sample stddev sqrt(50)") {
    Summary summary = summarize({10, 20});
    CHECK(summary.mean_ns == doctest::Approx(15.0).epsilon(1e-12));
    // sqrt(50): deviations +-5, squared sum 50, n-1 = 1
    CHECK(summary.stddev_ns ==
          doctest::Approx(7.0710678118654755).epsilon(1e-9));
  }

  SUBCASE("insufficient samples are rejected") {
    CHECK_THROWS_AS(summarize(std::vector<uint64_t>{}), Error);
    CHECK_THROWS_AS(summarize(std::vector<uint64_t>{10}), Error);
  }

  SUBCASE("min <= mean <= max on random inputs") {
    std::mt19937_64 rng(5);
    for (int round = 0; round < 50; ++round) {
      std::vector<uint64_t> values;
      size_t n = 2 + rng() % 40;
      for (size_t i = 0; i < n; ++i) values.push_back(rng() % 1000000);
      Summary summary = summarize(values);
      CHECK(static_cast<double>(summary.min_ns) <= summary.mean_ns);
      CHECK(summary.mean_ns <= static_cast<double>(summary.max_ns));
      CHECK(summary.stddev_ns >= 0.0);
    }
  }
}

TEST_CASE("CSV emission and round-trip") {
  auto records = fabricate_records();

  std::string csv = emit_csv(records);
  size_t lines = std::count(csv.begin(), csv.end(), '\n');
  CHECK(lines == 41);  // header + 2 modes x 20 trials
  CHECK(csv.rfind("trial,mode,latency_ns,registry_lookups,cache_outcome\n", 0) ==
        0);

  auto parsed = parse_csv(csv);
  REQUIRE(parsed.size() == records.size());
  for (size_t i = 0; i < records.size(); ++i) {
    CHECK(parsed[i].trial_index == records[i].trial_index);
    CHECK(parsed[i].mode == records[i].mode);
    CHECK(parsed[i].latency_ns == records[i].latency_ns);
    CHECK(parsed[i].registry_lookups_delta == records[i].registry_lookups_delta);
    CHECK(parsed[i].cache_outcome == records[i].cache_outcome);
  }

  // bit-exact: the summaries recomputed from the parsed CSV equal the
  // originals, double for double
  auto original = summarize_by_mode(records);
  auto reparsed = summarize_by_mode(parsed);
  REQUIRE(original.size() == reparsed.size());
  for (size_t i = 0; i < original.size(); ++i) {
    CHECK(original[i].mode == reparsed[i].mode);
    CHECK(original[i].n == reparsed[i].n);
    CHECK(original[i].mean_ns == reparsed[i].mean_ns);
    CHECK(original[i].stddev_ns == reparsed[i].stddev_ns);
    CHECK(original[i].min_ns == reparsed[i].min_ns);
    CHECK(original[i].max_ns == reparsed[i].max_ns);
  }
}

TEST_CASE("CSV parse rejects junk") {
  CHECK_THROWS_AS(parse_csv("nope\n1,cached,2,3,hit\n"), Error);
  CHECK_THROWS_AS(
      parse_csv("trial,mode,latency_ns,registry_lookups,cache_outcome\n1,weird,2,3,hit\n"),
      Error);
  CHECK_THROWS_AS(
      parse_csv("trial,mode,latency_ns,registry_lookups,cache_outcome\n1,cached\n"),
      Error);
}

TEST_CASE("text report carries both summaries and the ratio") {
  std::string text = emit_text(fabricate_records());
  CHECK(text.find("uncached") != std::string::npos);
  CHECK(text.find("cached") != std::string::npos);
  CHECK(text.find("uncached/cached mean ratio:") != std::string::npos);
}

TEST_CASE("bench config validation") {
  BenchConfig config;
  config.trials = 1;
  CHECK_THROWS_AS(run_bench(config), Error);
  config.trials = 2;
  config.bindings_per_trigger = 0;
  CHECK_THROWS_AS(run_bench(config), Error);
}

TEST_CASE("bench config JSON round-trip") {
  BenchConfig config;
  config.mode = BenchMode::kColdClear;
  config.trials = 7;
  config.bindings_per_trigger = 3;
  config.seed = 123;
  BenchConfig back = BenchConfig::from_json(config.to_json());
  CHECK(back.mode == BenchMode::kColdClear);
  CHECK(back.trials == 7);
  CHECK(back.bindings_per_trigger == 3);
  CHECK(back.seed == 123);
}

TEST_CASE("cached mode hits with zero lookups after warm-up") {
  BenchConfig config;
  config.mode = BenchMode::kCached;
  config.trials = 5;
  BenchResult result = run_bench(config);
  REQUIRE(result.records.size() == 5);
  for (const auto& record : result.records) {
    CHECK(record.cache_outcome == "hit");
    CHECK(record.registry_lookups_delta == 0);
  }
  CHECK(result.summary.mode == "cached");
  CHECK(result.summary.n == 5);
}

TEST_CASE("uncached mode bypasses with one lookup per binding") {
  BenchConfig config;
  config.mode = BenchMode::kUncached;
  config.trials = 5;
  config.bindings_per_trigger = 2;
  BenchResult result = run_bench(config);
  REQUIRE(result.records.size() == 5);
  for (const auto& record : result.records) {
    CHECK(record.cache_outcome == "bypass");
    CHECK(record.registry_lookups_delta == 2);
  }
}

TEST_CASE("cold-clear mode misses every trial") {
  BenchConfig config;
  config.mode = BenchMode::kColdClear;
  config.trials = 4;
  BenchResult result = run_bench(config);
  for (const auto& record : result.records) {
    CHECK(record.cache_outcome == "miss");
    CHECK(record.registry_lookups_delta == 1);
  }
}

TEST_CASE("a trial error aborts the run and flushes the partial CSV") {
  std::string partial_path =
      "/tmp/vstubmw_partial_" + std::to_string(mono_now_ns()) + ".csv";
  BenchConfig config;
  config.mode = BenchMode::kUncached;
  config.trials = 5;
  config.partial_csv_path = partial_path;
  config.unregister_after_trial = 2;  // trial 3 cannot resolve

  try {
    run_bench(config);
    FAIL("expected a TrialError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kTrialError);
  }

  std::ifstream in(partial_path);
  REQUIRE(in.good());
  std::stringstream buffer;
  buffer << in.rdbuf();
  auto partial = parse_csv(buffer.str());
  CHECK(partial.size() == 3);  // trials 0..2 completed
  std::remove(partial_path.c_str());
}

TEST_CASE("same seed, same records modulo time") {
  BenchConfig config;
  config.mode = BenchMode::kCached;
  config.trials = 4;
  config.seed = 77;
  BenchResult a = run_bench(config);
  BenchResult b = run_bench(config);
  REQUIRE(a.records.size() == b.records.size());
  for (size_t i = 0; i < a.records.size(); ++i) {
    CHECK(a.records[i].trial_index == b.records[i].trial_index);
    CHECK(a.records[i].mode == b.records[i].mode);
    CHECK(a.records[i].cache_outcome == b.records[i].cache_outcome);
    CHECK(a.records[i].registry_lookups_delta ==
          b.records[i].registry_lookups_delta);
  }
}

TEST_CASE("the bundled room1 scenario") {
  ScenarioReport report =
      run_scenario_file(std::string(VSTUBMW_SOURCE_DIR) + "/scenarios/room1.json");
  CHECK(report.ok);
  const Json& doc = report.report;
  CHECK(doc.at("final_states").at("/room1/light").at("power") == "on");
  CHECK(doc.at("final_states").at("/room1/ac").at("power") == "on");
  CHECK(doc.at("cache_stats").at("misses") == 2);
  CHECK(doc.at("cache_stats").at("hits") == 2);
  CHECK(doc.at("failovers") == 0);
  CHECK(doc.at("events").size() == 3);
}

TEST_CASE("scenario with a mid-trace restart") {
  ScenarioReport report = run_scenario_file(
      std::string(VSTUBMW_SOURCE_DIR) + "/scenarios/room1_restart.json");
  CHECK(report.ok);
  const Json& doc = report.report;
  CHECK(doc.at("failovers") == 1);
  CHECK(doc.at("final_states").at("/room1/light").at("level") == 60);
  // the restarted incarnation answered the post-restart invoke
  for (const auto& event : doc.at("events")) {
    if (!event.contains("actions")) continue;
    for (const auto& action : event.at("actions")) {
      CHECK(action.at("outcome") != "error");
    }
  }
}

TEST_CASE("empty trace leaves services at their initial state") {
  Json scenario{{"services", Json::array({Json{{"key", "/solo/light"},
                                               {"type", "light"}}})},
                {"policies", Json::array()},
                {"trace", Json::array()}};
  ScenarioReport report = run_scenario_json(scenario);
  CHECK(report.ok);
  CHECK(report.report.at("events").empty());
  CHECK(report.report.at("final_states").at("/solo/light").at("power") == "off");
}

TEST_CASE("scenario parse failures") {
  CHECK_THROWS_AS(run_scenario_json(Json::array()), Error);
  CHECK_THROWS_AS(run_scenario_json(Json{{"services", Json::array()}}), Error);
  Json missing_policies{{"services", Json::array()}, {"trace", Json::array()}};
  CHECK_THROWS_AS(run_scenario_json(missing_policies), Error);
}
