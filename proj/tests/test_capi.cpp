#include <doctest.h>

#include <string>

#include <json.hpp>

#include "vstubmw/vstubmw.h"

using nlohmann::json;

namespace {

struct Owned {
  char* ptr = nullptr;
  ~Owned() { vsmw_string_free(ptr); }
  json parsed() const { return json::parse(std::string(ptr)); }
};

struct CApiFixture {
  vsmw_registry_server* server = nullptr;
  std::string addr;

  CApiFixture() {
    REQUIRE(vsmw_registry_server_start("127.0.0.1", 0, &server) == VSMW_OK);
    addr = "127.0.0.1:" + std::to_string(vsmw_registry_server_port(server));
  }
  ~CApiFixture() { vsmw_registry_server_free(server); }
};

}  // namespace

TEST_CASE("registry client over the C API") {
  CApiFixture fixture;
  vsmw_registry* registry = nullptr;
  REQUIRE(vsmw_registry_open(fixture.addr.c_str(), &registry) == VSMW_OK);

  Owned descriptor;
  CHECK(vsmw_registry_register(registry, "/room1/light", "light", "127.0.0.1",
                               4242, 7, &descriptor.ptr) == VSMW_OK);
  CHECK(descriptor.parsed().at("epoch") == 1);

  Owned found;
  CHECK(vsmw_registry_lookup(registry, "/room1/light", &found.ptr) == VSMW_OK);
  CHECK(found.parsed().at("port") == 4242);

  Owned listing;
  CHECK(vsmw_registry_list(registry, "/", &listing.ptr) == VSMW_OK);
  CHECK(listing.parsed().size() == 1);

  Owned stats;
  CHECK(vsmw_registry_stats(registry, &stats.ptr) == VSMW_OK);
  CHECK(stats.parsed().at("register_count") == 1);
  CHECK(stats.parsed().at("lookup_count") == 1);

  SUBCASE("missing keys map to VSMW_ERR_NOT_FOUND") {
    Owned nothing;
    CHECK(vsmw_registry_lookup(registry, "/ghost", &nothing.ptr) ==
          VSMW_ERR_NOT_FOUND);
    CHECK(std::string(vsmw_last_error()).find("/ghost") != std::string::npos);
  }

  SUBCASE("unregister removes the live epoch") {
    CHECK(vsmw_registry_unregister(registry, "/room1/light", 1) == VSMW_OK);
    Owned nothing;
    CHECK(vsmw_registry_lookup(registry, "/room1/light", &nothing.ptr) ==
          VSMW_ERR_NOT_FOUND);
  }

  vsmw_registry_free(registry);
}

TEST_CASE("null arguments are rejected, not crashed on") {
  CHECK(vsmw_registry_open(nullptr, nullptr) == VSMW_ERR_INVALID_ARG);
  CHECK(vsmw_bench_run(nullptr, nullptr) == VSMW_ERR_INVALID_ARG);
  vsmw_string_free(nullptr);  // no-op
}

TEST_CASE("service, cache, stub and engine through the C API") {
  CApiFixture fixture;

  vsmw_service* light = nullptr;
  REQUIRE(vsmw_service_start(fixture.addr.c_str(), "/room1/light", "light",
                             "127.0.0.1", 0, &light) == VSMW_OK);
  Owned descriptor;
  REQUIRE(vsmw_service_descriptor(light, &descriptor.ptr) == VSMW_OK);
  CHECK(descriptor.parsed().at("key") == "/room1/light");

  vsmw_cache* cache = nullptr;
  REQUIRE(vsmw_cache_new(fixture.addr.c_str(), 0, &cache) == VSMW_OK);

  int hit = -1;
  vsmw_stub* stub = nullptr;
  REQUIRE(vsmw_cache_get(cache, "/room1/light", &hit, &stub) == VSMW_OK);
  CHECK(hit == 0);

  Owned value;
  CHECK(vsmw_stub_invoke(stub, "turnOn", "{}", &value.ptr) == VSMW_OK);
  CHECK(value.parsed() == json{{"status", "on"}});

  SUBCASE("second get is a hit on the same underlying stub") {
    int hit2 = -1;
    vsmw_stub* stub2 = nullptr;
    REQUIRE(vsmw_cache_get(cache, "/room1/light", &hit2, &stub2) == VSMW_OK);
    CHECK(hit2 == 1);
    Owned snap1, snap2;
    vsmw_stub_snapshot(stub, &snap1.ptr);
    vsmw_stub_snapshot(stub2, &snap2.ptr);
    CHECK(snap1.parsed() == snap2.parsed());
    vsmw_stub_free(stub2);

    Owned stats;
    vsmw_cache_stats(cache, &stats.ptr);
    CHECK(stats.parsed().at("hits") == 1);
    CHECK(stats.parsed().at("misses") == 1);
  }

  SUBCASE("failover is visible in the counters") {
    vsmw_service_stop(light);
    vsmw_service* reborn = nullptr;
    uint16_t port =
        static_cast<uint16_t>(descriptor.parsed().at("port").get<unsigned>());
    REQUIRE(vsmw_service_start(fixture.addr.c_str(), "/room1/light", "light",
                               "127.0.0.1", port, &reborn) == VSMW_OK);
    Owned again;
    CHECK(vsmw_stub_invoke(stub, "turnOn", "{}", &again.ptr) == VSMW_OK);
    uint64_t calls = 0, failovers = 0, retries = 0;
    CHECK(vsmw_stub_counters(stub, &calls, &failovers, &retries) == VSMW_OK);
    CHECK(failovers == 1);
    CHECK(retries == 1);
    Owned dump;
    vsmw_cache_dump(cache, &dump.ptr);
    CHECK(dump.parsed().at("/room1/light").at("epoch") == 2);
    vsmw_service_free(reborn);
  }

  SUBCASE("logical errors map one to one") {
    Owned none;
    CHECK(vsmw_stub_invoke(stub, "explode", "{}", &none.ptr) ==
          VSMW_ERR_NO_SUCH_METHOD);
    CHECK(vsmw_stub_invoke(stub, "setLevel", "{\"level\":9000}", &none.ptr) ==
          VSMW_ERR_BAD_ARGS);
    CHECK(vsmw_stub_invoke(stub, "setLevel", "not json", &none.ptr) ==
          VSMW_ERR_PARSE);
  }

  SUBCASE("engine binds and dispatches events") {
    vsmw_engine* engine = nullptr;
    REQUIRE(vsmw_engine_new(cache, 0, &engine) == VSMW_OK);
    size_t count = 0;
    const char* policies = R"({"policies":[{"id":"p1",
      "on":{"event":"user_presence","phase":"enter"},
      "do":[{"bind":"{location}/light"},
            {"invoke":{"key":"{location}/light","method":"turnOn"}}]}]})";
    CHECK(vsmw_engine_load_policies(engine, policies, &count) == VSMW_OK);
    CHECK(count == 1);

    Owned reports;
    const char* event =
        R"({"event_type":"user_presence","user":"ann","location":"/room1","phase":"enter"})";
    CHECK(vsmw_engine_submit_event(engine, event, &reports.ptr) == VSMW_OK);
    json parsed = reports.parsed();
    REQUIRE(parsed.size() == 1);
    CHECK(parsed[0].at("service_key") == "/room1/light");

    Owned bind_report;
    CHECK(vsmw_engine_bind(engine, "bob", "/room1/light", &bind_report.ptr) ==
          VSMW_OK);
    CHECK(bind_report.parsed().at("outcome") == "hit");

    Owned invoked;
    CHECK(vsmw_engine_invoke_bound(engine, "bob", "/room1/light", "getState",
                                   "{}", &invoked.ptr) == VSMW_OK);
    CHECK(invoked.parsed().at("power") == "on");

    int removed = 0;
    CHECK(vsmw_engine_unbind(engine, "bob", "/room1/light", &removed) == VSMW_OK);
    CHECK(removed == 1);
    CHECK(vsmw_engine_invoke_bound(engine, "bob", "/room1/light", "getState",
                                   "{}", nullptr) == VSMW_ERR_NOT_BOUND);
    vsmw_engine_free(engine);
  }

  vsmw_stub_free(stub);
  vsmw_cache_free(cache);
  vsmw_service_free(light);
}

TEST_CASE("bench and reports through the C API") {
  const char* config =
      R"({"mode":"cached","trials":3,"bindings_per_trigger":1,"seed":1})";
  Owned result;
  REQUIRE(vsmw_bench_run(config, &result.ptr) == VSMW_OK);
  json doc = result.parsed();
  CHECK(doc.at("records").size() == 3);
  CHECK(doc.at("summary").at("n") == 3);

  std::string records_text = doc.at("records").dump();
  Owned csv;
  REQUIRE(vsmw_report_csv(records_text.c_str(), &csv.ptr) == VSMW_OK);
  CHECK(std::string(csv.ptr).rfind("trial,mode,", 0) == 0);

  Owned text;
  REQUIRE(vsmw_report_text(records_text.c_str(), &text.ptr) == VSMW_OK);
  CHECK(std::string(text.ptr).find("cached") != std::string::npos);

  Owned reparsed;
  REQUIRE(vsmw_csv_parse(csv.ptr, &reparsed.ptr) == VSMW_OK);
  json round = reparsed.parsed();
  CHECK(round.at("records") == doc.at("records"));
  REQUIRE(round.at("summaries").size() == 1);
  CHECK(round.at("summaries")[0].at("mean_ns") ==
        doc.at("summary").at("mean_ns"));

  SUBCASE("invalid config maps to parse/argument errors") {
    Owned none;
    CHECK(vsmw_bench_run("not json", &none.ptr) == VSMW_ERR_PARSE);
    CHECK(vsmw_bench_run(R"({"mode":"sideways"})", &none.ptr) == VSMW_ERR_PARSE);
    CHECK(vsmw_bench_run(R"({"mode":"cached","trials":1})", &none.ptr) ==
          VSMW_ERR_INVALID_ARG);
  }
}

TEST_CASE("scenario run through the C API") {
  std::string path = std::string(VSTUBMW_SOURCE_DIR) + "/scenarios/room1.json";
  Owned report;
  REQUIRE(vsmw_scenario_run(path.c_str(), "", &report.ptr) == VSMW_OK);
  json doc = report.parsed();
  CHECK(doc.at("ok") == true);
  CHECK(doc.at("cache_stats").at("misses") == 2);
  CHECK(doc.at("cache_stats").at("hits") == 2);
  CHECK(doc.at("final_states").at("/room1/light").at("power") == "on");

  SUBCASE("missing file maps to an IO error") {
    Owned none;
    CHECK(vsmw_scenario_run("/no/such/file.json", "", &none.ptr) == VSMW_ERR_IO);
  }
}

TEST_CASE("status names are stable") {
  CHECK(std::string(vsmw_status_name(VSMW_OK)) == "OK");
  CHECK(std::string(vsmw_status_name(VSMW_ERR_NOT_FOUND)) == "ServiceNotFound");
  CHECK(std::string(vsmw_status_name(VSMW_ERR_UNRESOLVABLE_BINDING)) ==
        "UnresolvableBinding");
}
