#include <doctest.h>

#include <random>

#include "vstubmw/service.hpp"

using namespace vstubmw;

namespace {

ErrorCode invoke_error(const ProxyDescriptor& descriptor,
                       const std::string& method, const Json& args) {
  try {
    raw_invoke(descriptor, method, args, 2000);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::kInternal;
}

struct HostFixture {
  RegistryServer registry;
  HostFixture() { registry.start({"127.0.0.1", 0}); }
  HostPort registry_addr() { return registry.addr(); }

  std::unique_ptr<ServiceHost> start(const std::string& key,
                                     const std::string& type = "light",
                                     uint16_t port = 0) {
    return std::make_unique<ServiceHost>(make_device_service(type, key),
                                         registry_addr(),
                                         HostPort{"127.0.0.1", port});
  }
};

}  // namespace

TEST_CASE("start registers and serves") {
  HostFixture fixture;
  auto host = fixture.start("/room1/light");
  RegistryClient client(fixture.registry_addr());

  auto found = client.lookup("/room1/light");
  CHECK(found == host->descriptor());
  CHECK(found.epoch == 1);

  CHECK(raw_invoke(found, "turnOn", Json::object()) == Json{{"status", "on"}});
}

TEST_CASE("restart bumps the epoch") {
  HostFixture fixture;
  auto host = fixture.start("/room1/light");
  uint64_t first_epoch = host->descriptor().epoch;
  uint16_t port = host->port();
  host->stop();
  auto second = fixture.start("/room1/light", "light", port);
  CHECK(second->descriptor().epoch == first_epoch + 1);
  CHECK(second->descriptor().service_id != host->descriptor().service_id);
}

TEST_CASE("two services on distinct ports work concurrently") {
  HostFixture fixture;
  auto light = fixture.start("/room1/light", "light");
  auto ac = fixture.start("/room1/ac", "ac");
  CHECK(light->port() != ac->port());
  CHECK(raw_invoke(light->descriptor(), "turnOn", {}) == Json{{"status", "on"}});
  CHECK(raw_invoke(ac->descriptor(), "turnOn", {}) == Json{{"status", "on"}});
  CHECK(raw_invoke(ac->descriptor(), "getState", {}).at("power") == "on");
  CHECK(raw_invoke(light->descriptor(), "setLevel", Json{{"level", 70}}) ==
        Json{{"status", "ok"}, {"level", 70}});
}

TEST_CASE("stale descriptors are rejected without running the handler") {
  HostFixture fixture;
  auto host = fixture.start("/room1/light");
  auto stale = host->descriptor();
  uint16_t port = host->port();
  host->stop();
  auto restarted = fixture.start("/room1/light", "light", port);

  raw_invoke(restarted->descriptor(), "turnOn", {});
  CHECK(invoke_error(stale, "turnOff", {}) == ErrorCode::kStaleEpoch);
  // handler did not run: still on
  CHECK(raw_invoke(restarted->descriptor(), "getState", {}).at("power") == "on");
}

TEST_CASE("stopped service yields a transport failure") {
  HostFixture fixture;
  auto host = fixture.start("/room1/light");
  auto descriptor = host->descriptor();
  host->stop();
  host->stop();  // second stop is a no-op
  CHECK(invoke_error(descriptor, "turnOn", {}) == ErrorCode::kTransportFailure);
  // registry entry stays in place (stale), by design
  RegistryClient client(fixture.registry_addr());
  CHECK(client.lookup("/room1/light") == descriptor);
}

TEST_CASE("logical invoke errors") {
  HostFixture fixture;
  auto host = fixture.start("/room1/light");
  auto d = host->descriptor();

  CHECK(invoke_error(d, "dim", {}) == ErrorCode::kNoSuchMethod);
  CHECK(invoke_error(d, "setLevel", Json::object()) == ErrorCode::kBadArgs);
  CHECK(invoke_error(d, "setLevel", Json{{"level", "high"}}) ==
        ErrorCode::kBadArgs);
  CHECK(invoke_error(d, "setLevel", Json{{"level", 101}}) == ErrorCode::kBadArgs);
  CHECK(invoke_error(d, "setLevel", Json{{"level", -1}}) == ErrorCode::kBadArgs);
}

TEST_CASE("unknown device type is rejected") {
  CHECK_THROWS_AS(make_device_service("toaster", "/room1/toaster"), Error);
}

// Model-based check of the device state machine: getState always reflects
// the last successful mutation.
TEST_CASE("device semantics against a trivial state machine") {
  HostFixture fixture;
  auto host = fixture.start("/room1/ac", "ac");
  auto d = host->descriptor();

  bool model_on = false;
  int model_level = 0;
  std::mt19937_64 rng(42);

  for (int step = 0; step < 120; ++step) {
    switch (rng() % 4) {
      case 0:
        raw_invoke(d, "turnOn", {});
        model_on = true;
        break;
      case 1:
        raw_invoke(d, "turnOff", {});
        model_on = false;
        break;
      case 2: {
        int level = static_cast<int>(rng() % 121) - 10;  // sometimes invalid
        if (level < 0 || level > 100) {
          CHECK(invoke_error(d, "setLevel", Json{{"level", level}}) ==
                ErrorCode::kBadArgs);
        } else {
          raw_invoke(d, "setLevel", Json{{"level", level}});
          model_level = level;
        }
        break;
      }
      default: {
        Json state = raw_invoke(d, "getState", {});
        CHECK(state.at("power") == (model_on ? "on" : "off"));
        CHECK(state.at("level") == model_level);
      }
    }
  }
}

// Epoch gate property: over random restart/invoke interleavings, invokes
// with the current epoch run and invokes with an older epoch never touch
// state.
TEST_CASE("epoch gate over random restart/invoke interleavings") {
  HostFixture fixture;
  auto host = fixture.start("/gate/light");
  std::vector<ProxyDescriptor> old_descriptors;
  bool model_on = false;
  std::mt19937_64 rng(7);

  for (int step = 0; step < 60; ++step) {
    switch (rng() % 4) {
      case 0: {  // restart: state resets, descriptor set grows
        old_descriptors.push_back(host->descriptor());
        uint16_t port = host->port();
        host->stop();
        host = fixture.start("/gate/light", "light", port);
        model_on = false;
        break;
      }
      case 1: {  // invoke with the live descriptor
        bool turn_on = rng() % 2 == 0;
        raw_invoke(host->descriptor(), turn_on ? "turnOn" : "turnOff", {});
        model_on = turn_on;
        break;
      }
      case 2: {  // invoke with a stale descriptor: gate must hold
        if (!old_descriptors.empty()) {
          const auto& stale = old_descriptors[rng() % old_descriptors.size()];
          CHECK(invoke_error(stale, "turnOn", {}) == ErrorCode::kStaleEpoch);
        }
        break;
      }
      default: {
        Json state = raw_invoke(host->descriptor(), "getState", {});
        CHECK(state.at("power") == (model_on ? "on" : "off"));
      }
    }
  }
}
