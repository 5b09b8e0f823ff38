#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>

#include "vstubmw/registry.hpp"

namespace vstubmw {

// A hosted service: description plus named method handlers. Handlers must be
// deterministic given state and arguments so tests can model them, and
// thread-safe: the host runs them concurrently across connections. The
// bundled devices guard their state internally.
struct ServiceImpl {
  ServiceDescription description;
  std::map<std::string, std::function<Json(const Json&)>> methods;
};

// Bundled device catalog: light and air-conditioning, each a small on/off +
// level state machine with methods {turnOn, turnOff, setLevel, getState}.
// Levels are integers in [0, 100].
class DeviceState {
 public:
  Json turn_on();
  Json turn_off();
  Json set_level(const Json& args);  // throws kBadArgs
  Json get_state() const;

 private:
  mutable std::mutex mu_;
  bool on_ = false;
  int level_ = 0;
};

ServiceImpl make_device_service(const std::string& service_type,
                                const std::string& key);

// Hosts one service: serves INVOKE on its own port and self-registers with
// the registry. stop() closes the listener but leaves the registry entry in
// place, so stale descriptors keep pointing at a dead endpoint.
class ServiceHost {
 public:
  ServiceHost(ServiceImpl impl, const HostPort& registry_addr,
              const HostPort& listen);
  ~ServiceHost() { stop(); }
  ServiceHost(const ServiceHost&) = delete;

  void stop();  // idempotent
  bool running() const { return server_.running(); }
  const ProxyDescriptor& descriptor() const { return descriptor_; }
  const ServiceDescription& description() const { return impl_.description; }
  uint16_t port() const { return descriptor_.port; }

 private:
  Envelope handle(const Envelope& request);

  ServiceImpl impl_;
  FramedServer server_;
  ProxyDescriptor descriptor_;
};

// The forwarding target of a virtual stub: one INVOKE round-trip against the
// endpoint named by the descriptor. Throws kTransportFailure / kStaleEpoch
// (the invalid-binding pair) or the logical errors the service reports.
Json raw_invoke(const ProxyDescriptor& descriptor, const std::string& method,
                const Json& args, int timeout_ms = 5000);

}  // namespace vstubmw
