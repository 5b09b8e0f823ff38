#pragma once

#include <functional>
#include <memory>
#include <mutex>
#include <string>

#include "vstubmw/clock.hpp"
#include "vstubmw/service.hpp"

namespace vstubmw {

// Immutable copy of a stub's identity and current proxy, the unit pushed to
// the cache manager after a failover.
struct StubSnapshot {
  ServiceDescription description;
  ProxyDescriptor proxy;
  uint64_t captured_at = 0;

  // Canonical form: {"key","host","port","service_id","epoch"}
  Json to_json() const;
  static StubSnapshot from_json(const Json& doc);
};

using SnapshotSink = std::function<void(const StubSnapshot&)>;

struct StubCounters {
  uint64_t calls_total = 0;
  uint64_t failovers = 0;
  uint64_t retries = 0;
};

// Wraps the real proxy of a remote service. Calls are forwarded to the
// current proxy; on an invalid binding (dead endpoint or stale epoch) the
// stub re-resolves the service through the registry once, swaps its proxy,
// pushes a snapshot to the cache notifier, and retries the call once.
// Logical errors (NoSuchMethod, BadArgs, Internal) pass through untouched.
//
// Shareable across threads; the proxy swap is epoch-guarded so concurrent
// failovers can never install an older incarnation over a newer one.
class VirtualStub {
 public:
  VirtualStub(ServiceDescription description, ProxyDescriptor proxy,
              HostPort registry_addr, SnapshotSink notifier = nullptr);

  Json invoke(const std::string& method, const Json& args);
  StubSnapshot snapshot() const;
  StubCounters counters() const;
  ProxyDescriptor proxy() const;
  const ServiceDescription& description() const { return description_; }

  // Installs the descriptor iff it is strictly newer. Returns true on swap.
  bool adopt_proxy_if_newer(const ProxyDescriptor& candidate);

  void set_invoke_timeout_ms(int timeout_ms) { invoke_timeout_ms_ = timeout_ms; }
  // Discover-replace-retry cycles per call. 0 surfaces the raw binding
  // error; the default performs the single recovery cycle.
  void set_retry_budget(int budget) { retry_budget_ = budget; }
  int retry_budget() const { return retry_budget_; }

 private:
  ServiceDescription description_;
  HostPort registry_addr_;
  SnapshotSink notifier_;
  int invoke_timeout_ms_ = 5000;
  int retry_budget_ = 1;

  mutable std::mutex mu_;  // guards proxy_ and counters_
  ProxyDescriptor proxy_;
  StubCounters counters_;
};

using StubPtr = std::shared_ptr<VirtualStub>;

}  // namespace vstubmw
