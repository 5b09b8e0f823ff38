#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "vstubmw/net.hpp"
#include "vstubmw/wire.hpp"

namespace vstubmw {

// Hierarchical service key: "/room1/light". Must start with '/' and contain
// no empty segments.
bool valid_key(const std::string& key);
void require_valid_key(const std::string& key);  // throws kInvalidKey

// True if key sits under prefix in path terms ("/room1" matches "/room1/light"
// and "/room1" itself, but not "/room10/light"). "/" matches everything.
bool key_has_prefix(const std::string& key, const std::string& prefix);

struct ServiceDescription {
  std::string key;
  std::string service_type;
  std::map<std::string, std::string> attributes;

  bool operator==(const ServiceDescription&) const = default;
  Json to_json() const;
  static ServiceDescription from_json(const Json& doc);
};

// One live incarnation of a service. The epoch is issued by the registry and
// increases with every re-registration of the same key, which is what makes
// stale proxies detectable.
struct ProxyDescriptor {
  std::string key;
  std::string host;
  uint16_t port = 0;
  uint64_t service_id = 0;
  uint64_t epoch = 0;

  bool operator==(const ProxyDescriptor&) const = default;
  HostPort endpoint() const { return {host, port}; }
  Json to_json() const;
  static ProxyDescriptor from_json(const Json& doc);
};

struct RegistryStats {
  uint64_t lookup_count = 0;
  uint64_t register_count = 0;
  uint64_t entry_count = 0;
};

// In-memory registry server: one live descriptor per key, per-key epoch
// counters that survive unregistration. No persistence, no leases.
class RegistryServer {
 public:
  RegistryServer() = default;
  ~RegistryServer() { stop(); }

  void start(const HostPort& listen);
  void stop();
  uint16_t port() const { return server_.port(); }
  HostPort addr() const { return server_.addr(); }

 private:
  struct Entry {
    ServiceDescription description;
    ProxyDescriptor descriptor;
  };

  Envelope handle(const Envelope& request);
  Envelope handle_register(const Envelope& request);
  Envelope handle_lookup(const Envelope& request);
  Envelope handle_unregister(const Envelope& request);
  Envelope handle_list(const Envelope& request);
  Envelope handle_stats(const Envelope& request);

  FramedServer server_;
  std::mutex mu_;
  std::map<std::string, Entry> entries_;
  std::map<std::string, uint64_t> next_epoch_;
  uint64_t lookup_count_ = 0;
  uint64_t register_count_ = 0;
};

// Client handle; opens one connection per request. Single-owner.
class RegistryClient {
 public:
  explicit RegistryClient(HostPort registry_addr, int timeout_ms = 5000)
      : addr_(std::move(registry_addr)), timeout_ms_(timeout_ms) {}

  ProxyDescriptor register_service(const ServiceDescription& description,
                                   const std::string& host, uint16_t port,
                                   uint64_t service_id);
  ProxyDescriptor lookup(const std::string& key);
  void unregister(const std::string& key, uint64_t epoch);
  std::vector<ServiceDescription> list(const std::string& prefix);
  RegistryStats stats();

  const HostPort& addr() const { return addr_; }

 private:
  Envelope call(MsgType type, Json body);

  HostPort addr_;
  int timeout_ms_;
};

}  // namespace vstubmw
