#pragma once

#include <condition_variable>
#include <list>
#include <map>
#include <memory>
#include <mutex>
#include <optional>

#include "vstubmw/stub.hpp"

namespace vstubmw {

struct CacheStats {
  uint64_t hits = 0;
  uint64_t misses = 0;
  uint64_t remote_lookups = 0;
  uint64_t updates = 0;
  uint64_t evictions = 0;

  Json to_json() const;
};

struct CacheEntryInfo {
  ProxyDescriptor proxy;
  uint64_t source_epoch = 0;
  uint64_t inserted_at = 0;
  uint64_t last_access = 0;
};

struct GetResult {
  StubPtr stub;
  bool hit = false;  // false only for the get that performed the lookup
};

// The virtual stub cache manager. get_virtual_stub returns the cached stub
// for a key or resolves it through the registry on a miss; concurrent misses
// for one key are coalesced into a single lookup (single-flight) and every
// waiter receives the same stub. A waiter that joins an in-flight lookup is
// accounted as a hit: it put no traffic on the network.
//
// update_entry is the failover feedback path: a stub that replaced its proxy
// pushes a snapshot here, and the entry is refreshed iff the snapshot is
// strictly newer than what the cache holds.
//
// Unbounded by default; with a capacity set, insertion evicts the least
// recently used entry. Thread-safe throughout; no lock is held across
// network I/O except the per-key single-flight latch.
class StubCache : public std::enable_shared_from_this<StubCache> {
 public:
  static std::shared_ptr<StubCache> create(
      HostPort registry_addr, std::optional<size_t> capacity = std::nullopt);

  GetResult get_virtual_stub(const ServiceDescription& description);

  // Registry lookup + stub construction, no table access. The stub is wired
  // to notify this cache on failover. Used directly by the bypass bind path.
  StubPtr do_lookup(const ServiceDescription& description);

  void update_entry(const StubSnapshot& snapshot);
  bool invalidate(const std::string& key);
  size_t clear();

  CacheStats stats() const;
  size_t size() const;
  std::optional<CacheEntryInfo> entry_info(const std::string& key) const;
  // Entry's stub without touching stats or recency; null when absent.
  StubPtr peek(const std::string& key) const;
  Json dump() const;  // diagnostic: key -> {host, port, service_id, epoch, ...}

  const HostPort& registry_addr() const { return registry_addr_; }

  // Test instrumentation: runs on the leader path after the flight is
  // published but before the registry is contacted.
  void set_lookup_started_hook(std::function<void()> hook);

 private:
  struct Entry {
    StubPtr stub;
    uint64_t source_epoch = 0;
    uint64_t inserted_at = 0;
    uint64_t last_access = 0;
    std::list<std::string>::iterator lru_it;
  };

  struct Flight {
    std::mutex mu;
    std::condition_variable cv;
    bool done = false;
    StubPtr stub;
    std::exception_ptr error;
  };

  StubCache(HostPort registry_addr, std::optional<size_t> capacity)
      : registry_addr_(std::move(registry_addr)), capacity_(capacity) {}

  StubPtr make_stub(const ServiceDescription& description,
                    const ProxyDescriptor& proxy);
  void insert_locked(const std::string& key, StubPtr stub, uint64_t epoch);
  void touch_locked(Entry& entry, const std::string& key);

  HostPort registry_addr_;
  std::optional<size_t> capacity_;

  mutable std::mutex mu_;
  std::map<std::string, Entry> table_;
  std::list<std::string> lru_;  // front = most recently used
  std::map<std::string, std::shared_ptr<Flight>> flights_;
  CacheStats stats_;
  std::function<void()> lookup_started_hook_;
};

}  // namespace vstubmw
