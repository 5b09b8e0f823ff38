#include "vstubmw/cache.hpp"

namespace vstubmw {

Json CacheStats::to_json() const {
  return Json{{"hits", hits},
              {"misses", misses},
              {"remote_lookups", remote_lookups},
              {"updates", updates},
              {"evictions", evictions}};
}

std::shared_ptr<StubCache> StubCache::create(HostPort registry_addr,
                                             std::optional<size_t> capacity) {
  return std::shared_ptr<StubCache>(
      new StubCache(std::move(registry_addr), capacity));
}

StubPtr StubCache::make_stub(const ServiceDescription& description,
                             const ProxyDescriptor& proxy) {
  std::weak_ptr<StubCache> weak_self = weak_from_this();
  SnapshotSink sink = [weak_self](const StubSnapshot& snapshot) {
    if (auto self = weak_self.lock()) self->update_entry(snapshot);
  };
  return std::make_shared<VirtualStub>(description, proxy, registry_addr_,
                                       std::move(sink));
}

StubPtr StubCache::do_lookup(const ServiceDescription& description) {
  RegistryClient registry(registry_addr_);
  ProxyDescriptor proxy = registry.lookup(description.key);
  return make_stub(description, proxy);
}

void StubCache::touch_locked(Entry& entry, const std::string& key) {
  entry.last_access = mono_now_ns();
  lru_.erase(entry.lru_it);
  lru_.push_front(key);
  entry.lru_it = lru_.begin();
}

void StubCache::insert_locked(const std::string& key, StubPtr stub,
                              uint64_t epoch) {
  uint64_t now = mono_now_ns();
  auto it = table_.find(key);
  if (it != table_.end()) {
    it->second.stub = std::move(stub);
    it->second.source_epoch = epoch;
    touch_locked(it->second, key);
    return;
  }
  if (capacity_ && table_.size() >= *capacity_ && !lru_.empty()) {
    const std::string& victim = lru_.back();
    table_.erase(victim);
    lru_.pop_back();
    ++stats_.evictions;
  }
  lru_.push_front(key);
  table_[key] = Entry{std::move(stub), epoch, now, now, lru_.begin()};
}

GetResult StubCache::get_virtual_stub(const ServiceDescription& description) {
  const std::string& key = description.key;
  std::shared_ptr<Flight> flight;
  bool leader = false;
  {
    std::unique_lock<std::mutex> lock(mu_);
    auto it = table_.find(key);
    if (it != table_.end()) {
      ++stats_.hits;
      touch_locked(it->second, key);
      return GetResult{it->second.stub, true};
    }
    auto fit = flights_.find(key);
    if (fit != flights_.end()) {
      flight = fit->second;  // join the in-flight lookup
    } else {
      flight = std::make_shared<Flight>();
      flights_[key] = flight;
      leader = true;
      ++stats_.misses;
    }
  }

  if (leader) {
    std::function<void()> hook;
    {
      std::lock_guard<std::mutex> lock(mu_);
      hook = lookup_started_hook_;
    }
    if (hook) hook();

    StubPtr stub;
    std::exception_ptr error;
    try {
      stub = do_lookup(description);
    } catch (...) {
      error = std::current_exception();
    }
    {
      std::lock_guard<std::mutex> lock(mu_);
      if (stub) {
        ++stats_.remote_lookups;
        insert_locked(key, stub, stub->proxy().epoch);
      }
      flights_.erase(key);
    }
    {
      std::lock_guard<std::mutex> flight_lock(flight->mu);
      flight->done = true;
      flight->stub = stub;
      flight->error = error;
    }
    flight->cv.notify_all();
    if (error) std::rethrow_exception(error);
    return GetResult{std::move(stub), false};
  }

  std::unique_lock<std::mutex> flight_lock(flight->mu);
  flight->cv.wait(flight_lock, [&] { return flight->done; });
  if (flight->error) std::rethrow_exception(flight->error);
  {
    std::lock_guard<std::mutex> lock(mu_);
    ++stats_.hits;  // coalesced waiter: no network traffic of its own
  }
  return GetResult{flight->stub, true};
}

void StubCache::update_entry(const StubSnapshot& snapshot) {
  const std::string& key = snapshot.proxy.key;
  StubPtr fresh;  // built outside the table lock if an upsert is needed
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = table_.find(key);
    if (it != table_.end()) {
      if (snapshot.proxy.epoch <= it->second.source_epoch) return;  // stale
      it->second.stub->adopt_proxy_if_newer(snapshot.proxy);
      it->second.source_epoch = snapshot.proxy.epoch;
      ++stats_.updates;
      return;
    }
  }
  ServiceDescription description = snapshot.description;
  if (description.key.empty()) description.key = key;
  fresh = make_stub(description, snapshot.proxy);
  std::lock_guard<std::mutex> lock(mu_);
  auto it = table_.find(key);
  if (it != table_.end()) {
    // Lost the race with a concurrent insert; fall back to the update path.
    if (snapshot.proxy.epoch <= it->second.source_epoch) return;
    it->second.stub->adopt_proxy_if_newer(snapshot.proxy);
    it->second.source_epoch = snapshot.proxy.epoch;
    ++stats_.updates;
    return;
  }
  insert_locked(key, std::move(fresh), snapshot.proxy.epoch);
}

bool StubCache::invalidate(const std::string& key) {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = table_.find(key);
  if (it == table_.end()) return false;
  lru_.erase(it->second.lru_it);
  table_.erase(it);
  return true;
}

size_t StubCache::clear() {
  std::lock_guard<std::mutex> lock(mu_);
  size_t n = table_.size();
  table_.clear();
  lru_.clear();
  return n;
}

CacheStats StubCache::stats() const {
  std::lock_guard<std::mutex> lock(mu_);
  return stats_;
}

size_t StubCache::size() const {
  std::lock_guard<std::mutex> lock(mu_);
  return table_.size();
}

StubPtr StubCache::peek(const std::string& key) const {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = table_.find(key);
  return it == table_.end() ? nullptr : it->second.stub;
}

std::optional<CacheEntryInfo> StubCache::entry_info(const std::string& key) const {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = table_.find(key);
  if (it == table_.end()) return std::nullopt;
  return CacheEntryInfo{it->second.stub->proxy(), it->second.source_epoch,
                        it->second.inserted_at, it->second.last_access};
}

Json StubCache::dump() const {
  std::lock_guard<std::mutex> lock(mu_);
  Json out = Json::object();
  for (const auto& [key, entry] : table_) {
    ProxyDescriptor proxy = entry.stub->proxy();
    out[key] = Json{{"host", proxy.host},
                    {"port", proxy.port},
                    {"service_id", proxy.service_id},
                    {"epoch", proxy.epoch},
                    {"inserted_at", entry.inserted_at},
                    {"last_access", entry.last_access}};
  }
  return out;
}

void StubCache::set_lookup_started_hook(std::function<void()> hook) {
  std::lock_guard<std::mutex> lock(mu_);
  lookup_started_hook_ = std::move(hook);
}

}  // namespace vstubmw
