#include "vstubmw/stub.hpp"

namespace vstubmw {

Json StubSnapshot::to_json() const {
  return Json{{"key", proxy.key},
              {"host", proxy.host},
              {"port", proxy.port},
              {"service_id", proxy.service_id},
              {"epoch", proxy.epoch}};
}

StubSnapshot StubSnapshot::from_json(const Json& doc) {
  StubSnapshot s;
  s.proxy = ProxyDescriptor::from_json(doc);
  s.description.key = s.proxy.key;
  s.captured_at = mono_now_ns();
  return s;
}

VirtualStub::VirtualStub(ServiceDescription description, ProxyDescriptor proxy,
                         HostPort registry_addr, SnapshotSink notifier)
    : description_(std::move(description)),
      registry_addr_(std::move(registry_addr)),
      notifier_(std::move(notifier)),
      proxy_(std::move(proxy)) {
  if (proxy_.key != description_.key) {
    raise(ErrorCode::kKeyMismatch, "proxy key '" + proxy_.key +
                                       "' does not match description key '" +
                                       description_.key + "'");
  }
}

ProxyDescriptor VirtualStub::proxy() const {
  std::lock_guard<std::mutex> lock(mu_);
  return proxy_;
}

StubSnapshot VirtualStub::snapshot() const {
  std::lock_guard<std::mutex> lock(mu_);
  return StubSnapshot{description_, proxy_, mono_now_ns()};
}

StubCounters VirtualStub::counters() const {
  std::lock_guard<std::mutex> lock(mu_);
  return counters_;
}

bool VirtualStub::adopt_proxy_if_newer(const ProxyDescriptor& candidate) {
  if (candidate.key != description_.key) {
    raise(ErrorCode::kKeyMismatch, "descriptor for '" + candidate.key +
                                       "' offered to stub of '" +
                                       description_.key + "'");
  }
  std::lock_guard<std::mutex> lock(mu_);
  if (candidate.epoch <= proxy_.epoch) return false;
  proxy_ = candidate;
  return true;
}

Json VirtualStub::invoke(const std::string& method, const Json& args) {
  ProxyDescriptor attempt_proxy;
  {
    std::lock_guard<std::mutex> lock(mu_);
    ++counters_.calls_total;
    attempt_proxy = proxy_;
  }

  int budget = retry_budget_;
  while (true) {
    try {
      return raw_invoke(attempt_proxy, method, args, invoke_timeout_ms_);
    } catch (const Error& e) {
      if (!is_invalid_binding(e.code())) throw;
      if (budget <= 0) {
        if (retry_budget_ > 0) {
          raise(ErrorCode::kUnresolvableBinding,
                "retry against " + attempt_proxy.endpoint().str() + " (epoch " +
                    std::to_string(attempt_proxy.epoch) + ") failed: " + e.what());
        }
        throw;  // budget configured to zero: surface the raw binding error
      }
      --budget;
    }

    // Invalid binding: discover the current incarnation, replace the old
    // proxy, hand a copy of ourselves to the cache manager, then retry.
    ProxyDescriptor fresh;
    try {
      RegistryClient registry(registry_addr_);
      fresh = registry.lookup(description_.key);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kServiceNotFound) {
        raise(ErrorCode::kUnresolvableBinding,
              "service '" + description_.key + "' is gone: " + e.what());
      }
      throw;  // RegistryUnavailable
    }

    adopt_proxy_if_newer(fresh);
    StubSnapshot copy;
    {
      std::lock_guard<std::mutex> lock(mu_);
      ++counters_.failovers;
      ++counters_.retries;
      attempt_proxy = proxy_;
      copy = StubSnapshot{description_, proxy_, mono_now_ns()};
    }
    if (notifier_) {
      try {
        notifier_(copy);
      } catch (...) {
        // Cache coherence is best-effort; a notifier failure must never
        // surface to the caller.
      }
    }
  }
}

}  // namespace vstubmw
