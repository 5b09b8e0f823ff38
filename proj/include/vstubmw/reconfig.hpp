#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "vstubmw/cache.hpp"
#include "vstubmw/policy.hpp"

namespace vstubmw {

// Models one user of the environment; a binding is the user holding the
// service's virtual stub.
struct UserComponent {
  std::string user_id;
  std::map<std::string, StubPtr> bindings;
};

struct BindingReport {
  enum class Outcome { kHit, kMiss, kError };

  std::string user_id;
  std::string service_key;
  Outcome outcome = Outcome::kMiss;
  uint64_t event_emitted_at = 0;
  uint64_t binding_established_at = 0;
  uint64_t latency_ns = 0;
  std::string error;

  Json to_json() const;
};

const char* outcome_name(BindingReport::Outcome outcome);

// Everything one policy action produced, for scenario reports and the
// determinism checks. Bind actions additionally carry a BindingReport.
struct ActionRecord {
  std::string policy_id;
  Action::Kind kind = Action::Kind::kBind;
  std::string service_key;
  std::string outcome;  // "hit" | "miss" | "ok" | "removed" | "noop" | "error"
  std::string error;
  std::optional<BindingReport> report;

  Json to_json() const;
};

// How bind obtains stubs: through the cache, or resolving every time
// (the benchmark's "without cache" condition).
enum class BindPath { kCache, kBypass };

// Reconfiguration manager + user components + obligation policy engine.
// Events are processed one at a time; the cache underneath is thread-safe
// but ordering is only guaranteed under serialized submission.
class ReconfigEngine {
 public:
  explicit ReconfigEngine(std::shared_ptr<StubCache> cache,
                          BindPath bind_path = BindPath::kCache)
      : cache_(std::move(cache)), bind_path_(bind_path) {}

  size_t load_policies(const std::string& document);  // returns count loaded
  size_t load_policies_json(const Json& doc);

  UserComponent& user(const std::string& user_id);  // get-or-create

  // Obtains the stub (cache hit/miss or bypass lookup), installs it in the
  // user's bindings, and stamps the measurement interval. Rebinding an
  // already-bound key replaces the handle. On error the bindings are
  // untouched and the error propagates.
  BindingReport bind(UserComponent& user, const ServiceDescription& description,
                     uint64_t event_emitted_at = 0);

  // Removes the binding; the cached stub stays cached.
  bool unbind(UserComponent& user, const std::string& key);

  Json invoke_bound(UserComponent& user, const std::string& key,
                    const std::string& method, const Json& args);

  std::vector<BindingReport> submit_event(const ContextEvent& event);
  std::vector<ActionRecord> submit_event_detailed(const ContextEvent& event);

  const std::shared_ptr<StubCache>& cache() const { return cache_; }
  BindPath bind_path() const { return bind_path_; }
  void set_bind_path(BindPath path) { bind_path_ = path; }
  const std::vector<ObligationPolicy>& policies() const { return policies_; }

 private:
  std::shared_ptr<StubCache> cache_;
  BindPath bind_path_;
  std::vector<ObligationPolicy> policies_;
  std::map<std::string, UserComponent> users_;
};

}  // namespace vstubmw
