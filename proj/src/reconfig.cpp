#include "vstubmw/reconfig.hpp"

#include <set>

namespace vstubmw {

const char* outcome_name(BindingReport::Outcome outcome) {
  switch (outcome) {
    case BindingReport::Outcome::kHit: return "hit";
    case BindingReport::Outcome::kMiss: return "miss";
    case BindingReport::Outcome::kError: return "error";
  }
  return "error";
}

Json BindingReport::to_json() const {
  Json out{{"user", user_id},
           {"service_key", service_key},
           {"outcome", outcome_name(outcome)},
           {"event_emitted_at", event_emitted_at},
           {"binding_established_at", binding_established_at},
           {"latency_ns", latency_ns}};
  if (!error.empty()) out["error"] = error;
  return out;
}

Json ActionRecord::to_json() const {
  Json out{{"policy_id", policy_id},
           {"action", action_kind_name(kind)},
           {"service_key", service_key},
           {"outcome", outcome}};
  if (!error.empty()) out["error"] = error;
  if (report) out["report"] = report->to_json();
  return out;
}

size_t ReconfigEngine::load_policies(const std::string& document) {
  return load_policies_json([&] {
    Json doc = Json::parse(document, nullptr, /*allow_exceptions=*/false);
    if (doc.is_discarded()) {
      raise(ErrorCode::kParseError, "policy document is not valid JSON");
    }
    return doc;
  }());
}

size_t ReconfigEngine::load_policies_json(const Json& doc) {
  std::vector<ObligationPolicy> parsed = parse_policy_json(doc);
  std::set<std::string> ids;
  for (const auto& policy : policies_) ids.insert(policy.id);
  for (const auto& policy : parsed) {
    if (!ids.insert(policy.id).second) {
      raise(ErrorCode::kDuplicatePolicyId,
            "duplicate policy id '" + policy.id + "'");
    }
  }
  for (auto& policy : parsed) policies_.push_back(std::move(policy));
  return parsed.size();
}

UserComponent& ReconfigEngine::user(const std::string& user_id) {
  auto [it, inserted] = users_.try_emplace(user_id);
  if (inserted) it->second.user_id = user_id;
  return it->second;
}

BindingReport ReconfigEngine::bind(UserComponent& user,
                                   const ServiceDescription& description,
                                   uint64_t event_emitted_at) {
  BindingReport report;
  report.user_id = user.user_id;
  report.service_key = description.key;
  report.event_emitted_at =
      event_emitted_at != 0 ? event_emitted_at : mono_now_ns();

  StubPtr stub;
  if (bind_path_ == BindPath::kCache) {
    GetResult got = cache_->get_virtual_stub(description);
    stub = std::move(got.stub);
    report.outcome =
        got.hit ? BindingReport::Outcome::kHit : BindingReport::Outcome::kMiss;
  } else {
    stub = cache_->do_lookup(description);  // resolve every time
    report.outcome = BindingReport::Outcome::kMiss;
  }
  user.bindings[description.key] = std::move(stub);
  report.binding_established_at = mono_now_ns();
  report.latency_ns = report.binding_established_at - report.event_emitted_at;
  return report;
}

bool ReconfigEngine::unbind(UserComponent& user, const std::string& key) {
  return user.bindings.erase(key) > 0;
}

Json ReconfigEngine::invoke_bound(UserComponent& user, const std::string& key,
                                  const std::string& method, const Json& args) {
  auto it = user.bindings.find(key);
  if (it == user.bindings.end()) {
    raise(ErrorCode::kNotBound,
          "user '" + user.user_id + "' has no binding for " + key);
  }
  return it->second->invoke(method, args);
}

std::vector<BindingReport> ReconfigEngine::submit_event(
    const ContextEvent& event) {
  std::vector<BindingReport> reports;
  for (const auto& record : submit_event_detailed(event)) {
    if (record.report) reports.push_back(*record.report);
  }
  return reports;
}

std::vector<ActionRecord> ReconfigEngine::submit_event_detailed(
    const ContextEvent& event) {
  ContextEvent stamped = event;
  if (stamped.emitted_at == 0) stamped.emitted_at = mono_now_ns();

  std::vector<ActionRecord> records;
  for (const auto& policy : policies_) {  // registration order
    if (!policy.matches(stamped)) continue;
    UserComponent& target = user(stamped.user_id);
    for (const auto& action : policy.actions) {
      ActionRecord record;
      record.policy_id = policy.id;
      record.kind = action.kind;
      record.service_key = expand_template(action.key_template, stamped);
      try {
        switch (action.kind) {
          case Action::Kind::kBind: {
            ServiceDescription description;
            description.key = record.service_key;
            BindingReport report =
                bind(target, description, stamped.emitted_at);
            record.outcome = outcome_name(report.outcome);
            record.report = std::move(report);
            break;
          }
          case Action::Kind::kUnbind:
            record.outcome =
                unbind(target, record.service_key) ? "removed" : "noop";
            break;
          case Action::Kind::kInvoke:
            invoke_bound(target, record.service_key, action.method, action.args);
            record.outcome = "ok";
            break;
        }
        records.push_back(std::move(record));
      } catch (const Error& e) {
        record.outcome = "error";
        record.error = std::string(error_code_name(e.code())) + ": " + e.what();
        if (action.kind == Action::Kind::kBind) {
          BindingReport report;
          report.user_id = target.user_id;
          report.service_key = record.service_key;
          report.outcome = BindingReport::Outcome::kError;
          report.event_emitted_at = stamped.emitted_at;
          report.binding_established_at = mono_now_ns();
          report.latency_ns =
              report.binding_established_at - report.event_emitted_at;
          report.error = record.error;
          record.report = std::move(report);
        }
        records.push_back(std::move(record));
        break;  // abort this policy's remaining actions only
      }
    }
  }
  return records;
}

}  // namespace vstubmw
