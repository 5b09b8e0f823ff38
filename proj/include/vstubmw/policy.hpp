#pragma once

#include <optional>
#include <string>
#include <vector>

#include "vstubmw/wire.hpp"

namespace vstubmw {

enum class Phase { kEnter, kLeave };

const char* phase_name(Phase phase);
Phase phase_from_name(const std::string& name);  // throws kParseError

// A context notification, e.g. user presence in a room. emitted_at is the
// monotonic stamp taken where the event originates; reconfiguration time is
// measured from it.
struct ContextEvent {
  std::string event_type;
  std::string user_id;
  std::string location;  // hierarchical path, e.g. "/room1"
  Phase phase = Phase::kEnter;
  uint64_t emitted_at = 0;

  Json to_json() const;
  static ContextEvent from_json(const Json& doc);
};

struct Condition {
  std::string field;  // "user_id" | "location"
  std::string equals;
};

struct Action {
  enum class Kind { kBind, kUnbind, kInvoke };
  Kind kind = Kind::kBind;
  std::string key_template;  // "{location}" expands to the event's location
  std::string method;        // invoke only
  Json args = Json::object();
};

const char* action_kind_name(Action::Kind kind);

// Event-condition-action rule. On a matching event whose condition holds,
// the actions run in order.
struct ObligationPolicy {
  std::string id;
  std::string event_type;
  std::optional<Phase> phase;
  std::vector<Condition> conditions;
  std::vector<Action> actions;

  bool matches(const ContextEvent& event) const;
};

// Parses the policy document format:
//   {"policies":[{"id":..., "on":{"event":..., "phase":...},
//                 "if":[{"field":..., "equals":...}],
//                 "do":[{"bind":...}|{"unbind":...}|
//                       {"invoke":{"key":...,"method":...,"args":{}}}]}]}
// Throws kParseError with a field path in the message.
std::vector<ObligationPolicy> parse_policy_document(const std::string& text);
std::vector<ObligationPolicy> parse_policy_json(const Json& doc);

std::string expand_template(const std::string& key_template,
                            const ContextEvent& event);

}  // namespace vstubmw
