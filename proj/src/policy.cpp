#include "vstubmw/policy.hpp"

namespace vstubmw {

namespace {

[[noreturn]] void parse_fail(const std::string& where, const std::string& what) {
  raise(ErrorCode::kParseError, where + ": " + what);
}

std::string require_string(const Json& doc, const char* field,
                           const std::string& where) {
  auto it = doc.find(field);
  if (it == doc.end() || !it->is_string() || it->get<std::string>().empty()) {
    parse_fail(where, std::string("missing or empty string field '") + field + "'");
  }
  return it->get<std::string>();
}

Action parse_action(const Json& doc, const std::string& where) {
  if (!doc.is_object() || doc.size() != 1) {
    parse_fail(where, "an action is a single-key object: bind | unbind | invoke");
  }
  Action action;
  if (doc.contains("bind")) {
    action.kind = Action::Kind::kBind;
    if (!doc.at("bind").is_string()) parse_fail(where, "'bind' takes a key template");
    action.key_template = doc.at("bind").get<std::string>();
  } else if (doc.contains("unbind")) {
    action.kind = Action::Kind::kUnbind;
    if (!doc.at("unbind").is_string()) parse_fail(where, "'unbind' takes a key template");
    action.key_template = doc.at("unbind").get<std::string>();
  } else if (doc.contains("invoke")) {
    action.kind = Action::Kind::kInvoke;
    const Json& inv = doc.at("invoke");
    if (!inv.is_object()) parse_fail(where, "'invoke' takes an object");
    action.key_template = require_string(inv, "key", where + ".invoke");
    action.method = require_string(inv, "method", where + ".invoke");
    if (inv.contains("args")) {
      if (!inv.at("args").is_object()) parse_fail(where + ".invoke", "'args' must be an object");
      action.args = inv.at("args");
    }
  } else {
    parse_fail(where, "unknown action kind '" + doc.begin().key() + "'");
  }
  if (action.key_template.empty()) parse_fail(where, "empty key template");
  return action;
}

}  // namespace

const char* phase_name(Phase phase) {
  return phase == Phase::kEnter ? "enter" : "leave";
}

Phase phase_from_name(const std::string& name) {
  if (name == "enter") return Phase::kEnter;
  if (name == "leave") return Phase::kLeave;
  raise(ErrorCode::kParseError, "phase must be 'enter' or 'leave', got '" + name + "'");
}

const char* action_kind_name(Action::Kind kind) {
  switch (kind) {
    case Action::Kind::kBind: return "bind";
    case Action::Kind::kUnbind: return "unbind";
    case Action::Kind::kInvoke: return "invoke";
  }
  return "bind";
}

Json ContextEvent::to_json() const {
  return Json{{"event_type", event_type},
              {"user", user_id},
              {"location", location},
              {"phase", phase_name(phase)},
              {"emitted_at", emitted_at}};
}

ContextEvent ContextEvent::from_json(const Json& doc) {
  ContextEvent event;
  event.event_type = require_string(doc, "event_type", "event");
  event.user_id = doc.value("user", std::string{});
  event.location = doc.value("location", std::string{});
  event.phase = phase_from_name(doc.value("phase", std::string("enter")));
  event.emitted_at = doc.value("emitted_at", uint64_t{0});
  return event;
}

bool ObligationPolicy::matches(const ContextEvent& event) const {
  if (event.event_type != event_type) return false;
  if (phase && *phase != event.phase) return false;
  for (const auto& condition : conditions) {
    if (condition.field == "user_id") {
      if (event.user_id != condition.equals) return false;
    } else if (condition.field == "location") {
      if (event.location != condition.equals) return false;
    }
  }
  return true;
}

std::vector<ObligationPolicy> parse_policy_json(const Json& doc) {
  if (!doc.is_object() || !doc.contains("policies") ||
      !doc.at("policies").is_array()) {
    parse_fail("document", "expected top-level object with a 'policies' array");
  }
  std::vector<ObligationPolicy> policies;
  size_t index = 0;
  for (const Json& p : doc.at("policies")) {
    std::string where = "policies[" + std::to_string(index++) + "]";
    ObligationPolicy policy;
    policy.id = require_string(p, "id", where);
    if (!p.contains("on") || !p.at("on").is_object()) {
      parse_fail(where, "missing 'on' event pattern");
    }
    policy.event_type = require_string(p.at("on"), "event", where + ".on");
    if (p.at("on").contains("phase")) {
      policy.phase = phase_from_name(p.at("on").at("phase").get<std::string>());
    }
    if (p.contains("if")) {
      if (!p.at("if").is_array()) parse_fail(where, "'if' must be an array");
      for (const Json& c : p.at("if")) {
        Condition condition;
        condition.field = require_string(c, "field", where + ".if");
        if (condition.field != "user_id" && condition.field != "location") {
          parse_fail(where + ".if",
                     "condition field must be 'user_id' or 'location', got '" +
                         condition.field + "'");
        }
        auto eq = c.find("equals");
        if (eq == c.end() || !eq->is_string()) {
          parse_fail(where + ".if", "condition needs a string 'equals'");
        }
        condition.equals = eq->get<std::string>();
        policy.conditions.push_back(std::move(condition));
      }
    }
    if (!p.contains("do") || !p.at("do").is_array() || p.at("do").empty()) {
      parse_fail(where, "a policy needs a non-empty 'do' action list");
    }
    size_t action_index = 0;
    for (const Json& a : p.at("do")) {
      policy.actions.push_back(parse_action(
          a, where + ".do[" + std::to_string(action_index++) + "]"));
    }
    policies.push_back(std::move(policy));
  }
  return policies;
}

std::vector<ObligationPolicy> parse_policy_document(const std::string& text) {
  Json doc = Json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded()) {
    raise(ErrorCode::kParseError, "policy document is not valid JSON");
  }
  return parse_policy_json(doc);
}

std::string expand_template(const std::string& key_template,
                            const ContextEvent& event) {
  std::string out = key_template;
  const std::string placeholder = "{location}";
  size_t pos = 0;
  while ((pos = out.find(placeholder, pos)) != std::string::npos) {
    out.replace(pos, placeholder.size(), event.location);
    pos += event.location.size();
  }
  return out;
}

}  // namespace vstubmw
