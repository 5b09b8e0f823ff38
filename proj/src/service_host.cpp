#include "vstubmw/service.hpp"

#include <random>

namespace vstubmw {

namespace {

uint64_t fresh_service_id() {
  static std::mutex mu;
  static std::mt19937_64 rng{std::random_device{}()};
  std::lock_guard<std::mutex> lock(mu);
  return rng() | 1;  // never 0, which marks "unset"
}

int parse_level(const Json& args) {
  if (!args.is_object() || !args.contains("level") ||
      !args.at("level").is_number_integer()) {
    raise(ErrorCode::kBadArgs, "setLevel expects integer field 'level'");
  }
  int level = args.at("level").get<int>();
  if (level < 0 || level > 100) {
    raise(ErrorCode::kBadArgs, "level out of range [0, 100]");
  }
  return level;
}

}  // namespace

Json DeviceState::turn_on() {
  std::lock_guard<std::mutex> lock(mu_);
  on_ = true;
  return Json{{"status", "on"}};
}

Json DeviceState::turn_off() {
  std::lock_guard<std::mutex> lock(mu_);
  on_ = false;
  return Json{{"status", "off"}};
}

Json DeviceState::set_level(const Json& args) {
  int level = parse_level(args);
  std::lock_guard<std::mutex> lock(mu_);
  level_ = level;
  return Json{{"status", "ok"}, {"level", level_}};
}

Json DeviceState::get_state() const {
  std::lock_guard<std::mutex> lock(mu_);
  return Json{{"power", on_ ? "on" : "off"}, {"level", level_}};
}

ServiceImpl make_device_service(const std::string& service_type,
                                const std::string& key) {
  if (service_type != "light" && service_type != "ac") {
    raise(ErrorCode::kInvalidArgument,
          "unknown service type '" + service_type + "' (catalog: light, ac)");
  }
  auto state = std::make_shared<DeviceState>();
  ServiceImpl impl;
  impl.description.key = key;
  impl.description.service_type = service_type;
  impl.methods["turnOn"] = [state](const Json&) { return state->turn_on(); };
  impl.methods["turnOff"] = [state](const Json&) { return state->turn_off(); };
  impl.methods["setLevel"] = [state](const Json& args) {
    return state->set_level(args);
  };
  impl.methods["getState"] = [state](const Json&) { return state->get_state(); };
  return impl;
}

ServiceHost::ServiceHost(ServiceImpl impl, const HostPort& registry_addr,
                         const HostPort& listen)
    : impl_(std::move(impl)) {
  require_valid_key(impl_.description.key);
  server_.start(listen,
                [this](const Envelope& request) { return handle(request); });
  try {
    RegistryClient registry(registry_addr);
    descriptor_ = registry.register_service(impl_.description, listen.host,
                                            server_.port(), fresh_service_id());
  } catch (...) {
    server_.stop();
    throw;
  }
}

void ServiceHost::stop() { server_.stop(); }

Envelope ServiceHost::handle(const Envelope& request) {
  if (request.msg_type != MsgType::kInvoke) {
    return Envelope{MsgType::kErr, request.request_id,
                    Json{{"code", "MalformedPayload"},
                         {"message", "service host only accepts INVOKE"}}};
  }
  const Json& b = request.body;
  uint64_t service_id = b.value("service_id", uint64_t{0});
  uint64_t epoch = b.value("epoch", uint64_t{0});
  std::string method = b.value("method", std::string{});
  Json args = b.contains("args") ? b.at("args") : Json::object();

  auto err = [&](const char* code, const std::string& message) {
    return Envelope{MsgType::kInvokeErr, request.request_id,
                    Json{{"code", code}, {"message", message}}};
  };

  // Epoch gate: a request addressed to any other incarnation is stale and the
  // handler must not run.
  if (service_id != descriptor_.service_id || epoch != descriptor_.epoch) {
    return err("STALE_EPOCH",
               "request names epoch " + std::to_string(epoch) +
                   ", current is " + std::to_string(descriptor_.epoch));
  }
  auto it = impl_.methods.find(method);
  if (it == impl_.methods.end()) {
    return err("NO_SUCH_METHOD", "no method '" + method + "'");
  }
  try {
    Json value = it->second(args);
    return Envelope{MsgType::kInvokeOk, request.request_id,
                    Json{{"value", value}}};
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kBadArgs) return err("BAD_ARGS", e.what());
    return err("INTERNAL", e.what());
  } catch (const std::exception& e) {
    return err("INTERNAL", e.what());
  }
}

Json raw_invoke(const ProxyDescriptor& descriptor, const std::string& method,
                const Json& args, int timeout_ms) {
  Envelope reply;
  try {
    FramedConn conn(Socket::connect_to(descriptor.endpoint(), timeout_ms));
    reply = conn.call(MsgType::kInvoke,
                      Json{{"service_id", descriptor.service_id},
                           {"epoch", descriptor.epoch},
                           {"method", method},
                           {"args", args}});
  } catch (const Error& e) {
    // A connection that dies mid-exchange is the same invalid-binding signal
    // as one that never opens.
    if (e.code() == ErrorCode::kTruncatedFrame) {
      raise(ErrorCode::kTransportFailure, e.what());
    }
    throw;
  }
  if (reply.msg_type == MsgType::kInvokeOk) {
    return reply.body.at("value");
  }
  if (reply.msg_type != MsgType::kInvokeErr) {
    raise(ErrorCode::kMalformedPayload,
          std::string("unexpected reply: ") + msg_type_name(reply.msg_type));
  }
  std::string code = reply.body.value("code", std::string("INTERNAL"));
  std::string message = reply.body.value("message", std::string{});
  if (code == "STALE_EPOCH") raise(ErrorCode::kStaleEpoch, message);
  if (code == "NO_SUCH_METHOD") raise(ErrorCode::kNoSuchMethod, message);
  if (code == "BAD_ARGS") raise(ErrorCode::kBadArgs, message);
  raise(ErrorCode::kInternal, message);
}

}  // namespace vstubmw
