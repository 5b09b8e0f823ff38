#include "vstubmw/registry.hpp"

namespace vstubmw {

namespace {

// Server-side Error replies arrive as ERR envelopes; rethrow them under the
// code the server named so callers see one taxonomy for local and remote
// failures.
[[noreturn]] void rethrow_remote(const Envelope& reply) {
  std::string code = reply.body.value("code", std::string("Internal"));
  std::string message = reply.body.value("message", std::string("remote error"));
  if (code == "InvalidKey") raise(ErrorCode::kInvalidKey, message);
  if (code == "MalformedPayload") raise(ErrorCode::kMalformedPayload, message);
  raise(ErrorCode::kInternal, message);
}

}  // namespace

Envelope RegistryClient::call(MsgType type, Json body) {
  try {
    FramedConn conn(Socket::connect_to(addr_, timeout_ms_));
    Envelope reply = conn.call(type, std::move(body));
    if (reply.msg_type == MsgType::kErr) rethrow_remote(reply);
    return reply;
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kTransportFailure ||
        e.code() == ErrorCode::kTruncatedFrame) {
      raise(ErrorCode::kRegistryUnavailable,
            "registry " + addr_.str() + ": " + e.what());
    }
    throw;
  }
}

ProxyDescriptor RegistryClient::register_service(
    const ServiceDescription& description, const std::string& host,
    uint16_t port, uint64_t service_id) {
  require_valid_key(description.key);
  Json body = description.to_json();
  body["host"] = host;
  body["port"] = port;
  body["service_id"] = service_id;
  Envelope reply = call(MsgType::kRegister, std::move(body));
  return ProxyDescriptor::from_json(reply.body.at("descriptor"));
}

ProxyDescriptor RegistryClient::lookup(const std::string& key) {
  Envelope reply = call(MsgType::kLookup, Json{{"key", key}});
  if (reply.msg_type == MsgType::kNotFound) {
    raise(ErrorCode::kServiceNotFound, "no service registered at " + key);
  }
  return ProxyDescriptor::from_json(reply.body.at("descriptor"));
}

void RegistryClient::unregister(const std::string& key, uint64_t epoch) {
  call(MsgType::kUnregister, Json{{"key", key}, {"epoch", epoch}});
}

std::vector<ServiceDescription> RegistryClient::list(const std::string& prefix) {
  Envelope reply = call(MsgType::kList, Json{{"prefix", prefix}});
  std::vector<ServiceDescription> out;
  for (const auto& item : reply.body.at("descriptions")) {
    out.push_back(ServiceDescription::from_json(item));
  }
  return out;
}

RegistryStats RegistryClient::stats() {
  Envelope reply = call(MsgType::kStats, Json::object());
  const Json& counters = reply.body.at("counters");
  RegistryStats s;
  s.lookup_count = counters.at("lookup_count").get<uint64_t>();
  s.register_count = counters.at("register_count").get<uint64_t>();
  s.entry_count = counters.at("entry_count").get<uint64_t>();
  return s;
}

}  // namespace vstubmw
