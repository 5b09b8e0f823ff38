#include "vstubmw/registry.hpp"

namespace vstubmw {

bool valid_key(const std::string& key) {
  if (key.size() < 2 || key[0] != '/') return false;
  if (key.back() == '/') return false;
  for (size_t i = 1; i < key.size(); ++i) {
    if (key[i] == '/' && key[i - 1] == '/') return false;
  }
  return true;
}

void require_valid_key(const std::string& key) {
  if (!valid_key(key)) {
    raise(ErrorCode::kInvalidKey, "invalid service key: '" + key + "'");
  }
}

bool key_has_prefix(const std::string& key, const std::string& prefix) {
  if (prefix == "/") return true;
  if (key == prefix) return true;
  return key.size() > prefix.size() && key.compare(0, prefix.size(), prefix) == 0 &&
         key[prefix.size()] == '/';
}

Json ServiceDescription::to_json() const {
  return Json{{"key", key},
              {"service_type", service_type},
              {"attributes", attributes}};
}

ServiceDescription ServiceDescription::from_json(const Json& doc) {
  ServiceDescription d;
  d.key = doc.at("key").get<std::string>();
  d.service_type = doc.value("service_type", std::string{});
  if (doc.contains("attributes")) {
    d.attributes = doc.at("attributes").get<std::map<std::string, std::string>>();
  }
  return d;
}

Json ProxyDescriptor::to_json() const {
  return Json{{"key", key},
              {"host", host},
              {"port", port},
              {"service_id", service_id},
              {"epoch", epoch}};
}

ProxyDescriptor ProxyDescriptor::from_json(const Json& doc) {
  ProxyDescriptor p;
  p.key = doc.at("key").get<std::string>();
  p.host = doc.at("host").get<std::string>();
  p.port = doc.at("port").get<uint16_t>();
  p.service_id = doc.at("service_id").get<uint64_t>();
  p.epoch = doc.at("epoch").get<uint64_t>();
  return p;
}

void RegistryServer::start(const HostPort& listen) {
  server_.start(listen, [this](const Envelope& request) { return handle(request); });
}

void RegistryServer::stop() { server_.stop(); }

Envelope RegistryServer::handle(const Envelope& request) {
  switch (request.msg_type) {
    case MsgType::kRegister: return handle_register(request);
    case MsgType::kLookup: return handle_lookup(request);
    case MsgType::kUnregister: return handle_unregister(request);
    case MsgType::kList: return handle_list(request);
    case MsgType::kStats: return handle_stats(request);
    default:
      return Envelope{MsgType::kErr, request.request_id,
                      Json{{"code", "MalformedPayload"},
                           {"message", std::string("unexpected message: ") +
                                           msg_type_name(request.msg_type)}}};
  }
}

Envelope RegistryServer::handle_register(const Envelope& request) {
  const Json& b = request.body;
  ServiceDescription description = ServiceDescription::from_json(b);
  require_valid_key(description.key);

  ProxyDescriptor descriptor;
  descriptor.key = description.key;
  descriptor.host = b.at("host").get<std::string>();
  descriptor.port = b.at("port").get<uint16_t>();
  descriptor.service_id = b.at("service_id").get<uint64_t>();

  std::lock_guard<std::mutex> lock(mu_);
  uint64_t& next = next_epoch_[description.key];
  descriptor.epoch = ++next;
  entries_[description.key] = Entry{description, descriptor};
  ++register_count_;
  return Envelope{MsgType::kRegisterOk, request.request_id,
                  Json{{"epoch", descriptor.epoch},
                       {"descriptor", descriptor.to_json()}}};
}

Envelope RegistryServer::handle_lookup(const Envelope& request) {
  std::string key = request.body.at("key").get<std::string>();
  std::lock_guard<std::mutex> lock(mu_);
  ++lookup_count_;
  auto it = entries_.find(key);
  if (it == entries_.end()) {
    return Envelope{MsgType::kNotFound, request.request_id, Json{{"key", key}}};
  }
  return Envelope{MsgType::kLookupOk, request.request_id,
                  Json{{"descriptor", it->second.descriptor.to_json()}}};
}

Envelope RegistryServer::handle_unregister(const Envelope& request) {
  std::string key = request.body.at("key").get<std::string>();
  uint64_t epoch = request.body.at("epoch").get<uint64_t>();
  std::lock_guard<std::mutex> lock(mu_);
  auto it = entries_.find(key);
  // Removal only when the caller names the live incarnation; stale
  // unregisters from older incarnations are ignored.
  if (it != entries_.end() && it->second.descriptor.epoch == epoch) {
    entries_.erase(it);
  }
  return Envelope{MsgType::kRegisterOk, request.request_id, Json{{"epoch", 0}}};
}

Envelope RegistryServer::handle_list(const Envelope& request) {
  std::string prefix = request.body.at("prefix").get<std::string>();
  Json descriptions = Json::array();
  std::lock_guard<std::mutex> lock(mu_);
  for (const auto& [key, entry] : entries_) {  // std::map: lexicographic order
    if (key_has_prefix(key, prefix)) {
      descriptions.push_back(entry.description.to_json());
    }
  }
  return Envelope{MsgType::kListOk, request.request_id,
                  Json{{"descriptions", descriptions}}};
}

Envelope RegistryServer::handle_stats(const Envelope& request) {
  std::lock_guard<std::mutex> lock(mu_);
  return Envelope{MsgType::kListOk, request.request_id,
                  Json{{"counters",
                        Json{{"lookup_count", lookup_count_},
                             {"register_count", register_count_},
                             {"entry_count", entries_.size()}}}}};
}

}  // namespace vstubmw
