#include "vstubmw/wire.hpp"

#include <array>
#include <cstring>

namespace vstubmw {

namespace {

struct MsgTypeEntry {
  MsgType type;
  const char* name;
};

constexpr std::array<MsgTypeEntry, 13> kMsgTypes{{
    {MsgType::kRegister, "REGISTER"},
    {MsgType::kRegisterOk, "REGISTER_OK"},
    {MsgType::kLookup, "LOOKUP"},
    {MsgType::kLookupOk, "LOOKUP_OK"},
    {MsgType::kNotFound, "NOT_FOUND"},
    {MsgType::kUnregister, "UNREGISTER"},
    {MsgType::kList, "LIST"},
    {MsgType::kListOk, "LIST_OK"},
    {MsgType::kStats, "STATS"},
    {MsgType::kInvoke, "INVOKE"},
    {MsgType::kInvokeOk, "INVOKE_OK"},
    {MsgType::kInvokeErr, "INVOKE_ERR"},
    {MsgType::kErr, "ERR"},
}};

void read_exact(ByteReader& reader, uint8_t* dst, size_t n) {
  size_t got = 0;
  while (got < n) {
    size_t chunk = reader.read_some(dst + got, n - got);
    if (chunk == 0) {
      raise(ErrorCode::kTruncatedFrame,
            "stream ended mid-frame (" + std::to_string(got) + " of " +
                std::to_string(n) + " bytes)");
    }
    got += chunk;
  }
}

}  // namespace

const char* msg_type_name(MsgType type) {
  for (const auto& entry : kMsgTypes) {
    if (entry.type == type) return entry.name;
  }
  return "ERR";
}

MsgType msg_type_from_name(const std::string& name) {
  for (const auto& entry : kMsgTypes) {
    if (name == entry.name) return entry.type;
  }
  raise(ErrorCode::kMalformedPayload, "unknown msg_type: " + name);
}

size_t BufferReader::read_some(uint8_t* dst, size_t max) {
  size_t avail = bytes_.size() - pos_;
  size_t n = avail < max ? avail : max;
  if (n > 0) {
    std::memcpy(dst, bytes_.data() + pos_, n);
    pos_ += n;
  }
  return n;
}

Json envelope_to_json(const Envelope& envelope) {
  return Json{{"msg_type", msg_type_name(envelope.msg_type)},
              {"request_id", envelope.request_id},
              {"body", envelope.body}};
}

Envelope envelope_from_json(const Json& doc) {
  if (!doc.is_object()) {
    raise(ErrorCode::kMalformedPayload, "envelope is not a JSON object");
  }
  auto type_it = doc.find("msg_type");
  if (type_it == doc.end() || !type_it->is_string()) {
    raise(ErrorCode::kMalformedPayload, "envelope missing msg_type");
  }
  auto id_it = doc.find("request_id");
  if (id_it == doc.end() || !id_it->is_number_unsigned()) {
    raise(ErrorCode::kMalformedPayload, "envelope missing request_id");
  }
  auto body_it = doc.find("body");
  if (body_it == doc.end() || !body_it->is_object()) {
    raise(ErrorCode::kMalformedPayload, "envelope body must be an object");
  }
  Envelope envelope;
  envelope.msg_type = msg_type_from_name(type_it->get<std::string>());
  envelope.request_id = id_it->get<uint64_t>();
  envelope.body = *body_it;
  return envelope;
}

std::vector<uint8_t> encode_frame(const Envelope& envelope) {
  std::string payload = envelope_to_json(envelope).dump();
  if (payload.size() > kMaxFrameBytes) {
    raise(ErrorCode::kOversizedFrame,
          "payload of " + std::to_string(payload.size()) +
              " bytes exceeds the frame cap");
  }
  auto length = static_cast<uint32_t>(payload.size());
  std::vector<uint8_t> frame;
  frame.reserve(4 + payload.size());
  frame.push_back(static_cast<uint8_t>(length >> 24));
  frame.push_back(static_cast<uint8_t>(length >> 16));
  frame.push_back(static_cast<uint8_t>(length >> 8));
  frame.push_back(static_cast<uint8_t>(length));
  frame.insert(frame.end(), payload.begin(), payload.end());
  return frame;
}

Envelope decode_frame(ByteReader& reader) {
  uint8_t prefix[4];
  read_exact(reader, prefix, 4);
  uint32_t length = (static_cast<uint32_t>(prefix[0]) << 24) |
                    (static_cast<uint32_t>(prefix[1]) << 16) |
                    (static_cast<uint32_t>(prefix[2]) << 8) |
                    static_cast<uint32_t>(prefix[3]);
  if (length > kMaxFrameBytes) {
    // Reject from the prefix alone; the claimed payload is never allocated.
    raise(ErrorCode::kOversizedFrame,
          "frame claims " + std::to_string(length) + " bytes");
  }
  std::vector<uint8_t> payload(length);
  read_exact(reader, payload.data(), length);
  Json doc = Json::parse(payload.begin(), payload.end(), nullptr,
                         /*allow_exceptions=*/false);
  if (doc.is_discarded()) {
    raise(ErrorCode::kMalformedPayload, "frame payload is not valid JSON");
  }
  return envelope_from_json(doc);
}

Envelope FrameReader::next() {
  if (failed_) {
    raise(ErrorCode::kMalformedPayload,
          "connection abandoned after an earlier framing error");
  }
  try {
    return decode_frame(source_);
  } catch (const Error&) {
    failed_ = true;
    throw;
  }
}

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kOversizedFrame: return "OversizedFrame";
    case ErrorCode::kTruncatedFrame: return "TruncatedFrame";
    case ErrorCode::kMalformedPayload: return "MalformedPayload";
    case ErrorCode::kInvalidKey: return "InvalidKey";
    case ErrorCode::kServiceNotFound: return "ServiceNotFound";
    case ErrorCode::kRegistryUnavailable: return "RegistryUnavailable";
    case ErrorCode::kTransportFailure: return "TransportFailure";
    case ErrorCode::kStaleEpoch: return "StaleEpoch";
    case ErrorCode::kNoSuchMethod: return "NoSuchMethod";
    case ErrorCode::kBadArgs: return "BadArgs";
    case ErrorCode::kInternal: return "Internal";
    case ErrorCode::kUnresolvableBinding: return "UnresolvableBinding";
    case ErrorCode::kKeyMismatch: return "KeyMismatch";
    case ErrorCode::kNotBound: return "NotBound";
    case ErrorCode::kDuplicatePolicyId: return "DuplicatePolicyId";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kPortInUse: return "PortInUse";
    case ErrorCode::kSetupFailure: return "SetupFailure";
    case ErrorCode::kTrialError: return "TrialError";
    case ErrorCode::kInsufficientSamples: return "InsufficientSamples";
    case ErrorCode::kIoFailure: return "IoFailure";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

}  // namespace vstubmw
