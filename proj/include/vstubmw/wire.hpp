#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "vstubmw/error.hpp"

namespace vstubmw {

using Json = nlohmann::json;

// One frame = 4-byte big-endian payload length + that many bytes of UTF-8
// JSON. Anything larger than the cap is a protocol error on both sides.
inline constexpr uint32_t kMaxFrameBytes = 16u * 1024u * 1024u;

enum class MsgType {
  kRegister,
  kRegisterOk,
  kLookup,
  kLookupOk,
  kNotFound,
  kUnregister,
  kList,
  kListOk,
  kStats,
  kInvoke,
  kInvokeOk,
  kInvokeErr,
  kErr,
};

const char* msg_type_name(MsgType type);
MsgType msg_type_from_name(const std::string& name);  // throws kMalformedPayload

struct Envelope {
  MsgType msg_type = MsgType::kErr;
  uint64_t request_id = 0;
  Json body = Json::object();

  bool operator==(const Envelope& other) const = default;
};

// Pull-based byte source so the codec can be fed from sockets and buffers
// alike. read_some returns 0 on end of stream.
class ByteReader {
 public:
  virtual ~ByteReader() = default;
  virtual size_t read_some(uint8_t* dst, size_t max) = 0;
};

class BufferReader final : public ByteReader {
 public:
  explicit BufferReader(std::vector<uint8_t> bytes) : bytes_(std::move(bytes)) {}

  size_t read_some(uint8_t* dst, size_t max) override;
  size_t consumed() const { return pos_; }
  bool exhausted() const { return pos_ == bytes_.size(); }

 private:
  std::vector<uint8_t> bytes_;
  size_t pos_ = 0;
};

std::vector<uint8_t> encode_frame(const Envelope& envelope);

// Consumes exactly one frame from the reader. The length prefix is validated
// against kMaxFrameBytes before any payload is read or allocated.
Envelope decode_frame(ByteReader& reader);

// Per-connection decoder: once a frame fails to decode, the stream position
// is unknowable and every further read on this connection fails too.
class FrameReader {
 public:
  explicit FrameReader(ByteReader& source) : source_(source) {}

  Envelope next();
  bool failed() const { return failed_; }

 private:
  ByteReader& source_;
  bool failed_ = false;
};

Json envelope_to_json(const Envelope& envelope);
Envelope envelope_from_json(const Json& doc);  // throws kMalformedPayload

}  // namespace vstubmw
