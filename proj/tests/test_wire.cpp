#include <doctest.h>

#include <functional>

#include "test_util.hpp"
#include "vstubmw/wire.hpp"

using namespace vstubmw;
using vstubmw::testing::CountingReader;
using vstubmw::testing::EnvelopeGen;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::kInternal;
}

}  // namespace

TEST_CASE("frame prefix is the big-endian payload length") {
  Envelope e{MsgType::kErr, 9, Json::object()};
  auto frame = encode_frame(e);
  REQUIRE(frame.size() > 4);
  uint32_t claimed = (uint32_t(frame[0]) << 24) | (uint32_t(frame[1]) << 16) |
                     (uint32_t(frame[2]) << 8) | uint32_t(frame[3]);
  CHECK(claimed == frame.size() - 4);
}

TEST_CASE("lookup envelope carries the key verbatim") {
  Envelope e{MsgType::kLookup, 1, Json{{"key", "/room1/light"}}};
  auto frame = encode_frame(e);
  std::string payload(frame.begin() + 4, frame.end());
  CHECK(payload.find("/room1/light") != std::string::npos);
}

TEST_CASE("encode/decode round-trip") {
  Envelope e{MsgType::kLookup, 42, Json{{"key", "/room1/light"}}};
  BufferReader reader(encode_frame(e));
  Envelope back = decode_frame(reader);
  CHECK(back == e);
  CHECK(reader.exhausted());
}

TEST_CASE("round-trip property over generated envelopes") {
  EnvelopeGen gen(0xC0FFEE);
  for (int i = 0; i < 2000; ++i) {
    Envelope e = gen.next();
    BufferReader reader(encode_frame(e));
    CHECK(decode_frame(reader) == e);
    CHECK(reader.exhausted());
  }
}

TEST_CASE("frames are self-delimiting when concatenated") {
  EnvelopeGen gen(7);
  std::vector<Envelope> all;
  std::vector<uint8_t> stream;
  for (int i = 0; i < 50; ++i) {
    all.push_back(gen.next());
    auto frame = encode_frame(all.back());
    stream.insert(stream.end(), frame.begin(), frame.end());
  }
  BufferReader reader(std::move(stream));
  for (const auto& expected : all) {
    CHECK(decode_frame(reader) == expected);
  }
  CHECK(reader.exhausted());
}

TEST_CASE("truncated frame") {
  SUBCASE("prefix claims more bytes than the stream holds") {
    std::vector<uint8_t> bytes{0, 0, 0, 10, 'a', 'b', 'c'};
    BufferReader reader(std::move(bytes));
    CHECK(code_of([&] { decode_frame(reader); }) == ErrorCode::kTruncatedFrame);
  }
  SUBCASE("stream ends inside the prefix") {
    BufferReader reader({0, 0});
    CHECK(code_of([&] { decode_frame(reader); }) == ErrorCode::kTruncatedFrame);
  }
}

TEST_CASE("oversized frame is rejected from the prefix alone") {
  // 2^31 claimed; only the 4 prefix bytes exist. If the decoder tried to read
  // or allocate the payload it would report truncation instead.
  CountingReader reader({0x80, 0x00, 0x00, 0x00});
  CHECK(code_of([&] { decode_frame(reader); }) == ErrorCode::kOversizedFrame);
  CHECK(reader.handed_out() == 4);
}

TEST_CASE("oversized encode is refused") {
  Envelope e{MsgType::kInvoke, 1,
             Json{{"blob", std::string(kMaxFrameBytes, 'x')}}};
  CHECK(code_of([&] { encode_frame(e); }) == ErrorCode::kOversizedFrame);
}

TEST_CASE("malformed payloads") {
  auto framed = [](const std::string& payload) {
    std::vector<uint8_t> bytes;
    uint32_t n = payload.size();
    bytes.push_back(n >> 24);
    bytes.push_back(n >> 16);
    bytes.push_back(n >> 8);
    bytes.push_back(n);
    bytes.insert(bytes.end(), payload.begin(), payload.end());
    return bytes;
  };
  SUBCASE("not JSON") {
    BufferReader reader(framed("hello"));
    CHECK(code_of([&] { decode_frame(reader); }) ==
          ErrorCode::kMalformedPayload);
  }
  SUBCASE("missing msg_type") {
    BufferReader reader(framed(R"({"request_id":1,"body":{}})"));
    CHECK(code_of([&] { decode_frame(reader); }) ==
          ErrorCode::kMalformedPayload);
  }
  SUBCASE("unknown msg_type") {
    BufferReader reader(framed(R"({"msg_type":"NOPE","request_id":1,"body":{}})"));
    CHECK(code_of([&] { decode_frame(reader); }) ==
          ErrorCode::kMalformedPayload);
  }
  SUBCASE("body not an object") {
    BufferReader reader(framed(R"({"msg_type":"ERR","request_id":1,"body":3})"));
    CHECK(code_of([&] { decode_frame(reader); }) ==
          ErrorCode::kMalformedPayload);
  }
}

TEST_CASE("a framing error is terminal for the connection") {
  // A valid frame sits right behind a malformed one, but the reader must not
  // resynchronize: the first failure poisons the stream.
  Envelope good{MsgType::kErr, 3, Json::object()};
  std::vector<uint8_t> bytes{0, 0, 0, 2, 'n', 'o'};
  auto tail = encode_frame(good);
  bytes.insert(bytes.end(), tail.begin(), tail.end());

  BufferReader buffer(std::move(bytes));
  FrameReader reader(buffer);
  CHECK(code_of([&] { reader.next(); }) == ErrorCode::kMalformedPayload);
  CHECK(reader.failed());
  CHECK_THROWS_AS(reader.next(), Error);
}
