#pragma once

#include <random>
#include <string>
#include <vector>

#include "vstubmw/wire.hpp"

namespace vstubmw::testing {

// Random but valid envelopes for round-trip property tests.
class EnvelopeGen {
 public:
  explicit EnvelopeGen(uint64_t seed) : rng_(seed) {}

  Envelope next() {
    static const MsgType kTypes[] = {
        MsgType::kRegister, MsgType::kRegisterOk, MsgType::kLookup,
        MsgType::kLookupOk, MsgType::kNotFound,   MsgType::kUnregister,
        MsgType::kList,     MsgType::kListOk,     MsgType::kStats,
        MsgType::kInvoke,   MsgType::kInvokeOk,   MsgType::kInvokeErr,
        MsgType::kErr};
    Envelope e;
    e.msg_type = kTypes[rng_() % (sizeof(kTypes) / sizeof(kTypes[0]))];
    e.request_id = rng_();
    e.body = random_object(2);
    return e;
  }

  Json random_value(int depth) {
    switch (rng_() % (depth > 0 ? 7 : 5)) {
      case 0: return Json(static_cast<int64_t>(rng_()));
      case 1: return Json(rng_() % 2 == 0);
      case 2: return Json(random_string());
      case 3: return Json();  // null
      case 4: {
        std::uniform_real_distribution<double> dist(-1e9, 1e9);
        return Json(dist(rng_));
      }
      case 5: return random_object(depth - 1);
      default: {
        Json arr = Json::array();
        size_t n = rng_() % 4;
        for (size_t i = 0; i < n; ++i) arr.push_back(random_value(depth - 1));
        return arr;
      }
    }
  }

  Json random_object(int depth) {
    Json obj = Json::object();
    size_t n = rng_() % 5;
    for (size_t i = 0; i < n; ++i) {
      obj[random_string()] = random_value(depth);
    }
    return obj;
  }

  std::string random_string() {
    static const char kAlphabet[] =
        "abcdefghijklmnopqrstuvwxyz0123456789/_-. \"\\{}";
    size_t n = 1 + rng_() % 12;
    std::string s;
    for (size_t i = 0; i < n; ++i) {
      s += kAlphabet[rng_() % (sizeof(kAlphabet) - 1)];
    }
    if (rng_() % 8 == 0) s += "\xc3\xa9\xe6\x97\xa5";  // UTF-8 multibyte
    return s;
  }

  std::mt19937_64& rng() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

// ByteReader that records how many bytes were handed out. Used to prove the
// decoder rejects oversized frames from the prefix alone.
class CountingReader final : public ByteReader {
 public:
  explicit CountingReader(std::vector<uint8_t> bytes)
      : inner_(std::move(bytes)) {}

  size_t read_some(uint8_t* dst, size_t max) override {
    size_t n = inner_.read_some(dst, max);
    handed_out_ += n;
    return n;
  }

  size_t handed_out() const { return handed_out_; }

 private:
  BufferReader inner_;
  size_t handed_out_ = 0;
};

}  // namespace vstubmw::testing
