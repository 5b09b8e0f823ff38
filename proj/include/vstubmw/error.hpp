#pragma once

#include <stdexcept>
#include <string>

namespace vstubmw {

enum class ErrorCode {
  // wire
  kOversizedFrame,
  kTruncatedFrame,
  kMalformedPayload,
  // registry
  kInvalidKey,
  kServiceNotFound,
  kRegistryUnavailable,
  // invocation
  kTransportFailure,
  kStaleEpoch,
  kNoSuchMethod,
  kBadArgs,
  kInternal,
  // stub
  kUnresolvableBinding,
  kKeyMismatch,
  // reconfig
  kNotBound,
  kDuplicatePolicyId,
  kParseError,
  // harness / runtime
  kPortInUse,
  kSetupFailure,
  kTrialError,
  kInsufficientSamples,
  kIoFailure,
  kInvalidArgument,
};

const char* error_code_name(ErrorCode code);

// kTransportFailure and kStaleEpoch are the two faces of an invalid binding:
// the proxy no longer reaches a live, current incarnation of the service.
inline bool is_invalid_binding(ErrorCode code) {
  return code == ErrorCode::kTransportFailure || code == ErrorCode::kStaleEpoch;
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void raise(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace vstubmw
