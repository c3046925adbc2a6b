#ifndef MIPLKIT_ERRORS_HPP
#define MIPLKIT_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace miplkit {

enum class ErrorCode {
  kInvalidArgument,  // bad config values, shape mismatches
  kIo,               // file cannot be opened / read / written
  kParse,            // file opened but content malformed
  kNumeric,          // non-finite values, collapsed distributions
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string message)
      : std::runtime_error(std::move(message)), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, std::string message) {
  throw Error(code, std::move(message));
}

}  // namespace miplkit

#endif  // MIPLKIT_ERRORS_HPP
