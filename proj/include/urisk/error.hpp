#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace urisk {

enum class ErrorKind {
  kConfig,            // invalid configuration or arguments
  kIdentifiability,   // label priors do not identify the mixture
  kDimension,         // feature/weight dimension mismatch
  kData,              // malformed or unusable input data
  kDegenerateData,    // data cannot support a mixture fit (e.g. all equal)
  kNumeric,           // non-finite results, quadrature failure, singular matrices
  kIo,                // files that cannot be read or written
};

std::string_view to_string(ErrorKind kind);

/// Single exception type for the library; the kind drives CLI exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace urisk
