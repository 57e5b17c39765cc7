#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace anchorframe {

enum class ErrorCode {
  kInvalidGeometry,
  kDegenerateBox,
  kParse,
  kConfig,
  kSize,
  kShape,
  kUnparseablePrompt,
  kServiceUnavailable,
  kProtocol,
  kNoTargetFound,
  kSpec,
  kInput,
  kIo,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries one of the codes above so
/// callers (the CLI in particular) can map it to a stable exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace anchorframe
