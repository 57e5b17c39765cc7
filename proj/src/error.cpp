#include "anchorframe/error.hpp"

namespace anchorframe {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidGeometry: return "invalid-geometry";
    case ErrorCode::kDegenerateBox: return "degenerate-box";
    case ErrorCode::kParse: return "parse";
    case ErrorCode::kConfig: return "config";
    case ErrorCode::kSize: return "size";
    case ErrorCode::kShape: return "shape";
    case ErrorCode::kUnparseablePrompt: return "unparseable-prompt";
    case ErrorCode::kServiceUnavailable: return "service-unavailable";
    case ErrorCode::kProtocol: return "protocol";
    case ErrorCode::kNoTargetFound: return "no-target-found";
    case ErrorCode::kSpec: return "spec";
    case ErrorCode::kInput: return "input";
    case ErrorCode::kIo: return "io";
  }
  return "unknown";
}

}  // namespace anchorframe
