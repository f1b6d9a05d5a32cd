#include "pcm/error.hpp"

namespace pcm {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kShape: return "SHAPE";
    case ErrorCode::kNumeric: return "NUMERIC";
    case ErrorCode::kUsage: return "USAGE";
    case ErrorCode::kParse: return "PARSE";
    case ErrorCode::kDegenerateGrid: return "DEGENERATE_GRID";
    case ErrorCode::kIo: return "IO";
    case ErrorCode::kValidation: return "VALIDATION";
    case ErrorCode::kChecksum: return "CHECKSUM";
  }
  return "UNKNOWN";
}

int exit_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::kUsage: return 2;
    case ErrorCode::kValidation: return 3;
    case ErrorCode::kParse: return 4;
    case ErrorCode::kIo: return 5;
    case ErrorCode::kShape: return 6;
    case ErrorCode::kNumeric: return 7;
    case ErrorCode::kDegenerateGrid: return 8;
    case ErrorCode::kChecksum: return 9;
  }
  return 1;
}

}  // namespace pcm
