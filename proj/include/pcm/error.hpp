#ifndef PCM_ERROR_HPP_
#define PCM_ERROR_HPP_

#include <stdexcept>
#include <string>
#include <string_view>

namespace pcm {

// Error categories. The CLI prints the category name as a stable,
// machine-parseable code and maps it to a process exit status.
enum class ErrorCode {
  kShape,
  kNumeric,
  kUsage,
  kParse,
  kDegenerateGrid,
  kIo,
  kValidation,
  kChecksum,
};

std::string_view error_code_name(ErrorCode code);
int exit_status(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& message)
      : Error(ErrorCode::kShape, message) {}
};

// Raised when an activation or loss becomes NaN/Inf. `where` names the
// layer, epoch or batch at which it was first observed.
class NumericError : public Error {
 public:
  explicit NumericError(const std::string& message)
      : Error(ErrorCode::kNumeric, message) {}
};

class UsageError : public Error {
 public:
  explicit UsageError(const std::string& message)
      : Error(ErrorCode::kUsage, message) {}
};

class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::size_t line = 0)
      : Error(ErrorCode::kParse,
              line == 0 ? message
                        : "line " + std::to_string(line) + ": " + message),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class DegenerateGridError : public Error {
 public:
  explicit DegenerateGridError(const std::string& message)
      : Error(ErrorCode::kDegenerateGrid, message) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& message)
      : Error(ErrorCode::kIo, message) {}
};

class ValidationError : public Error {
 public:
  ValidationError(std::string field, const std::string& message)
      : Error(ErrorCode::kValidation, field + ": " + message),
        field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

}  // namespace pcm

#endif  // PCM_ERROR_HPP_
