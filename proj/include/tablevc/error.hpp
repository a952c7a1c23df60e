#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tablevc {

enum class ErrorCode {
  UnsortedInput,
  EmptyInput,
  IoFailure,
  NotFound,
  CorruptObject,
  DuplicateName,
  InvalidSchema,
  UnknownTable,
  DuplicateSnapshotName,
  UnknownSnapshot,
  OutOfRetention,
  SchemaMismatch,
  WriteConflict,
  PkViolation,
  MissingObject,
  BaseMismatch,
  MergeConflictFailure,
  NegativeCount,
  UsageError,
  InvalidArgument,
  Internal,
};

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) { throw Error(code, message); }

}  // namespace tablevc
