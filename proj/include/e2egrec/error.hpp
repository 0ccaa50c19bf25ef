// SPDX-FileCopyrightText: Copyright (c) 2026 The e2egrec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace e2eg {

/// Failure categories. The numeric values double as CLI exit codes.
enum class ErrorCode : int {
  kInvalidArgument = 1,
  kConfig = 2,
  kIo = 3,
  kCheckFailed = 4,
  kUndefinedAuc = 5,
  kNumeric = 6,
  kShape = 7,
  kParse = 8,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& what) : Error(ErrorCode::kShape, what) {}
};

/// Malformed binary or text input. `offset` is a byte offset for binary
/// files and a 1-based line number for text files.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : Error(ErrorCode::kParse, what + " (at " + std::to_string(offset) + ")"), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, const std::string& what) {
  if (!cond) throw Error(ErrorCode::kInvalidArgument, what);
}

}  // namespace e2eg
