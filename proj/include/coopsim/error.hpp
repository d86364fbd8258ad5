#pragma once

#include <stdexcept>
#include <string>

namespace coopsim {

enum class ErrorCode {
  kInvalidArgument = 1,
  kIo = 2,
  kParse = 3,
  kCodec = 4,
  kNotFinished = 5,
  kInternal = 6,
};

// Base exception for everything thrown by the library. The C API maps the
// code onto coopsim_status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

class InvalidArgument : public Error {
 public:
  explicit InvalidArgument(const std::string& what) : Error(ErrorCode::kInvalidArgument, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorCode::kIo, what) {}
};

class ParseError : public Error {
 public:
  explicit ParseError(const std::string& what) : Error(ErrorCode::kParse, what) {}
};

class CodecError : public Error {
 public:
  explicit CodecError(const std::string& what, std::size_t position = 0)
      : Error(ErrorCode::kCodec, what), position_(position) {}
  // Byte offset in the input where decoding failed.
  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

}  // namespace coopsim
