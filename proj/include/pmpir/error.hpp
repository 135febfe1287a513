#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pmpir {

// Base of every error raised by the library. Subclasses name the failure
// class so callers (CLI, harness) can map them to exit codes and report text.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class FieldMismatch : public Error {
 public:
  using Error::Error;
};

class ArithmeticError : public Error {
 public:
  using Error::Error;
};

class ShapeMismatch : public Error {
 public:
  using Error::Error;
};

class SingularMatrix : public Error {
 public:
  using Error::Error;
};

class InconsistentSystem : public Error {
 public:
  using Error::Error;
};

class RankDeficient : public Error {
 public:
  using Error::Error;
};

class InvalidParameters : public Error {
 public:
  using Error::Error;
};

class RepairUnavailable : public Error {
 public:
  using Error::Error;
};

class NodeUnavailable : public Error {
 public:
  using Error::Error;
};

class RecoveryFailure : public Error {
 public:
  using Error::Error;
};

class DecodeFailure : public Error {
 public:
  using Error::Error;
};

class NotDecodable : public Error {
 public:
  using Error::Error;
};

class PrivacyGuardExceeded : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : Error(what + " (at byte offset " + std::to_string(offset) + ")"),
        offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

}  // namespace pmpir
