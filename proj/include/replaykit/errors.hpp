#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace replaykit {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed capture input. Carries the byte offset where parsing stopped.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : Error(what + " (at offset " + std::to_string(offset) + ")"), offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// Well-formed input in a format this toolkit does not read (pcapng, radiotap, ...).
class UnsupportedFormatError : public Error {
 public:
  using Error::Error;
};

/// A precondition on an argument does not hold.
class ParameterError : public Error {
 public:
  using Error::Error;
};

class InsufficientTrainingDataError : public ParameterError {
 public:
  using ParameterError::ParameterError;
};

/// Model / report documents that fail to decode.
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace replaykit
