// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace lstc {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised for malformed input files. `line` is 1-based; 0 when not line-oriented.
class ParseError : public Error {
 public:
  ParseError(std::string source, std::size_t line, const std::string& what)
      : Error(source + (line ? ":" + std::to_string(line) : std::string()) + ": " + what),
        source_(std::move(source)),
        line_(line) {}

  const std::string& source() const { return source_; }
  std::size_t line() const { return line_; }

 private:
  std::string source_;
  std::size_t line_;
};

// Missing or inconsistent configuration (unknown strategy, missing bucket, missing flag).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Score vectors that do not line up with a chunk's word spans.
class AlignmentError : public Error {
 public:
  using Error::Error;
};

// Decoder endpoint unreachable or returned garbage.
class TransportError : public Error {
 public:
  using Error::Error;
};

class CodecIntegrityError : public Error {
 public:
  using Error::Error;
};

}  // namespace lstc
