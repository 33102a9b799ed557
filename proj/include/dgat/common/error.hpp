// SPDX-FileCopyrightText: Copyright (c) 2026 the dgat authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dgat {

class Error : public std::runtime_error {
public:
  explicit Error(const std::string &msg) : std::runtime_error(msg) {}
};

// Malformed input text. Carries the byte offset of the offending token.
class ParseError : public Error {
public:
  ParseError(const std::string &msg, std::size_t offset)
      : Error(msg + " (at byte " + std::to_string(offset) + ")"),
        offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

private:
  std::size_t offset_;
};

class ShapeError : public Error {
public:
  using Error::Error;
};

// Non-finite value produced by a numeric kernel, or training divergence.
class NumericError : public Error {
public:
  using Error::Error;
};

class ConfigError : public Error {
public:
  using Error::Error;
};

// Checkpoint/dataset incompatibility (e.g. feature scheme hash mismatch).
class CompatError : public Error {
public:
  using Error::Error;
};

class DataError : public Error {
public:
  using Error::Error;
};

} // namespace dgat
