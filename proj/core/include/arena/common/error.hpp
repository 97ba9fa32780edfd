#pragma once

#include <stdexcept>
#include <string>

namespace arena {

/// Root of every exception thrown by the arena libraries.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a byte stream (wire message, batch frame, checkpoint) cannot be decoded.
class DecodeError : public Error {
 public:
  using Error::Error;
};

}  // namespace arena
