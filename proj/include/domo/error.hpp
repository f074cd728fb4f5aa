#pragma once

#include <stdexcept>
#include <string>

namespace domo {

/// Base of every error raised by the emulator libraries.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed textual or binary input (bad ROM text, bad config field).
class FormatError : public Error {
 public:
  using Error::Error;
};

/// A value outside its domain, e.g. a temperature beyond [-55, +125] C.
class RangeError : public Error {
 public:
  using Error::Error;
};

/// CRC8 check failed. Kept distinct so callers can retry on it.
class CrcError : public Error {
 public:
  using Error::Error;
};

/// Reset produced no presence pulse.
class PresenceError : public Error {
 public:
  using Error::Error;
};

class TopologyError : public Error {
 public:
  using Error::Error;
};

/// Serial link misbehaved: short response, unexpected reply byte.
class LinkError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace domo
