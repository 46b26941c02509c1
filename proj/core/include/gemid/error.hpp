#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace gemid {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Caller supplied something unusable: bad arguments, malformed config,
/// files that do not exist. The CLI maps these to exit code 2.
class InputError : public Error {
 public:
  using Error::Error;
};

class NotFoundError : public InputError {
 public:
  using InputError::InputError;
};

class UnsupportedFormatError : public InputError {
 public:
  using InputError::InputError;
};

/// A pcap ended in the middle of a record. `packets_read` is the number of
/// complete packets yielded before the truncation.
class PartialReadError : public InputError {
 public:
  PartialReadError(const std::string& what, std::size_t packets_read)
      : InputError(what), packets_read_(packets_read) {}
  std::size_t packets_read() const noexcept { return packets_read_; }

 private:
  std::size_t packets_read_;
};

class MalformedPacketError : public Error {
 public:
  using Error::Error;
};

/// Stored artifact does not match the schema or version it is used with.
class IncompatibleError : public InputError {
 public:
  using InputError::InputError;
};

/// The same record id appears on the train and test side of a context.
class LeakageError : public Error {
 public:
  using Error::Error;
};

class OutOfOrderError : public Error {
 public:
  using Error::Error;
};

}  // namespace gemid
