#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace littriage {

/// Failure classes surfaced by the library. Each maps to a distinct process
/// exit code in the command-line tool.
enum class ErrorKind {
  usage,     // bad flags, bad config values, violated preconditions
  network,   // transport failures; retryable
  protocol,  // a remote service answered with something we cannot use
  data,      // malformed input files or inconsistent records
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class UsageError : public Error {
 public:
  explicit UsageError(const std::string& message) : Error(ErrorKind::usage, message) {}
};

class NetworkError : public Error {
 public:
  explicit NetworkError(const std::string& message) : Error(ErrorKind::network, message) {}
};

class ProtocolError : public Error {
 public:
  explicit ProtocolError(const std::string& message) : Error(ErrorKind::protocol, message) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& message) : Error(ErrorKind::data, message) {}
};

/// Raised by ScorerGateway::score_batch; wraps the first failing element.
class BatchError : public Error {
 public:
  BatchError(ErrorKind kind, std::size_t index, const std::string& message)
      : Error(kind, "batch element " + std::to_string(index) + ": " + message), index_(index) {}

  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

int exit_code(ErrorKind kind) noexcept;

namespace exit_codes {
inline constexpr int ok = 0;
inline constexpr int usage = 2;
inline constexpr int network = 3;
inline constexpr int protocol = 4;
inline constexpr int data = 5;
inline constexpr int internal = 70;
}  // namespace exit_codes

}  // namespace littriage
