#pragma once

#include <stdexcept>
#include <string>

namespace consensus_dx {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad input data or a violated precondition. The CLI maps this to exit status 2.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Malformed line in a line-delimited file.
class ParseError : public ValidationError {
 public:
  ParseError(const std::string& path, std::size_t line, const std::string& what)
      : ValidationError(path + ":" + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Failure talking to (or emulating) a model endpoint.
class UpstreamError : public Error {
 public:
  using Error::Error;
};

/// Retryable upstream failure (HTTP 429/5xx, connection reset).
class TransientError : public UpstreamError {
 public:
  using UpstreamError::UpstreamError;
};

class AuthError : public UpstreamError {
 public:
  using UpstreamError::UpstreamError;
};

class ReplayMissError : public UpstreamError {
 public:
  explicit ReplayMissError(const std::string& digest)
      : UpstreamError("replay miss: no recorded response for digest " + digest), digest_(digest) {}

  const std::string& digest() const noexcept { return digest_; }

 private:
  std::string digest_;
};

}  // namespace consensus_dx
