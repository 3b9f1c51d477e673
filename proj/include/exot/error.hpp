#pragma once

#include <stdexcept>
#include <string>

namespace exot {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or out-of-range input. `path()` is a JSON pointer when the
/// input came from a document, empty otherwise.
class InputError : public Error {
 public:
  explicit InputError(const std::string& message, std::string path = {})
      : Error(message), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

/// An operation's precondition on its arguments does not hold
/// (atomic source for a map, no density, failed curvature hypothesis).
class DomainError : public Error {
 public:
  using Error::Error;
};

class SolverError : public Error {
 public:
  using Error::Error;
};

}  // namespace exot
