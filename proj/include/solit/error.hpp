#pragma once

#include <stdexcept>
#include <string>

namespace solit {

// Raised when an operation receives an argument outside its domain
// (non-positive alpha, sigma <= 0, mismatched lengths, ...).
class InvalidParameter : public std::invalid_argument {
 public:
  explicit InvalidParameter(const std::string& what) : std::invalid_argument(what) {}
};

// Raised when a configuration cannot be realized (grid cap exceeded,
// unknown names, inconsistent experiment settings).
class ConfigurationError : public std::runtime_error {
 public:
  explicit ConfigurationError(const std::string& what) : std::runtime_error(what) {}
};

// File system failures, always carrying the offending path.
class IoError : public std::runtime_error {
 public:
  IoError(const std::string& path, const std::string& what)
      : std::runtime_error(path + ": " + what), path_(path) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

}  // namespace solit
