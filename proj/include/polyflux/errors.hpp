#pragma once

#include <stdexcept>
#include <string>

namespace polyflux {

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Slopes of a piecewise-linear function are not strictly increasing.
class ConvexityError : public Error {
 public:
  using Error::Error;
};

// Repeated or unsorted break points / jump points.
class DegenerateSegmentError : public Error {
 public:
  using Error::Error;
};

// An argument lies outside the domain of an operation (t <= 0, s >= t, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Corner blends of a mollified flux would overlap.
class OverlapError : public Error {
 public:
  using Error::Error;
};

// The Hopf-Lax functional is unbounded below on the search window.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

// Invalid run configuration. `key()` names the offending entry.
class ConfigError : public Error {
 public:
  ConfigError(std::string key, const std::string& what)
      : Error(key.empty() ? what : key + ": " + what), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

}  // namespace polyflux
