#pragma once

#include <stdexcept>
#include <string>

namespace instaug {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Raised when no collision-free pose could be found for an instance.
class PlacementError : public Error {
 public:
  explicit PlacementError(const std::string& what) : Error(what) {}
};

}  // namespace instaug
