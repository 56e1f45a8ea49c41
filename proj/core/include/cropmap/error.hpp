#pragma once

#include <stdexcept>
#include <string>

namespace cropmap {

/// A file or directory the caller named does not exist or cannot be opened.
class MissingInputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An input exists but violates its on-disk format.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Rejected arguments and precondition violations use std::invalid_argument;
// geometry checks use std::invalid_argument as well.

}  // namespace cropmap
