#pragma once

#include <stdexcept>

namespace respira {

/// Malformed files, bad arguments or violated preconditions on caller data.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A numerical stage could not produce a result from otherwise valid input
/// (degenerate signal, nothing left to fuse, ...).
class PipelineError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace respira
