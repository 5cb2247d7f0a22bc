#pragma once

#include <stdexcept>
#include <string>

namespace cityadapt {

// Error taxonomy shared by all modules. The CLI maps these onto process exit
// codes: validation/config -> 1, I/O -> 2, numerical failure -> 3.

class error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad values, ranges, schemas, unknown names, malformed configuration.
class validation_error : public error {
 public:
  using error::error;
};

// Malformed container bytes (bad magic, truncation, impossible dimensions).
class format_error : public validation_error {
 public:
  using validation_error::validation_error;
};

class io_error : public error {
 public:
  using error::error;
};

// Solver rank failures, fit degeneracies, training divergence.
class numeric_error : public error {
 public:
  using error::error;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) {
    throw validation_error(message);
  }
}

}  // namespace cityadapt
