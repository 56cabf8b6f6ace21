#pragma once

#include <stdexcept>
#include <string>

namespace hsbm {

// File or stream level failure (missing file, unreadable path).
struct io_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Content level failure: malformed records, schema mismatches, infeasible
// or out-of-range configuration values.
struct data_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace hsbm
