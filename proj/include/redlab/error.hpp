#pragma once

#include <stdexcept>
#include <string>

namespace redlab {

/// Bad input: wrong shape, out-of-range parameter, malformed file.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A computation could not produce a meaningful number (singular system,
/// failed bracketing, ...).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline void require(bool cond, const std::string& what) {
  if (!cond) throw ValidationError(what);
}

}  // namespace detail
}  // namespace redlab
