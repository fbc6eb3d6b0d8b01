#pragma once

#include <stdexcept>
#include <string>

namespace glue {

/// Malformed or inconsistent input: unknown ids, mismatched chains, bad files.
class InputError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// A parameter outside the domain where a map is defined.
class RangeError : public std::out_of_range {
public:
  using std::out_of_range::out_of_range;
};

/// A numerical construction gave up, e.g. the collar width fell below its floor.
class NumericalAbort : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// The requested configuration is valid but not handled by this library.
class Unsupported : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

} // namespace glue
