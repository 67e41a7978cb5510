#pragma once

#include <stdexcept>
#include <string>

namespace geostress {

// Base for every error raised by the library. Input problems (bad files,
// invalid arguments, too little data) all derive from this; anything else
// escaping the library is an internal fault.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed structure: bad header, wrong column count, invalid rate.
class FormatError : public Error {
 public:
  using Error::Error;
};

// A value that parses but violates a domain bound, or does not parse.
class ValueError : public Error {
 public:
  using Error::Error;
};

// Timestamps or offsets that are duplicated or decreasing.
class OrderError : public Error {
 public:
  using Error::Error;
};

// A dangling identifier or a file that does not exist.
class ReferenceError : public Error {
 public:
  using Error::Error;
};

// Not enough samples/beats/participants to compute the requested quantity.
class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

// The statistic is undefined for this input (zero variance, zero HF power).
class DegenerateError : public Error {
 public:
  using Error::Error;
};

}  // namespace geostress
