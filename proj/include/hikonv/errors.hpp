#pragma once

#include <stdexcept>
#include <string>

namespace hikonv {

// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// No (n, k) packing satisfies the operand-width constraints, or a kernel was
// invoked with a configuration it cannot execute exactly.
class InfeasibleGeometry : public Error {
 public:
  using Error::Error;
};

// More elements supplied than the lane budget of the operand side.
class LaneOverflow : public Error {
 public:
  using Error::Error;
};

// A value (or parameter) is outside its declared range.
class RangeError : public Error {
 public:
  using Error::Error;
};

// A byte stream ended before the declared payload was complete.
class TruncatedStream : public Error {
 public:
  using Error::Error;
};

// A serialized tensor does not start with the expected magic bytes.
class BadMagic : public Error {
 public:
  using Error::Error;
};

// A serialized tensor declares an unsupported format version.
class BadVersion : public Error {
 public:
  using Error::Error;
};

// Tensor dimensions are inconsistent with the requested operation.
class ShapeMismatch : public Error {
 public:
  using Error::Error;
};

// A file could not be opened, read, or written.
class IoError : public Error {
 public:
  using Error::Error;
};

// The packed fast path and the reference path disagreed on an output that
// must match exactly.
class EquivalenceFailure : public Error {
 public:
  using Error::Error;
};

}  // namespace hikonv
