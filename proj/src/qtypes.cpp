#include "hikonv/qtypes.hpp"

#include <sstream>

#include "hikonv/errors.hpp"

namespace hikonv {

namespace {

void check_bitwidth(int bitwidth, bool is_signed) {
  if (bitwidth == 32) return;
  if (bitwidth < 1 || bitwidth > 8) {
    throw RangeError("bitwidth must be in [1, 8] or 32");
  }
  if (bitwidth == 1 && is_signed) {
    throw RangeError(
        "bitwidth 1 cannot be signed; binary data uses unsigned {0, 1}");
  }
}

void check_values(const std::vector<std::int64_t>& values, int bitwidth,
                  bool is_signed) {
  const std::int64_t lo = min_value(bitwidth, is_signed);
  const std::int64_t hi = max_value(bitwidth, is_signed);
  for (std::int64_t v : values) {
    if (v < lo || v > hi) {
      std::ostringstream msg;
      msg << "value " << v << " outside " << (is_signed ? "signed" : "unsigned")
          << " " << bitwidth << "-bit range [" << lo << ", " << hi << "]";
      throw RangeError(msg.str());
    }
  }
}

}  // namespace

std::int64_t min_value(int bitwidth, bool is_signed) {
  check_bitwidth(bitwidth, is_signed);
  if (!is_signed) return 0;
  return -(std::int64_t{1} << (bitwidth - 1));
}

std::int64_t max_value(int bitwidth, bool is_signed) {
  check_bitwidth(bitwidth, is_signed);
  if (bitwidth == 32) {
    // The full-precision carrier is int32-backed regardless of the flag.
    return (std::int64_t{1} << 31) - 1;
  }
  if (is_signed) return (std::int64_t{1} << (bitwidth - 1)) - 1;
  return (std::int64_t{1} << bitwidth) - 1;
}

void validate_seq(const QuantSeq& seq) {
  if (seq.bitwidth < 1 || seq.bitwidth > 8) {
    throw RangeError("sequence bitwidth must be in [1, 8]");
  }
  check_bitwidth(seq.bitwidth, seq.is_signed);
  check_values(seq.values, seq.bitwidth, seq.is_signed);
}

void validate_tensor(const Tensor3& t) {
  if (t.channels < 1 || t.height < 1 || t.width < 1) {
    throw ShapeMismatch("tensor dimensions must be positive");
  }
  const std::size_t expected = static_cast<std::size_t>(t.channels) *
                               static_cast<std::size_t>(t.height) *
                               static_cast<std::size_t>(t.width);
  if (t.data.size() != expected) {
    throw ShapeMismatch("tensor data size does not match its dimensions");
  }
  check_bitwidth(t.bitwidth, t.is_signed);
  check_values(t.data, t.bitwidth, t.is_signed);
}

void validate_tensor(const Tensor4& t) {
  if (t.out_channels < 1 || t.in_channels < 1 || t.ksize < 1) {
    throw ShapeMismatch("weight dimensions must be positive");
  }
  const std::size_t expected = static_cast<std::size_t>(t.out_channels) *
                               static_cast<std::size_t>(t.in_channels) *
                               static_cast<std::size_t>(t.ksize) *
                               static_cast<std::size_t>(t.ksize);
  if (t.data.size() != expected) {
    throw ShapeMismatch("weight data size does not match its dimensions");
  }
  check_bitwidth(t.bitwidth, t.is_signed);
  check_values(t.data, t.bitwidth, t.is_signed);
}

}  // namespace hikonv
