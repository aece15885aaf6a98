#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "hikonv/qtypes.hpp"

namespace hikonv {

// On-disk quantized tensor.  Layout (little-endian):
//   magic   "QTSR"           4 bytes
//   version 0x01             1 byte
//   bitwidth 1..8 or 32      1 byte
//   signed  0 or 1           1 byte
//   ndim    1..4             1 byte
//   dims    ndim * uint32    4 * ndim bytes
//   payload                  bit-packed fields (bitwidth 1..8, see
//                            compress_bits) or int32 words (bitwidth 32)
struct QTensor {
  std::vector<std::uint32_t> dims;
  std::vector<std::int64_t> values;  // row-major
  int bitwidth = 8;
  bool is_signed = false;
};

// Serializes and returns the number of bytes written.
std::size_t write_qtensor(std::ostream& out, const QTensor& tensor);
std::size_t write_qtensor(const std::string& path, const QTensor& tensor);

// Deserializes; throws BadMagic, BadVersion, TruncatedStream, or RangeError
// on malformed input, IoError when the file cannot be opened.
QTensor read_qtensor(std::istream& in);
QTensor read_qtensor(const std::string& path);

// Conversions between the serialized carrier and the in-memory shapes.
QTensor to_qtensor(const QuantSeq& seq);
QTensor to_qtensor(const Tensor3& tensor);
QTensor to_qtensor(const Tensor4& tensor);
QuantSeq to_seq(const QTensor& tensor);      // requires ndim == 1
Tensor3 to_tensor3(const QTensor& tensor);   // requires ndim == 3
Tensor4 to_tensor4(const QTensor& tensor);   // requires ndim == 4, square kernel

}  // namespace hikonv
