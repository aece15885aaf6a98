#pragma once

#include <cstdint>
#include <vector>

namespace hikonv {

// Smallest and largest representable value at a bitwidth.  Bitwidths 1..8
// follow the quantized-element rules (unsigned [0, 2^w - 1], signed
// [-2^(w-1), 2^(w-1) - 1]); bitwidth 32 is the full-precision carrier used
// for convolution outputs.
std::int64_t min_value(int bitwidth, bool is_signed);
std::int64_t max_value(int bitwidth, bool is_signed);

// A quantized integer sequence.  Invariants (enforced by validate_seq):
//   - bitwidth in [1, 8]
//   - every value within the bitwidth range
//   - bitwidth 1 is never signed: binary data uses unsigned {0, 1}
struct QuantSeq {
  std::vector<std::int64_t> values;
  int bitwidth = 8;
  bool is_signed = false;
};

void validate_seq(const QuantSeq& seq);

// Dense row-major (channels, height, width) tensor of quantized values, or of
// full-precision 32-bit values when bitwidth == 32.
struct Tensor3 {
  std::vector<std::int64_t> data;  // index: (c * height + h) * width + w
  int channels = 0;
  int height = 0;
  int width = 0;
  int bitwidth = 8;
  bool is_signed = false;

  std::int64_t at(int c, int h, int w) const {
    return data[(static_cast<std::size_t>(c) * height + h) * width + w];
  }
  std::int64_t& at(int c, int h, int w) {
    return data[(static_cast<std::size_t>(c) * height + h) * width + w];
  }
};

// Dense row-major (out_channels, in_channels, K, K) weight tensor with square
// kernels.
struct Tensor4 {
  std::vector<std::int64_t> data;  // index: ((co * in_ch + ci) * K + kh) * K + kw
  int out_channels = 0;
  int in_channels = 0;
  int ksize = 0;
  int bitwidth = 8;
  bool is_signed = false;

  std::int64_t at(int co, int ci, int kh, int kw) const {
    return data[((static_cast<std::size_t>(co) * in_channels + ci) * ksize +
                 kh) *
                    ksize +
                kw];
  }
  std::int64_t& at(int co, int ci, int kh, int kw) {
    return data[((static_cast<std::size_t>(co) * in_channels + ci) * ksize +
                 kh) *
                    ksize +
                kw];
  }
};

void validate_tensor(const Tensor3& t);
void validate_tensor(const Tensor4& t);

}  // namespace hikonv
