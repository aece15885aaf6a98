#pragma once

#include <cstdint>
#include <vector>

#include "hikonv/qtypes.hpp"

namespace hikonv {

// Multiply/add counts of the schoolbook 1-D convolution: L * K_len
// multiplications and (L - 1) * (K_len - 1) additions.
struct NaiveOpCount {
  std::int64_t mults = 0;
  std::int64_t adds = 0;
};

// Full (non-valid) 1-D convolution, computed term by term in 64-bit
// arithmetic:  y[m] = sum_{i + j == m} f[i] * g[j],  |y| = |f| + |g| - 1.
// Accumulator overflow is detected and reported, never silently wrapped.
std::vector<std::int64_t> naive_conv1d(const QuantSeq& f, const QuantSeq& g);

// Direct six-loop 2-D cross-correlation layer ("valid" padding, stride 1):
//   out[co][h][w] = sum_{ci, kh, kw} input[ci][h + kh][w + kw]
//                                    * weights[co][ci][kh][kw]
// Output dims are (C_o, H_i - K + 1, W_i - K + 1), bitwidth 32.
Tensor3 naive_conv2d(const Tensor3& input, const Tensor4& weights);

// Operation count of the schoolbook 1-D convolution.
NaiveOpCount count_naive_ops(std::int64_t len, std::int64_t k_len);

}  // namespace hikonv
