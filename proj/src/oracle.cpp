#include "hikonv/oracle.hpp"

#include <cmath>
#include <cstdlib>

#include "hikonv/errors.hpp"

namespace hikonv {

namespace {

// The reference path must be trustworthy: every accumulation is checked so a
// hypothetical overflow surfaces as an error instead of a wrong ground truth.
constexpr std::int64_t kAccLimit = std::int64_t{1} << 62;

std::int64_t checked_add(std::int64_t acc, std::int64_t term) {
  acc += term;
  if (acc > kAccLimit || acc < -kAccLimit) {
    throw RangeError("reference accumulator overflow");
  }
  return acc;
}

}  // namespace

std::vector<std::int64_t> naive_conv1d(const QuantSeq& f, const QuantSeq& g) {
  validate_seq(f);
  validate_seq(g);
  if (f.values.empty() || g.values.empty()) {
    throw RangeError("convolution inputs must be nonempty");
  }
  const std::size_t len = f.values.size() + g.values.size() - 1;
  std::vector<std::int64_t> out(len, 0);
  for (std::size_t i = 0; i < f.values.size(); ++i) {
    for (std::size_t j = 0; j < g.values.size(); ++j) {
      out[i + j] = checked_add(out[i + j], f.values[i] * g.values[j]);
    }
  }
  return out;
}

Tensor3 naive_conv2d(const Tensor3& input, const Tensor4& weights) {
  validate_tensor(input);
  validate_tensor(weights);
  if (weights.in_channels != input.channels) {
    throw ShapeMismatch("weight in_channels must match input channels");
  }
  if (weights.ksize > input.height || weights.ksize > input.width) {
    throw ShapeMismatch("kernel larger than input plane");
  }
  const int k = weights.ksize;
  const int h_out = input.height - k + 1;
  const int w_out = input.width - k + 1;
  Tensor3 out;
  out.channels = weights.out_channels;
  out.height = h_out;
  out.width = w_out;
  out.bitwidth = 32;
  out.is_signed = true;
  out.data.assign(static_cast<std::size_t>(out.channels) * h_out * w_out, 0);
  for (int co = 0; co < weights.out_channels; ++co) {
    for (int h = 0; h < h_out; ++h) {
      for (int w = 0; w < w_out; ++w) {
        std::int64_t acc = 0;
        for (int ci = 0; ci < input.channels; ++ci) {
          for (int kh = 0; kh < k; ++kh) {
            for (int kw = 0; kw < k; ++kw) {
              acc = checked_add(
                  acc, input.at(ci, h + kh, w + kw) * weights.at(co, ci, kh, kw));
            }
          }
        }
        out.at(co, h, w) = acc;
      }
    }
  }
  validate_tensor(out);  // also rejects results outside the 32-bit carrier
  return out;
}

NaiveOpCount count_naive_ops(std::int64_t len, std::int64_t k_len) {
  if (len < 1 || k_len < 1) {
    throw RangeError("lengths must be >= 1");
  }
  return NaiveOpCount{len * k_len, (len - 1) * (k_len - 1)};
}

}  // namespace hikonv
