#pragma once

#include <cstdint>
#include <vector>

#include "hikonv/bitpack.hpp"
#include "hikonv/config.hpp"
#include "hikonv/qtypes.hpp"

namespace hikonv {

// Per-invocation instrumentation.  wide_mults counts wide multiplications
// actually issued.  When probe_segments is set, every packed-domain
// accumulator state is fully split and the largest segment magnitude seen is
// recorded, so tests can compare it against the guard-bit bounds.
struct ConvCounters {
  std::uint64_t wide_mults = 0;
  std::int64_t max_segment_abs = 0;
  bool probe_segments = false;
};

// How block results are combined across blocks and channels.
//   kPackedDomain  product words are aligned and added before splitting
//   kUnpacked      every product is split first; integers are added after
// Both produce bit-identical outputs; kUnpacked exists as the second
// algebraic route for verification.
enum class Accumulation { kPackedDomain, kUnpacked };

struct Conv1dOptions {
  Accumulation accumulation = Accumulation::kPackedDomain;
  bool allow_kernel_tiling = true;
  ConvCounters* counters = nullptr;
};

struct Conv2dOptions {
  Accumulation accumulation = Accumulation::kPackedDomain;
  ConvCounters* counters = nullptr;
};

// One block convolution: packs f_block and g into the two operands, issues a
// single wide multiplication, and splits all n + k - 1 segments.
// Requires a feasible cfg with mode kSingleMultiplier, |f_block| <= n,
// |g| <= k.
std::vector<std::int64_t> conv_block(const QuantSeq& f_block,
                                     const QuantSeq& g,
                                     const HiKonvConfig& cfg,
                                     ConvCounters* counters = nullptr);

// Full 1-D convolution (output length |f| + |g| - 1) by overlap-add:
// f is processed in blocks of n (zero-padded at the tail), consecutive block
// products are aligned and combined, and exactly ceil(|f| / n) wide
// multiplications are issued per kernel chunk.  Kernels longer than cfg.k are
// tiled into chunks of cfg.k whose partial results are added at full
// precision (ceil(|g| / k) chunks); with tiling disallowed such kernels throw
// InfeasibleGeometry.  Requires a feasible cfg with mode kConv1D.
std::vector<std::int64_t> conv1d(const QuantSeq& f, const QuantSeq& g,
                                 const HiKonvConfig& cfg,
                                 const Conv1dOptions& opts = {});

// 2-D convolution layer ("valid" padding, stride 1): every (c_o, h, k_h)
// selects a row convolution; input channels are processed in groups of at
// most cfg.mode.channel_group whose product words are summed in the packed
// domain before splitting; all remaining accumulation (across blocks, groups
// and kernel rows) is full precision.  Output dims are
// (C_o, H_i - K + 1, W_i - K + 1) at bitwidth 32.  Requires a feasible cfg
// with mode kDnnLayer.
Tensor3 conv2d_layer(const Tensor3& input, const Tensor4& weights,
                     const HiKonvConfig& cfg, const Conv2dOptions& opts = {});

// Largest channel-group size M <= c_i for which the (n, k) packing that is
// optimal at M = 1 stays feasible once guard bits grow to cover M channels.
int default_channel_group(int bit_a, int bit_b, int p, int q, int c_i,
                          bool is_signed = false);

}  // namespace hikonv
