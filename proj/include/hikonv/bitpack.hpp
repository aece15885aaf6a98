#pragma once

#include <cstdint>
#include <vector>

#include "hikonv/config.hpp"
#include "hikonv/qtypes.hpp"

namespace hikonv {

using uint128 = unsigned __int128;
using int128 = __int128;

// Which operand of the wide multiplier a sequence is packed into.  Side A
// carries up to cfg.n elements of width cfg.p; side B up to cfg.k of cfg.q.
enum class Side { kA, kB };

// One packed multiplier operand.  For unsigned configs `word` equals
// sum_i seq[i] * 2^(s*i); for signed configs it is the two's-complement bit
// pattern of that (possibly negative) sum, so every bit at or above
// p + (lane_count - 1) * s is a pure sign/zero extension of the top slice.
struct PackedOperand {
  std::uint64_t word = 0;
  int lane_count = 0;
  Side side = Side::kA;
  HiKonvConfig cfg;
};

// The exact product of two packed operands, held in 128-bit arithmetic.
struct ProductWord {
  uint128 word = 0;
  HiKonvConfig cfg;
};

// Packs an unsigned sequence:  word = sum_i seq[i] * 2^(s*i).  Sequences
// shorter than the lane budget occupy the low lanes; missing high lanes are
// zero.  Throws LaneOverflow when seq has more elements than the side's
// budget, RangeError when a value leaves its bitwidth range or the sequence
// is signed.
PackedOperand pack_unsigned(const QuantSeq& seq, const HiKonvConfig& cfg,
                            Side side);

// Packs a signed sequence as the wide two's-complement sum
// sum_i seq[i] * 2^(s*i).  Equivalent to the slice-wise construction
// (pack_signed_slicewise); both produce bit-identical words.
PackedOperand pack_signed(const QuantSeq& seq, const HiKonvConfig& cfg,
                          Side side);

// The hardware-style construction of the signed packing: slice 0 holds
// seq[0]; slice i holds seq[i] minus the sign bit of the lower packed part
// (bit s*i - 1), each as an s-bit two's-complement field.
PackedOperand pack_signed_slicewise(const QuantSeq& seq,
                                    const HiKonvConfig& cfg, Side side);

// Dispatches on cfg.is_signed.
PackedOperand pack(const QuantSeq& seq, const HiKonvConfig& cfg, Side side);

// Exact product a.word * b.word (signed or unsigned per the configs, which
// must agree on signedness).
ProductWord multiply(const PackedOperand& a, const PackedOperand& b);

// Extracts segment m as the unsigned value of product bits
// [s*(m+1)-1 : s*m] for m in [0, segment_count).  segment_count must not
// exceed n + k - 1.
std::vector<std::int64_t> split_unsigned(const ProductWord& prod,
                                         const HiKonvConfig& cfg,
                                         int segment_count);

// Signed extraction: segment 0 is the signed interpretation of bits
// [s-1 : 0]; segment m > 0 is the signed interpretation of bits
// [s*(m+1)-1 : s*m] plus bit [s*m - 1] (the carry of the discarded lower
// part).  The top segment of the product sign-extends from the product
// word's own sign.
std::vector<std::int64_t> split_signed(const ProductWord& prod,
                                       const HiKonvConfig& cfg,
                                       int segment_count);

// Dispatches on cfg.is_signed.
std::vector<std::int64_t> split(const ProductWord& prod,
                                const HiKonvConfig& cfg, int segment_count);

// Packs seq.bitwidth-bit fields LSB-first within each byte, contiguously
// across byte boundaries; the final byte is zero-padded in its high bits.
// Signed values are stored as bitwidth-wide two's complement.  Output length
// is exactly ceil(count * bitwidth / 8) bytes.
std::vector<std::uint8_t> compress_bits(const QuantSeq& seq);

// Inverse of compress_bits.  Throws TruncatedStream when the stream is
// shorter than ceil(count * bitwidth / 8) bytes.
QuantSeq decompress_bits(const std::vector<std::uint8_t>& stream, int bitwidth,
                         std::size_t count, bool is_signed);

}  // namespace hikonv
