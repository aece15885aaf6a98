#include "hikonv/bitpack.hpp"

#include <sstream>

#include "hikonv/errors.hpp"

namespace hikonv {

namespace {

int side_bitwidth(const HiKonvConfig& cfg, Side side) {
  return side == Side::kA ? cfg.p : cfg.q;
}

int side_lanes(const HiKonvConfig& cfg, Side side) {
  return side == Side::kA ? cfg.n : cfg.k;
}

void check_pack_inputs(const QuantSeq& seq, const HiKonvConfig& cfg,
                       Side side) {
  validate_seq(seq);
  if (seq.bitwidth != side_bitwidth(cfg, side)) {
    std::ostringstream msg;
    msg << "sequence bitwidth " << seq.bitwidth << " does not match operand "
        << (side == Side::kA ? "A (p=" : "B (q=")
        << side_bitwidth(cfg, side) << ")";
    throw RangeError(msg.str());
  }
  const int lanes = side_lanes(cfg, side);
  if (seq.values.size() > static_cast<std::size_t>(lanes)) {
    std::ostringstream msg;
    msg << "sequence of " << seq.values.size() << " elements exceeds the "
        << lanes << "-lane budget of operand "
        << (side == Side::kA ? "A" : "B");
    throw LaneOverflow(msg.str());
  }
  if (cfg.s < 1) throw RangeError("slice stride must be >= 1");
  // Operands live in 64-bit registers; the top element's field must fit.
  if (!seq.values.empty()) {
    const std::int64_t top_bit =
        static_cast<std::int64_t>(seq.values.size() - 1) * cfg.s +
        seq.bitwidth;
    if (top_bit > 64) {
      throw RangeError("packed operand exceeds the 64-bit register");
    }
  }
}

// Low `bits` bits of v, interpreted as a signed two's-complement field.
std::int64_t sign_extend(std::uint64_t v, int bits) {
  const std::uint64_t mask =
      bits >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << bits) - 1;
  v &= mask;
  if (bits < 64 && (v >> (bits - 1)) & 1) {
    return static_cast<std::int64_t>(v | ~mask);
  }
  return static_cast<std::int64_t>(v);
}

void check_split_inputs(const HiKonvConfig& cfg, int segment_count) {
  if (cfg.s < 1) throw RangeError("slice stride must be >= 1");
  if (cfg.n < 1 || cfg.k < 1) throw RangeError("lane counts must be >= 1");
  if (segment_count < 0 || segment_count > cfg.n + cfg.k - 1) {
    std::ostringstream msg;
    msg << "segment count " << segment_count << " exceeds n + k - 1 = "
        << cfg.n + cfg.k - 1;
    throw RangeError(msg.str());
  }
  // Guard the shift below: the top extracted segment starts at
  // s * (segment_count - 1), which feasible configs keep below 128.
  if (segment_count > 0 &&
      static_cast<std::int64_t>(cfg.s) * (segment_count - 1) >= 128) {
    throw RangeError("segments extend past 128-bit product arithmetic");
  }
}

}  // namespace

PackedOperand pack_unsigned(const QuantSeq& seq, const HiKonvConfig& cfg,
                            Side side) {
  if (seq.is_signed) {
    throw RangeError("pack_unsigned requires an unsigned sequence");
  }
  check_pack_inputs(seq, cfg, side);
  std::uint64_t word = 0;
  for (std::size_t i = 0; i < seq.values.size(); ++i) {
    word |= static_cast<std::uint64_t>(seq.values[i])
            << (static_cast<unsigned>(cfg.s) * i);
  }
  return PackedOperand{word, static_cast<int>(seq.values.size()), side, cfg};
}

namespace {

// The signed packed value must be representable by the 64-bit register; an
// exactly-full operand can overflow it when every element is the most
// negative value, so the sum is formed in 128-bit arithmetic and checked.
std::int64_t checked_signed_sum(const std::vector<std::int64_t>& values,
                                int stride) {
  int128 sum = 0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    sum += static_cast<int128>(values[i])
           << (static_cast<unsigned>(stride) * i);
  }
  if (sum > static_cast<int128>(INT64_MAX) ||
      sum < static_cast<int128>(INT64_MIN)) {
    throw RangeError("signed packed value exceeds the 64-bit register");
  }
  return static_cast<std::int64_t>(sum);
}

}  // namespace

PackedOperand pack_signed(const QuantSeq& seq, const HiKonvConfig& cfg,
                          Side side) {
  if (!seq.is_signed) {
    throw RangeError("pack_signed requires a signed sequence");
  }
  check_pack_inputs(seq, cfg, side);
  const std::int64_t word = checked_signed_sum(seq.values, cfg.s);
  return PackedOperand{static_cast<std::uint64_t>(word),
                       static_cast<int>(seq.values.size()), side, cfg};
}

PackedOperand pack_signed_slicewise(const QuantSeq& seq,
                                    const HiKonvConfig& cfg, Side side) {
  if (!seq.is_signed) {
    throw RangeError("pack_signed requires a signed sequence");
  }
  check_pack_inputs(seq, cfg, side);
  checked_signed_sum(seq.values, cfg.s);  // same register-range contract
  const std::uint64_t slice_mask = (cfg.s >= 64)
                                       ? ~std::uint64_t{0}
                                       : (std::uint64_t{1} << cfg.s) - 1;
  std::uint64_t word = 0;
  for (std::size_t i = 0; i < seq.values.size(); ++i) {
    std::int64_t field = seq.values[i];
    if (i > 0) {
      // Subtract the sign bit of the already-packed lower part.
      const unsigned sign_pos = static_cast<unsigned>(cfg.s) * i - 1;
      field -= static_cast<std::int64_t>((word >> sign_pos) & 1);
    }
    word |= (static_cast<std::uint64_t>(field) & slice_mask)
            << (static_cast<unsigned>(cfg.s) * i);
  }
  // The slices above the top element are the sign extension of the packed
  // value; reproduce them so both constructions agree on the whole register.
  if (!seq.values.empty()) {
    const unsigned top =
        static_cast<unsigned>(cfg.s) * static_cast<unsigned>(seq.values.size());
    if (top < 64 && ((word >> (top - 1)) & 1)) {
      word |= ~((std::uint64_t{1} << top) - 1);
    }
  }
  return PackedOperand{word, static_cast<int>(seq.values.size()), side, cfg};
}

PackedOperand pack(const QuantSeq& seq, const HiKonvConfig& cfg, Side side) {
  return cfg.is_signed ? pack_signed(seq, cfg, side)
                       : pack_unsigned(seq, cfg, side);
}

ProductWord multiply(const PackedOperand& a, const PackedOperand& b) {
  if (a.cfg.is_signed != b.cfg.is_signed) {
    throw RangeError("operands disagree on signedness");
  }
  ProductWord prod;
  prod.cfg = a.cfg;
  if (a.cfg.is_signed) {
    const int128 pa = static_cast<std::int64_t>(a.word);
    const int128 pb = static_cast<std::int64_t>(b.word);
    prod.word = static_cast<uint128>(pa * pb);
  } else {
    prod.word = static_cast<uint128>(a.word) * static_cast<uint128>(b.word);
  }
  return prod;
}

std::vector<std::int64_t> split_unsigned(const ProductWord& prod,
                                         const HiKonvConfig& cfg,
                                         int segment_count) {
  check_split_inputs(cfg, segment_count);
  const uint128 mask = (cfg.s >= 128)
                           ? ~uint128{0}
                           : (uint128{1} << cfg.s) - 1;
  std::vector<std::int64_t> out(static_cast<std::size_t>(segment_count));
  for (int m = 0; m < segment_count; ++m) {
    const uint128 field = (prod.word >> (cfg.s * m)) & mask;
    out[static_cast<std::size_t>(m)] =
        static_cast<std::int64_t>(static_cast<std::uint64_t>(field));
  }
  return out;
}

std::vector<std::int64_t> split_signed(const ProductWord& prod,
                                       const HiKonvConfig& cfg,
                                       int segment_count) {
  check_split_inputs(cfg, segment_count);
  std::vector<std::int64_t> out(static_cast<std::size_t>(segment_count));
  for (int m = 0; m < segment_count; ++m) {
    // Arithmetic shift keeps the top segment sign-extending from the product
    // word's own sign.
    const int128 shifted = static_cast<int128>(prod.word) >> (cfg.s * m);
    std::int64_t seg =
        sign_extend(static_cast<std::uint64_t>(static_cast<uint128>(shifted)),
                    cfg.s);
    if (m > 0) {
      // Carry of the discarded lower part (the incrementer).
      seg += static_cast<std::int64_t>(
          (prod.word >> (cfg.s * m - 1)) & uint128{1});
    }
    out[static_cast<std::size_t>(m)] = seg;
  }
  return out;
}

std::vector<std::int64_t> split(const ProductWord& prod,
                                const HiKonvConfig& cfg, int segment_count) {
  return cfg.is_signed ? split_signed(prod, cfg, segment_count)
                       : split_unsigned(prod, cfg, segment_count);
}

std::vector<std::uint8_t> compress_bits(const QuantSeq& seq) {
  validate_seq(seq);
  const int w = seq.bitwidth;
  const std::size_t total_bits = seq.values.size() * static_cast<std::size_t>(w);
  std::vector<std::uint8_t> out((total_bits + 7) / 8, 0);
  const std::uint64_t field_mask = (std::uint64_t{1} << w) - 1;
  std::size_t bit_pos = 0;
  for (std::int64_t v : seq.values) {
    const std::uint64_t field = static_cast<std::uint64_t>(v) & field_mask;
    for (int b = 0; b < w; ++b, ++bit_pos) {
      if ((field >> b) & 1) {
        out[bit_pos / 8] |= static_cast<std::uint8_t>(1u << (bit_pos % 8));
      }
    }
  }
  return out;
}

QuantSeq decompress_bits(const std::vector<std::uint8_t>& stream, int bitwidth,
                         std::size_t count, bool is_signed) {
  if (bitwidth < 1 || bitwidth > 8) {
    throw RangeError("bitwidth must be in [1, 8]");
  }
  if (bitwidth == 1 && is_signed) {
    throw RangeError(
        "bitwidth 1 cannot be signed; binary data uses unsigned {0, 1}");
  }
  const std::size_t needed_bits = count * static_cast<std::size_t>(bitwidth);
  const std::size_t needed_bytes = (needed_bits + 7) / 8;
  if (stream.size() < needed_bytes) {
    std::ostringstream msg;
    msg << "need " << needed_bytes << " bytes for " << count << " "
        << bitwidth << "-bit elements, got " << stream.size();
    throw TruncatedStream(msg.str());
  }
  QuantSeq seq;
  seq.bitwidth = bitwidth;
  seq.is_signed = is_signed;
  seq.values.reserve(count);
  std::size_t bit_pos = 0;
  for (std::size_t i = 0; i < count; ++i) {
    std::uint64_t field = 0;
    for (int b = 0; b < bitwidth; ++b, ++bit_pos) {
      field |= static_cast<std::uint64_t>((stream[bit_pos / 8] >> (bit_pos % 8)) & 1)
               << b;
    }
    seq.values.push_back(is_signed ? sign_extend(field, bitwidth)
                                   : static_cast<std::int64_t>(field));
  }
  return seq;
}

}  // namespace hikonv
