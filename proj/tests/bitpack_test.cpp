#include <cstdint>
#include <random>
#include <vector>

#include "doctest.h"
#include "hikonv/bitpack.hpp"
#include "hikonv/config.hpp"
#include "hikonv/errors.hpp"
#include "hikonv/oracle.hpp"
#include "hikonv/qtypes.hpp"

namespace {

using namespace hikonv;

QuantSeq seq_of(std::vector<std::int64_t> values, int bitwidth,
                bool is_signed) {
  QuantSeq s;
  s.values = std::move(values);
  s.bitwidth = bitwidth;
  s.is_signed = is_signed;
  return s;
}

TEST_SUITE("bitpack") {

TEST_CASE("unsigned packing places slices at the stride") {
  // s = 10 at p = q = 4 with two guard bits (three lanes each).
  const HiKonvConfig cfg =
      make_config(32, 32, 4, 4, 3, 3, ConvMode::single_multiplier(), false);
  REQUIRE(cfg.s == 10);
  const PackedOperand a =
      pack_unsigned(seq_of({3, 1, 2}, 4, false), cfg, Side::kA);
  CHECK(a.word == 3u + (1u << 10) + (2u << 20));
  CHECK(a.word == 2098179u);
  CHECK(a.lane_count == 3);

  // Shorter sequences occupy the low lanes.
  const PackedOperand b =
      pack_unsigned(seq_of({5, 9}, 4, false), cfg, Side::kB);
  CHECK(b.word == 5u + (9u << 10));
  CHECK(b.lane_count == 2);
}

TEST_CASE("two packed 4-bit pairs expose every partial product") {
  // Hand-built strides (11 on side A, 22 on side B) keep all four partial
  // products of [7, 11] x [5, 9] in disjoint bit ranges of one product.
  HiKonvConfig ca;
  ca.bit_a = 32;
  ca.bit_b = 32;
  ca.p = 4;
  ca.q = 4;
  ca.n = 2;
  ca.k = 1;
  ca.s = 11;
  ca.g_b = 3;
  const PackedOperand a = pack_unsigned(seq_of({7, 11}, 4, false), ca, Side::kA);
  CHECK(a.word == 22535u);  // 7 + 11 * 2^11

  HiKonvConfig cb = ca;
  cb.n = 1;
  cb.k = 2;
  cb.s = 22;
  const PackedOperand b = pack_unsigned(seq_of({5, 9}, 4, false), cb, Side::kB);
  CHECK(b.word == 5u + (std::uint64_t{9} << 22));

  const uint128 prod = static_cast<uint128>(a.word) * b.word;
  CHECK(static_cast<std::uint64_t>(prod & 0x7FF) == 35);          // 7 * 5
  CHECK(static_cast<std::uint64_t>((prod >> 11) & 0x7FF) == 55);  // 11 * 5
  CHECK(static_cast<std::uint64_t>((prod >> 22) & 0x7FF) == 63);  // 7 * 9
  CHECK(static_cast<std::uint64_t>((prod >> 33) & 0x7FF) == 99);  // 11 * 9
  CHECK(static_cast<std::uint64_t>(prod >> 44) == 0);
}

TEST_CASE("signed packing is the two's-complement weighted sum") {
  const HiKonvConfig cfg =
      make_config(32, 32, 4, 4, 3, 3, ConvMode::single_multiplier(), true);
  REQUIRE(cfg.s == 10);
  const PackedOperand a =
      pack_signed(seq_of({-1, 1}, 4, true), cfg, Side::kA);
  CHECK(a.word == 1023u);  // -1 + 2^10

  // An all-negative sequence keeps the sign extension above the top slice.
  const PackedOperand neg = pack_signed(seq_of({-1}, 4, true), cfg, Side::kA);
  CHECK(neg.word == ~std::uint64_t{0});
}

TEST_CASE("slice-wise signed construction matches the weighted sum") {
  for (int p : {2, 3}) {
    const HiKonvConfig cfg = make_config(
        64, 64, p, p, 3, 3, ConvMode::single_multiplier(), true);
    const std::int64_t lo = min_value(p, true);
    const std::int64_t hi = max_value(p, true);
    for (std::int64_t v0 = lo; v0 <= hi; ++v0) {
      for (std::int64_t v1 = lo; v1 <= hi; ++v1) {
        for (std::int64_t v2 = lo; v2 <= hi; ++v2) {
          const QuantSeq seq = seq_of({v0, v1, v2}, p, true);
          const PackedOperand wide = pack_signed(seq, cfg, Side::kA);
          const PackedOperand slice =
              pack_signed_slicewise(seq, cfg, Side::kA);
          CAPTURE(p);
          CAPTURE(v0);
          CAPTURE(v1);
          CAPTURE(v2);
          REQUIRE(wide.word == slice.word);
        }
      }
    }
  }
}

TEST_CASE("pack dispatches on the configured signedness") {
  const HiKonvConfig u =
      make_config(32, 32, 2, 2, 2, 2, ConvMode::single_multiplier(), false);
  const HiKonvConfig s =
      make_config(32, 32, 2, 2, 2, 2, ConvMode::single_multiplier(), true);
  CHECK(pack(seq_of({1, 2}, 2, false), u, Side::kA).word ==
        pack_unsigned(seq_of({1, 2}, 2, false), u, Side::kA).word);
  CHECK(pack(seq_of({-1, 1}, 2, true), s, Side::kA).word ==
        pack_signed(seq_of({-1, 1}, 2, true), s, Side::kA).word);
}

TEST_CASE("unsigned split recovers the convolution segments") {
  // p = q = 2, one guard bit: s = 5.  [1, 2] (*) [3, 1] -> [3, 7, 2].
  const HiKonvConfig cfg =
      make_config(32, 32, 2, 2, 2, 2, ConvMode::single_multiplier(), false);
  REQUIRE(cfg.s == 5);
  const PackedOperand a = pack(seq_of({1, 2}, 2, false), cfg, Side::kA);
  const PackedOperand b = pack(seq_of({3, 1}, 2, false), cfg, Side::kB);
  CHECK(a.word == 65u);
  CHECK(b.word == 35u);
  const ProductWord prod = multiply(a, b);
  CHECK(static_cast<std::uint64_t>(prod.word) == 65u * 35u);
  CHECK(split(prod, cfg, 3) == std::vector<std::int64_t>{3, 7, 2});
  CHECK(split(prod, cfg, 2) == std::vector<std::int64_t>{3, 7});
  CHECK_THROWS_AS(split(prod, cfg, 4), RangeError);
}

TEST_CASE("signed split applies the carry correction") {
  // [-2, 3] (*) [-1, 2] -> [2, -7, 6], all at p = q = 3 (s = 7).
  const HiKonvConfig cfg =
      make_config(32, 32, 3, 3, 2, 2, ConvMode::single_multiplier(), true);
  REQUIRE(cfg.s == 7);
  const QuantSeq f = seq_of({-2, 3}, 3, true);
  const QuantSeq g = seq_of({-1, 2}, 3, true);
  const ProductWord prod =
      multiply(pack(f, cfg, Side::kA), pack(g, cfg, Side::kB));
  const std::vector<std::int64_t> segments = split(prod, cfg, 3);
  CHECK(segments == std::vector<std::int64_t>{2, -7, 6});
  CHECK(segments == naive_conv1d(f, g));
}

TEST_CASE("operands must agree on signedness") {
  const HiKonvConfig u =
      make_config(32, 32, 2, 2, 2, 2, ConvMode::single_multiplier(), false);
  const HiKonvConfig s =
      make_config(32, 32, 2, 2, 2, 2, ConvMode::single_multiplier(), true);
  const PackedOperand a = pack(seq_of({1, 1}, 2, false), u, Side::kA);
  const PackedOperand b = pack(seq_of({1, 1}, 2, true), s, Side::kB);
  CHECK_THROWS_AS(multiply(a, b), RangeError);
}

TEST_CASE("packing rejects bad sequences") {
  const HiKonvConfig cfg =
      make_config(32, 32, 4, 4, 3, 3, ConvMode::single_multiplier(), false);
  // Too many elements for the lane budget.
  CHECK_THROWS_AS(pack_unsigned(seq_of({1, 2, 3, 4}, 4, false), cfg, Side::kA),
                  LaneOverflow);
  // Side B has only k = 3 lanes as well, but length 4 still overflows.
  CHECK_THROWS_AS(pack_unsigned(seq_of({1, 2, 3, 4}, 4, false), cfg, Side::kB),
                  LaneOverflow);
  // Value outside the bitwidth range.
  CHECK_THROWS_AS(pack_unsigned(seq_of({16}, 4, false), cfg, Side::kA),
                  RangeError);
  // Bitwidth mismatch with the configuration.
  CHECK_THROWS_AS(pack_unsigned(seq_of({1}, 3, false), cfg, Side::kA),
                  RangeError);
  // Signedness mismatch in either direction.
  CHECK_THROWS_AS(pack_unsigned(seq_of({-1}, 4, true), cfg, Side::kA),
                  RangeError);
  const HiKonvConfig scfg =
      make_config(32, 32, 4, 4, 3, 3, ConvMode::single_multiplier(), true);
  CHECK_THROWS_AS(pack_signed(seq_of({1}, 4, false), scfg, Side::kA),
                  RangeError);
}

TEST_CASE("packing rejects words wider than the register") {
  // (n - 1) * s + p = 8 * 16 + 8 = 136 bits cannot live in a 64-bit word.
  const HiKonvConfig cfg =
      make_config(64, 64, 8, 8, 9, 1, ConvMode::single_multiplier(), false);
  const QuantSeq nine = seq_of({1, 1, 1, 1, 1, 1, 1, 1, 1}, 8, false);
  CHECK_THROWS_AS(pack_unsigned(nine, cfg, Side::kA), RangeError);
}

TEST_CASE("signed packing detects 64-bit overflow at the boundary") {
  // (n - 1) * s + p = 62 + 2 = 64 passes the width guard, but the
  // all-extremal-negative sum -2 - 2 * 2^62 is below INT64_MIN.
  HiKonvConfig cfg;
  cfg.bit_a = 64;
  cfg.bit_b = 64;
  cfg.p = 2;
  cfg.q = 2;
  cfg.n = 2;
  cfg.k = 1;
  cfg.s = 62;
  cfg.g_b = 0;
  cfg.is_signed = true;
  CHECK_THROWS_AS(pack_signed(seq_of({-2, -2}, 2, true), cfg, Side::kA),
                  RangeError);
  // The positive counterpart fits exactly.
  const PackedOperand ok = pack_signed(seq_of({1, 1}, 2, true), cfg, Side::kA);
  CHECK(ok.word == 1u + (std::uint64_t{1} << 62));
}

TEST_CASE("block products match the reference at full lane occupancy") {
  std::mt19937_64 rng(7);
  for (int rep = 0; rep < 3000; ++rep) {
    const bool is_signed = (rng() & 1) != 0;
    std::uniform_int_distribution<int> bw(is_signed ? 2 : 1, 8);
    const int p = bw(rng);
    const int q = bw(rng);
    const HiKonvConfig cfg = search_optimal(
        32, 32, p, q, ConvMode::single_multiplier(), is_signed);
    std::uniform_int_distribution<std::int64_t> fv(min_value(p, is_signed),
                                                   max_value(p, is_signed));
    std::uniform_int_distribution<std::int64_t> gv(min_value(q, is_signed),
                                                   max_value(q, is_signed));
    QuantSeq f, g;
    f.bitwidth = p;
    f.is_signed = is_signed;
    g.bitwidth = q;
    g.is_signed = is_signed;
    for (int i = 0; i < cfg.n; ++i) f.values.push_back(fv(rng));
    for (int j = 0; j < cfg.k; ++j) g.values.push_back(gv(rng));

    const ProductWord prod =
        multiply(pack(f, cfg, Side::kA), pack(g, cfg, Side::kB));
    const std::vector<std::int64_t> got = split(prod, cfg, cfg.n + cfg.k - 1);
    const std::vector<std::int64_t> want = naive_conv1d(f, g);
    CAPTURE(p);
    CAPTURE(q);
    CAPTURE(is_signed);
    REQUIRE(got == want);
  }
}

TEST_CASE("bit-level compression layout") {
  CHECK(compress_bits(seq_of({3, 1, 2}, 2, false)) ==
        std::vector<std::uint8_t>{0x27});
  CHECK(compress_bits(seq_of({-1}, 4, true)) ==
        std::vector<std::uint8_t>{0x0F});
  CHECK(compress_bits(seq_of({1, 2, 3, 4, 5}, 3, false)) ==
        std::vector<std::uint8_t>{0xD1, 0x58});
  // One full byte per value at bitwidth 8.
  CHECK(compress_bits(seq_of({255, 0, 7}, 8, false)) ==
        std::vector<std::uint8_t>{0xFF, 0x00, 0x07});
}

TEST_CASE("decompression inverts compression") {
  const QuantSeq seq = seq_of({1, 2, 3, 4, 5}, 3, false);
  const QuantSeq back = decompress_bits(compress_bits(seq), 3, 5, false);
  CHECK(back.values == seq.values);
  CHECK(back.bitwidth == 3);
  CHECK_FALSE(back.is_signed);

  const QuantSeq sseq = seq_of({-4, 3, -1, 0}, 3, true);
  CHECK(decompress_bits(compress_bits(sseq), 3, 4, true).values ==
        sseq.values);
}

TEST_CASE("truncated bit streams are rejected") {
  CHECK_THROWS_AS(decompress_bits({0xD1}, 3, 5, false), TruncatedStream);
  CHECK_THROWS_AS(decompress_bits({}, 1, 1, false), TruncatedStream);
  CHECK_THROWS_AS(decompress_bits({0xFF}, 9, 1, false), RangeError);
  CHECK_THROWS_AS(decompress_bits({0xFF}, 1, 1, true), RangeError);
}

TEST_CASE("compression round-trips randomized sequences at every bitwidth") {
  std::mt19937_64 rng(11);
  for (int rep = 0; rep < 500; ++rep) {
    const int bitwidth = 1 + static_cast<int>(rng() % 8);
    const bool is_signed = bitwidth > 1 && (rng() & 1) != 0;
    std::uniform_int_distribution<std::int64_t> value(
        min_value(bitwidth, is_signed), max_value(bitwidth, is_signed));
    QuantSeq seq;
    seq.bitwidth = bitwidth;
    seq.is_signed = is_signed;
    const std::size_t count = 1 + rng() % 64;
    for (std::size_t i = 0; i < count; ++i) seq.values.push_back(value(rng));

    const std::vector<std::uint8_t> stream = compress_bits(seq);
    CHECK(stream.size() ==
          (count * static_cast<std::size_t>(bitwidth) + 7) / 8);
    const QuantSeq back = decompress_bits(stream, bitwidth, count, is_signed);
    REQUIRE(back.values == seq.values);
  }
}

}  // TEST_SUITE

}  // namespace
