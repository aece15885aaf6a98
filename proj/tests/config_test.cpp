#include <algorithm>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "doctest.h"
#include "hikonv/config.hpp"
#include "hikonv/errors.hpp"

namespace {

using namespace hikonv;

// Test-side reimplementation of the packing search, written independently of
// the library (different loop shapes and helpers) so that the two can
// disagree if either is wrong.
struct ScanResult {
  int n, k, s, gb;
  std::int64_t ops;
};

int scan_log2ceil(std::int64_t x) {
  int r = 0;
  std::int64_t v = 1;
  while (v < x) {
    v *= 2;
    ++r;
  }
  return r;
}

int scan_guard(const ConvMode& mode, int n, int k) {
  const int smaller = n < k ? n : k;
  if (mode.kind == ConvKind::kConv1D) return scan_log2ceil(k);
  if (mode.kind == ConvKind::kDnnLayer) {
    return scan_log2ceil(static_cast<std::int64_t>(mode.channel_group) *
                         smaller);
  }
  return scan_log2ceil(smaller);
}

int scan_slice(int p, int q, int gb) {
  if (p == 1) return q + gb;
  if (q == 1) return p + gb;
  return p + q + gb;
}

std::optional<ScanResult> scan_best(int bit_a, int bit_b, int p, int q,
                                    const ConvMode& mode) {
  std::optional<ScanResult> best;
  for (int k = 1; k <= bit_b; ++k) {
    for (int n = 1; n <= bit_a; ++n) {
      const int gb = scan_guard(mode, n, k);
      const int s = scan_slice(p, q, gb);
      if (p + static_cast<std::int64_t>(n - 1) * s > bit_a) continue;
      if (q + static_cast<std::int64_t>(k - 1) * s > bit_b) continue;
      const std::int64_t ops = static_cast<std::int64_t>(n) * k +
                               static_cast<std::int64_t>(n - 1) * (k - 1);
      const bool better =
          !best || ops > best->ops ||
          (ops == best->ops &&
           (n > best->n || (n == best->n && k > best->k)));
      if (better) best = ScanResult{n, k, s, gb, ops};
    }
  }
  return best;
}

void check_matches_scan(int bit_a, int bit_b, int p, int q,
                        const ConvMode& mode) {
  const auto want = scan_best(bit_a, bit_b, p, q, mode);
  if (!want) {
    CHECK_THROWS_AS(search_optimal(bit_a, bit_b, p, q, mode),
                    InfeasibleGeometry);
    return;
  }
  const HiKonvConfig got = search_optimal(bit_a, bit_b, p, q, mode);
  CAPTURE(bit_a);
  CAPTURE(bit_b);
  CAPTURE(p);
  CAPTURE(q);
  CHECK(got.n == want->n);
  CHECK(got.k == want->k);
  CHECK(got.s == want->s);
  CHECK(got.g_b == want->gb);
  CHECK(ops_per_mult(got.n, got.k) == want->ops);
}

TEST_SUITE("config") {

TEST_CASE("ceil_log2") {
  CHECK(ceil_log2(1) == 0);
  CHECK(ceil_log2(2) == 1);
  CHECK(ceil_log2(3) == 2);
  CHECK(ceil_log2(4) == 2);
  CHECK(ceil_log2(5) == 3);
  CHECK(ceil_log2(8) == 3);
  CHECK(ceil_log2(9) == 4);
  CHECK(ceil_log2(1) == 0);
  CHECK_THROWS_AS(ceil_log2(0), RangeError);
}

TEST_CASE("slice stride covers all bitwidth classes") {
  CHECK(slice_size(4, 4, 2) == 10);  // general: p + q + g_b
  CHECK(slice_size(1, 5, 0) == 5);   // binary f: q + g_b
  CHECK(slice_size(5, 1, 0) == 5);   // binary g: p + g_b
  CHECK(slice_size(1, 1, 2) == 3);   // both binary: q + g_b
  CHECK(slice_size(8, 8, 1) == 17);
  CHECK_THROWS_AS(slice_size(0, 4, 0), RangeError);
  CHECK_THROWS_AS(slice_size(4, 4, -1), RangeError);
}

TEST_CASE("guard bits per mode") {
  CHECK(guard_bits(ConvMode::single_multiplier(), 9, 4) == 2);
  CHECK(guard_bits(ConvMode::single_multiplier(), 4, 9) == 2);
  CHECK(guard_bits(ConvMode::single_multiplier(), 1, 1) == 0);
  CHECK(guard_bits(ConvMode::single_multiplier(), 7, 1) == 0);
  CHECK(guard_bits(ConvMode::conv1d(), 7, 3) == 2);
  CHECK(guard_bits(ConvMode::conv1d(), 7, 1) == 0);
  CHECK(guard_bits(ConvMode::dnn_layer(4), 3, 3) == 4);  // ceil(log2(12))
  CHECK(guard_bits(ConvMode::dnn_layer(1), 3, 3) == 2);
  CHECK(guard_bits(ConvMode::dnn_layer(6), 2, 10) == 4);  // ceil(log2(12))
}

TEST_CASE("equivalent ops per wide multiply") {
  CHECK(ops_per_mult(1, 1) == 1);
  CHECK(ops_per_mult(9, 4) == 60);
  CHECK(ops_per_mult(8, 8) == 113);
  CHECK(ops_per_mult(3, 2) == 8);
  CHECK_THROWS_AS(ops_per_mult(0, 1), RangeError);
}

TEST_CASE("feasibility check") {
  // 27x18, p = q = 1: nine and four lanes fit, ten lanes do not.
  CHECK(check_feasible(
      make_config(27, 18, 1, 1, 9, 4, ConvMode::single_multiplier(), false)));
  CHECK_FALSE(check_feasible(
      make_config(27, 18, 1, 1, 10, 4, ConvMode::single_multiplier(), false)));
  CHECK_FALSE(check_feasible(
      make_config(27, 18, 1, 1, 9, 5, ConvMode::single_multiplier(), false)));
}

TEST_CASE("make_config derives stride and guard bits") {
  const HiKonvConfig cfg =
      make_config(32, 32, 4, 4, 3, 3, ConvMode::single_multiplier(), false);
  CHECK(cfg.g_b == 2);
  CHECK(cfg.s == 10);
  CHECK_FALSE(cfg.is_signed);
  CHECK_THROWS_AS(
      make_config(0, 32, 4, 4, 1, 1, ConvMode::single_multiplier(), false),
      RangeError);
  CHECK_THROWS_AS(
      make_config(65, 32, 4, 4, 1, 1, ConvMode::single_multiplier(), false),
      RangeError);
  CHECK_THROWS_AS(
      make_config(32, 32, 9, 4, 1, 1, ConvMode::single_multiplier(), false),
      RangeError);
  CHECK_THROWS_AS(
      make_config(32, 32, 4, 0, 1, 1, ConvMode::single_multiplier(), false),
      RangeError);
  CHECK_THROWS_AS(make_config(32, 32, 4, 4, 1, 1, ConvMode::dnn_layer(0), false),
                  RangeError);
}

TEST_CASE("optimal packings for a 27x18 multiplier") {
  const ConvMode mode = ConvMode::single_multiplier();

  HiKonvConfig cfg = search_optimal(27, 18, 1, 1, mode);
  CHECK(cfg.n == 9);
  CHECK(cfg.k == 4);
  CHECK(cfg.s == 3);
  CHECK(cfg.g_b == 2);
  CHECK(ops_per_mult(cfg.n, cfg.k) == 60);

  cfg = search_optimal(27, 18, 4, 4, mode);
  CHECK(cfg.n == 3);
  CHECK(cfg.k == 2);
  CHECK(cfg.s == 9);
  CHECK(cfg.g_b == 1);
  CHECK(ops_per_mult(cfg.n, cfg.k) == 8);

  cfg = search_optimal(27, 18, 8, 8, mode);
  CHECK(cfg.n == 2);
  CHECK(cfg.k == 1);
  CHECK(cfg.s == 16);
  CHECK(cfg.g_b == 0);
  CHECK(ops_per_mult(cfg.n, cfg.k) == 2);
}

TEST_CASE("optimal packings for a 32x32 multiplier") {
  const ConvMode mode = ConvMode::single_multiplier();

  HiKonvConfig cfg = search_optimal(32, 32, 1, 1, mode);
  CHECK(cfg.n == 8);
  CHECK(cfg.k == 8);
  CHECK(cfg.s == 4);
  CHECK(cfg.g_b == 3);
  CHECK(ops_per_mult(cfg.n, cfg.k) == 113);

  cfg = search_optimal(32, 32, 4, 4, mode);
  CHECK(cfg.n == 3);
  CHECK(cfg.k == 3);
  CHECK(cfg.s == 10);
  CHECK(cfg.g_b == 2);
  CHECK(ops_per_mult(cfg.n, cfg.k) == 13);

  cfg = search_optimal(32, 32, 8, 8, mode);
  CHECK(cfg.n == 2);
  CHECK(cfg.k == 2);
  CHECK(cfg.s == 17);
  CHECK(cfg.g_b == 1);
  CHECK(ops_per_mult(cfg.n, cfg.k) == 5);
}

TEST_CASE("search fills in the full configuration") {
  const HiKonvConfig cfg =
      search_optimal(27, 18, 4, 4, ConvMode::conv1d(), true);
  CHECK(cfg.bit_a == 27);
  CHECK(cfg.bit_b == 18);
  CHECK(cfg.p == 4);
  CHECK(cfg.q == 4);
  CHECK(cfg.mode.kind == ConvKind::kConv1D);
  CHECK(cfg.is_signed);
  CHECK(check_feasible(cfg));
  CHECK(cfg.g_b == guard_bits(cfg.mode, cfg.n, cfg.k));
  CHECK(cfg.s == slice_size(cfg.p, cfg.q, cfg.g_b));
}

TEST_CASE("signedness does not change the chosen packing") {
  for (int p = 2; p <= 8; ++p) {
    const HiKonvConfig u =
        search_optimal(32, 32, p, p, ConvMode::conv1d(), false);
    const HiKonvConfig s =
        search_optimal(32, 32, p, p, ConvMode::conv1d(), true);
    CHECK(u.n == s.n);
    CHECK(u.k == s.k);
    CHECK(u.s == s.s);
    CHECK_FALSE(u.is_signed);
    CHECK(s.is_signed);
  }
}

TEST_CASE("search agrees with an independent scan over many geometries") {
  const ConvMode modes[] = {ConvMode::single_multiplier(), ConvMode::conv1d(),
                            ConvMode::dnn_layer(3)};
  const int widths[][2] = {{27, 18}, {18, 27}, {32, 32}, {16, 16},
                           {8, 8},   {64, 64}, {48, 24}, {7, 5}};
  for (const auto& wh : widths) {
    for (const ConvMode& mode : modes) {
      for (int p = 1; p <= 8; ++p) {
        for (int q = 1; q <= 8; ++q) {
          check_matches_scan(wh[0], wh[1], p, q, mode);
        }
      }
    }
  }
}

TEST_CASE("ties prefer more elements on operand A") {
  // 6x6 multiplier, p = q = 1: (3, 2) and (2, 3) both give 8 ops at s = 2
  // (1 + 2*2 = 5 fits either side).  The documented ordering picks larger n.
  const HiKonvConfig cfg =
      search_optimal(6, 6, 1, 1, ConvMode::single_multiplier());
  CHECK(ops_per_mult(cfg.n, cfg.k) == 8);
  CHECK(cfg.n == 3);
  CHECK(cfg.k == 2);
}

TEST_CASE("throughput never improves as bitwidth grows") {
  const ConvMode mode = ConvMode::single_multiplier();
  for (int q : {1, 4, 8}) {
    std::int64_t prev = -1;
    for (int p = 8; p >= 1; --p) {
      const HiKonvConfig cfg = search_optimal(32, 32, p, q, mode);
      const std::int64_t ops = ops_per_mult(cfg.n, cfg.k);
      CHECK(ops >= prev);
      prev = ops;
    }
  }
}

TEST_CASE("impossible geometries throw") {
  CHECK_THROWS_AS(search_optimal(4, 32, 8, 4, ConvMode::single_multiplier()),
                  InfeasibleGeometry);
  CHECK_THROWS_AS(search_optimal(32, 4, 4, 8, ConvMode::single_multiplier()),
                  InfeasibleGeometry);
  CHECK_THROWS_AS(search_optimal(0, 32, 4, 4, ConvMode::single_multiplier()),
                  RangeError);
}

TEST_CASE("search is safe to run from several threads") {
  std::vector<std::thread> pool;
  std::vector<int> ops(4, 0);
  for (int t = 0; t < 4; ++t) {
    pool.emplace_back([t, &ops] {
      int acc = 0;
      for (int rep = 0; rep < 200; ++rep) {
        const HiKonvConfig cfg =
            search_optimal(27, 18, 1 + rep % 8, 1 + (rep / 8) % 8,
                           ConvMode::single_multiplier());
        acc += cfg.n + cfg.k;
      }
      ops[t] = acc;
    });
  }
  for (std::thread& th : pool) th.join();
  CHECK(ops[0] == ops[1]);
  CHECK(ops[1] == ops[2]);
  CHECK(ops[2] == ops[3]);
}

TEST_CASE("table covers the requested grid in row-major order") {
  const std::vector<TableRow> rows =
      throughput_table(27, 18, 1, 8, 1, 8, ConvMode::single_multiplier());
  REQUIRE(rows.size() == 64);
  for (int p = 1; p <= 8; ++p) {
    for (int q = 1; q <= 8; ++q) {
      const TableRow& row = rows[static_cast<std::size_t>(p - 1) * 8 + (q - 1)];
      CHECK(row.p == p);
      CHECK(row.q == q);
      CHECK(row.feasible);
    }
  }
  CHECK(rows[0].n == 9);
  CHECK(rows[0].k == 4);
  CHECK(rows[0].ops == 60);
  const TableRow& mid = rows[3 * 8 + 3];  // p = 4, q = 4
  CHECK(mid.n == 3);
  CHECK(mid.k == 2);
  CHECK(mid.ops == 8);
}

TEST_CASE("table CSV format, including infeasible cells") {
  const std::string csv = table_to_csv(
      throughput_table(4, 8, 3, 5, 3, 4, ConvMode::single_multiplier()));
  CHECK(csv ==
        "p,q,n,k,s,gb,ops\n"
        "3,3,1,1,6,0,1\n"
        "3,4,1,1,7,0,1\n"
        "4,3,1,1,7,0,1\n"
        "4,4,1,1,8,0,1\n"
        "5,3,,,,,\n"
        "5,4,,,,,\n");
}

TEST_CASE("table range validation") {
  CHECK_THROWS_AS(throughput_table(32, 32, 0, 8, 1, 8, ConvMode::conv1d()),
                  RangeError);
  CHECK_THROWS_AS(throughput_table(32, 32, 1, 9, 1, 8, ConvMode::conv1d()),
                  RangeError);
  CHECK_THROWS_AS(throughput_table(32, 32, 5, 4, 1, 8, ConvMode::conv1d()),
                  RangeError);
}

}  // TEST_SUITE

}  // namespace
