#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace hikonv {

// Convolution context in which a packing is used.  The context decides how
// many partial products may accumulate inside one output slice, and therefore
// how many guard bits each slice needs.
enum class ConvKind {
  kSingleMultiplier,  // one block convolution per wide multiply
  kConv1D,            // overlap-add chain over a long input
  kDnnLayer,          // 2-D layer with packed-domain channel accumulation
};

struct ConvMode {
  ConvKind kind = ConvKind::kSingleMultiplier;
  int channel_group = 1;  // M: channels accumulated before splitting (kDnnLayer)

  static ConvMode single_multiplier() { return {ConvKind::kSingleMultiplier, 1}; }
  static ConvMode conv1d() { return {ConvKind::kConv1D, 1}; }
  static ConvMode dnn_layer(int m) { return {ConvKind::kDnnLayer, m}; }
};

// A complete packing description for one wide multiplier.
//
//   bit_a, bit_b  operand widths of the multiplier (e.g. 27x18 DSP, 32x32 ALU)
//   p, q          element bitwidths of the two convolution inputs
//   n, k          elements packed per operand
//   s             slice stride in bits
//   g_b           guard bits per slice
//
// Self-consistent configurations satisfy s == slice_size(p, q, g_b) and
// g_b == guard_bits(mode, n, k); check_feasible() additionally verifies that
// both packings fit their operands.
struct HiKonvConfig {
  int bit_a = 0;
  int bit_b = 0;
  int p = 0;
  int q = 0;
  int n = 0;
  int k = 0;
  int s = 0;
  int g_b = 0;
  ConvMode mode;
  bool is_signed = false;
};

// ceil(log2(x)) for x >= 1; ceil_log2(1) == 0.
int ceil_log2(std::int64_t x);

// Slice stride in bits.  Binary operands contribute no width of their own:
// the stride is q + g_b when p == 1, p + g_b when q == 1 (the first case wins
// when both are 1), and p + q + g_b otherwise.
int slice_size(int p, int q, int g_b);

// Guard bits needed so that no slice overflows into its neighbour:
//   single multiplier  ceil(log2(min(n, k)))      (longest anti-diagonal)
//   1-D overlap-add    ceil(log2(k))              (kernel-length taps per output)
//   DNN layer          ceil(log2(M * min(n, k)))  (M channels accumulated packed)
int guard_bits(const ConvMode& mode, int n, int k);

// True when both packings fit their operands:
//   p + (n - 1) * s <= bit_a   and   q + (k - 1) * s <= bit_b
// with s and g_b recomputed from (p, q, n, k, mode) for self-consistency.
bool check_feasible(const HiKonvConfig& cfg);

// Equivalent low-bitwidth operations produced by one wide multiply:
// n * k multiplications plus (n - 1) * (k - 1) additions.
std::int64_t ops_per_mult(std::int64_t n, std::int64_t k);

// Builds a config with s and g_b derived from the other fields.  Validates
// basic ranges (1 <= p, q <= 8; 1 <= bit_a, bit_b <= 64; n, k >= 1) but does
// not require feasibility, so caller code can probe infeasible shapes.
HiKonvConfig make_config(int bit_a, int bit_b, int p, int q, int n, int k,
                         ConvMode mode, bool is_signed);

// Exhaustively maximizes ops_per_mult over all feasible (n, k) pairs, with
// guard bits recomputed per candidate.  Ties prefer larger n, then larger k.
// Throws InfeasibleGeometry when even n = k = 1 does not fit (p > bit_a or
// q > bit_b).
HiKonvConfig search_optimal(int bit_a, int bit_b, int p, int q, ConvMode mode,
                            bool is_signed = false);

// One row of a throughput table.  Infeasible cells keep p and q but carry no
// packing (feasible == false).
struct TableRow {
  int p = 0;
  int q = 0;
  bool feasible = false;
  int n = 0;
  int k = 0;
  int s = 0;
  int g_b = 0;
  std::int64_t ops = 0;
};

// Optimal packing for every (p, q) in the inclusive ranges, in row-major
// order (p outer, q inner).  Ranges must lie within [1, 8].
std::vector<TableRow> throughput_table(int bit_a, int bit_b, int p_min,
                                       int p_max, int q_min, int q_max,
                                       ConvMode mode);

// CSV form with header "p,q,n,k,s,gb,ops".  Infeasible rows serialize as
// "p,q,,,,," (empty packing cells).
std::string table_to_csv(const std::vector<TableRow>& rows);

}  // namespace hikonv
