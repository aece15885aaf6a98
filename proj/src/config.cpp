#include "hikonv/config.hpp"

#include <algorithm>
#include <sstream>

#include "hikonv/errors.hpp"

namespace hikonv {

namespace {

void require(bool cond, const std::string& what) {
  if (!cond) throw RangeError(what);
}

void validate_geometry(int bit_a, int bit_b, int p, int q) {
  require(bit_a >= 1 && bit_a <= 64, "bit_a must be in [1, 64]");
  require(bit_b >= 1 && bit_b <= 64, "bit_b must be in [1, 64]");
  require(p >= 1 && p <= 8, "p must be in [1, 8]");
  require(q >= 1 && q <= 8, "q must be in [1, 8]");
}

void validate_mode(const ConvMode& mode) {
  if (mode.kind == ConvKind::kDnnLayer) {
    require(mode.channel_group >= 1, "channel group M must be >= 1");
  }
}

}  // namespace

int ceil_log2(std::int64_t x) {
  require(x >= 1, "ceil_log2 requires a positive argument");
  int bits = 0;
  while ((std::int64_t{1} << bits) < x) ++bits;
  return bits;
}

int slice_size(int p, int q, int g_b) {
  require(p >= 1 && q >= 1, "element bitwidths must be >= 1");
  require(g_b >= 0, "guard bits must be >= 0");
  if (p == 1) return q + g_b;
  if (q == 1) return p + g_b;
  return p + q + g_b;
}

int guard_bits(const ConvMode& mode, int n, int k) {
  require(n >= 1 && k >= 1, "lane counts must be >= 1");
  validate_mode(mode);
  switch (mode.kind) {
    case ConvKind::kSingleMultiplier:
      return ceil_log2(std::min(n, k));
    case ConvKind::kConv1D:
      return ceil_log2(k);
    case ConvKind::kDnnLayer:
      return ceil_log2(static_cast<std::int64_t>(mode.channel_group) *
                       std::min(n, k));
  }
  throw RangeError("unknown convolution mode");
}

bool check_feasible(const HiKonvConfig& cfg) {
  validate_geometry(cfg.bit_a, cfg.bit_b, cfg.p, cfg.q);
  require(cfg.n >= 1 && cfg.k >= 1, "lane counts must be >= 1");
  const int g_b = guard_bits(cfg.mode, cfg.n, cfg.k);
  const int s = slice_size(cfg.p, cfg.q, g_b);
  const std::int64_t a_bits =
      cfg.p + static_cast<std::int64_t>(cfg.n - 1) * s;
  const std::int64_t b_bits =
      cfg.q + static_cast<std::int64_t>(cfg.k - 1) * s;
  return a_bits <= cfg.bit_a && b_bits <= cfg.bit_b;
}

std::int64_t ops_per_mult(std::int64_t n, std::int64_t k) {
  require(n >= 1 && k >= 1, "lane counts must be >= 1");
  return n * k + (n - 1) * (k - 1);
}

HiKonvConfig make_config(int bit_a, int bit_b, int p, int q, int n, int k,
                         ConvMode mode, bool is_signed) {
  validate_geometry(bit_a, bit_b, p, q);
  require(n >= 1 && k >= 1, "lane counts must be >= 1");
  validate_mode(mode);
  HiKonvConfig cfg;
  cfg.bit_a = bit_a;
  cfg.bit_b = bit_b;
  cfg.p = p;
  cfg.q = q;
  cfg.n = n;
  cfg.k = k;
  cfg.g_b = guard_bits(mode, n, k);
  cfg.s = slice_size(p, q, cfg.g_b);
  cfg.mode = mode;
  cfg.is_signed = is_signed;
  return cfg;
}

HiKonvConfig search_optimal(int bit_a, int bit_b, int p, int q, ConvMode mode,
                            bool is_signed) {
  validate_geometry(bit_a, bit_b, p, q);
  validate_mode(mode);
  if (p > bit_a || q > bit_b) {
    std::ostringstream msg;
    msg << "no packing fits a " << bit_a << "x" << bit_b
        << " multiplier with p=" << p << " q=" << q;
    throw InfeasibleGeometry(msg.str());
  }
  // s >= 1, so n - 1 <= bit_a - p and k - 1 <= bit_b - q bound the search.
  HiKonvConfig best;
  std::int64_t best_ops = -1;
  for (int n = 1; n <= bit_a; ++n) {
    for (int k = 1; k <= bit_b; ++k) {
      HiKonvConfig cand = make_config(bit_a, bit_b, p, q, n, k, mode, is_signed);
      if (!check_feasible(cand)) continue;
      const std::int64_t ops = ops_per_mult(n, k);
      const bool wins =
          ops > best_ops ||
          (ops == best_ops &&
           (n > best.n || (n == best.n && k > best.k)));
      if (wins) {
        best = cand;
        best_ops = ops;
      }
    }
  }
  // p <= bit_a and q <= bit_b guarantee that n = k = 1 was feasible.
  return best;
}

std::vector<TableRow> throughput_table(int bit_a, int bit_b, int p_min,
                                       int p_max, int q_min, int q_max,
                                       ConvMode mode) {
  require(p_min >= 1 && p_max <= 8 && p_min <= p_max,
          "p range must lie within [1, 8]");
  require(q_min >= 1 && q_max <= 8 && q_min <= q_max,
          "q range must lie within [1, 8]");
  std::vector<TableRow> rows;
  rows.reserve(static_cast<std::size_t>(p_max - p_min + 1) *
               static_cast<std::size_t>(q_max - q_min + 1));
  for (int p = p_min; p <= p_max; ++p) {
    for (int q = q_min; q <= q_max; ++q) {
      TableRow row;
      row.p = p;
      row.q = q;
      try {
        const HiKonvConfig cfg = search_optimal(bit_a, bit_b, p, q, mode);
        row.feasible = true;
        row.n = cfg.n;
        row.k = cfg.k;
        row.s = cfg.s;
        row.g_b = cfg.g_b;
        row.ops = ops_per_mult(cfg.n, cfg.k);
      } catch (const InfeasibleGeometry&) {
        row.feasible = false;
      }
      rows.push_back(row);
    }
  }
  return rows;
}

std::string table_to_csv(const std::vector<TableRow>& rows) {
  std::ostringstream out;
  out << "p,q,n,k,s,gb,ops\n";
  for (const TableRow& row : rows) {
    out << row.p << ',' << row.q << ',';
    if (row.feasible) {
      out << row.n << ',' << row.k << ',' << row.s << ',' << row.g_b << ','
          << row.ops;
    } else {
      out << ",,,,";
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace hikonv
