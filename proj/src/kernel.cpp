#include "hikonv/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "hikonv/errors.hpp"

namespace hikonv {

namespace {

void require_mode(const HiKonvConfig& cfg, ConvKind kind, const char* what) {
  if (cfg.mode.kind != kind) {
    throw InfeasibleGeometry(std::string(what) +
                             " requires a configuration built for its mode");
  }
  if (!check_feasible(cfg)) {
    std::ostringstream msg;
    msg << what << " requires a feasible configuration; (n=" << cfg.n
        << ", k=" << cfg.k << ") does not fit a " << cfg.bit_a << "x"
        << cfg.bit_b << " multiplier";
    throw InfeasibleGeometry(msg.str());
  }
}

void require_operand(const QuantSeq& seq, int bitwidth, bool is_signed,
                     const char* what) {
  if (seq.values.empty()) {
    throw RangeError(std::string(what) + " must be nonempty");
  }
  if (seq.bitwidth != bitwidth) {
    throw RangeError(std::string(what) +
                     " bitwidth does not match the configuration");
  }
  if (seq.is_signed != is_signed) {
    throw RangeError(std::string(what) +
                     " signedness does not match the configuration");
  }
}

// Packed-domain accumulators hold one value per segment; all of them must fit
// 128-bit arithmetic.  Segment values stay below 2^s (unsigned) or within
// +/- 2^(s-1) (signed) by the guard-bit sizing, so the accumulator needs
// s * (n + k - 1) bits, plus the sign for signed configs.
void require_accumulator_width(const HiKonvConfig& cfg, const char* what) {
  const std::int64_t bits =
      static_cast<std::int64_t>(cfg.s) * (cfg.n + cfg.k - 1);
  const int limit = cfg.is_signed ? 127 : 128;
  if (bits > limit) {
    std::ostringstream msg;
    msg << what << ": packed accumulation needs " << bits
        << " bits, beyond the 128-bit arithmetic this build uses; "
        << "choose a smaller geometry or channel group";
    throw InfeasibleGeometry(msg.str());
  }
}

void count_mult(ConvCounters* counters) {
  if (counters != nullptr) ++counters->wide_mults;
}

// Records the largest segment magnitude of a packed accumulator state.
void probe_word(uint128 word, const HiKonvConfig& cfg,
                ConvCounters* counters) {
  if (counters == nullptr || !counters->probe_segments) return;
  const ProductWord prod{word, cfg};
  for (std::int64_t seg : split(prod, cfg, cfg.n + cfg.k - 1)) {
    counters->max_segment_abs =
        std::max(counters->max_segment_abs, std::abs(seg));
  }
}

// Drops the n just-emitted segments from a packed accumulator.  For signed
// words the arithmetic shift borrows one when the discarded low part is
// negative; adding its sign bit (bit s*n - 1) restores the exact packed
// value of the remaining segments.
uint128 shift_out_emitted(uint128 word, const HiKonvConfig& cfg) {
  const unsigned shift =
      static_cast<unsigned>(cfg.s) * static_cast<unsigned>(cfg.n);
  if (!cfg.is_signed) return word >> shift;
  const uint128 shifted =
      static_cast<uint128>(static_cast<int128>(word) >> shift);
  const uint128 borrow_fix = (word >> (shift - 1)) & uint128{1};
  return shifted + borrow_fix;
}

QuantSeq block_of(const QuantSeq& f, std::size_t begin, std::size_t count) {
  QuantSeq block;
  block.bitwidth = f.bitwidth;
  block.is_signed = f.is_signed;
  const std::size_t end = std::min(begin + count, f.values.size());
  block.values.assign(f.values.begin() + static_cast<std::ptrdiff_t>(begin),
                      f.values.begin() + static_cast<std::ptrdiff_t>(end));
  return block;
}

// Overlap-add 1-D convolution for a kernel that fits the lane budget
// (|g| <= cfg.k).  Returns |f| + |g| - 1 values and issues exactly
// ceil(|f| / n) wide multiplications.
std::vector<std::int64_t> conv1d_core(const QuantSeq& f, const QuantSeq& g,
                                      const HiKonvConfig& cfg,
                                      const Conv1dOptions& opts) {
  const int n = cfg.n;
  const int k = cfg.k;
  const std::size_t len = f.values.size();
  const std::size_t k_len = g.values.size();
  const std::size_t blocks = (len + static_cast<std::size_t>(n) - 1) /
                             static_cast<std::size_t>(n);
  const PackedOperand b = pack(g, cfg, Side::kB);

  std::vector<std::int64_t> out;
  out.reserve(blocks * static_cast<std::size_t>(n) + k_len);

  if (opts.accumulation == Accumulation::kPackedDomain) {
    require_accumulator_width(cfg, "conv1d");
    // Running packed accumulator: after block x it holds, segment by
    // segment, the totals for outputs x*n .. x*n + n + k - 2.  The low n
    // segments are final (later blocks only touch higher outputs), so they
    // are emitted and shifted out; the top k - 1 segments align with the
    // next block's low segments.
    uint128 running = 0;
    for (std::size_t x = 0; x < blocks; ++x) {
      const PackedOperand a =
          pack(block_of(f, x * static_cast<std::size_t>(n),
                        static_cast<std::size_t>(n)),
               cfg, Side::kA);
      const ProductWord p = multiply(a, b);
      count_mult(opts.counters);
      running = (x == 0) ? p.word : shift_out_emitted(running, cfg) + p.word;
      probe_word(running, cfg, opts.counters);
      const ProductWord state{running, cfg};
      for (std::int64_t seg : split(state, cfg, n)) out.push_back(seg);
    }
    const ProductWord tail{shift_out_emitted(running, cfg), cfg};
    for (std::int64_t seg : split(tail, cfg, k - 1)) out.push_back(seg);
  } else {
    // Second route: split every block product immediately and add the plain
    // integers, shifted by the block offset.
    out.assign((blocks - 1) * static_cast<std::size_t>(n) +
                   static_cast<std::size_t>(n + k - 1),
               0);
    for (std::size_t x = 0; x < blocks; ++x) {
      const PackedOperand a =
          pack(block_of(f, x * static_cast<std::size_t>(n),
                        static_cast<std::size_t>(n)),
               cfg, Side::kA);
      const ProductWord p = multiply(a, b);
      count_mult(opts.counters);
      const std::vector<std::int64_t> segs = split(p, cfg, n + k - 1);
      const std::size_t base = x * static_cast<std::size_t>(n);
      for (std::size_t m = 0; m < segs.size(); ++m) {
        out[base + m] += segs[m];
      }
    }
  }

  out.resize(len + k_len - 1);
  return out;
}

}  // namespace

std::vector<std::int64_t> conv_block(const QuantSeq& f_block,
                                     const QuantSeq& g,
                                     const HiKonvConfig& cfg,
                                     ConvCounters* counters) {
  require_mode(cfg, ConvKind::kSingleMultiplier, "conv_block");
  require_operand(f_block, cfg.p, cfg.is_signed, "f block");
  require_operand(g, cfg.q, cfg.is_signed, "kernel");
  const PackedOperand a = pack(f_block, cfg, Side::kA);
  const PackedOperand b = pack(g, cfg, Side::kB);
  const ProductWord p = multiply(a, b);
  count_mult(counters);
  probe_word(p.word, cfg, counters);
  return split(p, cfg, cfg.n + cfg.k - 1);
}

std::vector<std::int64_t> conv1d(const QuantSeq& f, const QuantSeq& g,
                                 const HiKonvConfig& cfg,
                                 const Conv1dOptions& opts) {
  require_mode(cfg, ConvKind::kConv1D, "conv1d");
  require_operand(f, cfg.p, cfg.is_signed, "input");
  require_operand(g, cfg.q, cfg.is_signed, "kernel");

  const std::size_t k_len = g.values.size();
  const std::size_t lanes = static_cast<std::size_t>(cfg.k);
  if (k_len <= lanes) return conv1d_core(f, g, cfg, opts);

  if (!opts.allow_kernel_tiling) {
    std::ostringstream msg;
    msg << "kernel of length " << k_len << " exceeds the " << cfg.k
        << "-lane budget and tiling is disallowed";
    throw InfeasibleGeometry(msg.str());
  }
  // Tile the kernel into chunks of cfg.k taps; chunk t covers taps
  // [t*k, t*k + |chunk|), so its partial result lands at offset t*k.
  std::vector<std::int64_t> out(f.values.size() + k_len - 1, 0);
  for (std::size_t start = 0; start < k_len; start += lanes) {
    QuantSeq chunk;
    chunk.bitwidth = g.bitwidth;
    chunk.is_signed = g.is_signed;
    const std::size_t stop = std::min(start + lanes, k_len);
    chunk.values.assign(g.values.begin() + static_cast<std::ptrdiff_t>(start),
                        g.values.begin() + static_cast<std::ptrdiff_t>(stop));
    const std::vector<std::int64_t> part = conv1d_core(f, chunk, cfg, opts);
    for (std::size_t i = 0; i + 1 < f.values.size() + chunk.values.size();
         ++i) {
      out[start + i] += part[i];
    }
  }
  return out;
}

Tensor3 conv2d_layer(const Tensor3& input, const Tensor4& weights,
                     const HiKonvConfig& cfg, const Conv2dOptions& opts) {
  require_mode(cfg, ConvKind::kDnnLayer, "conv2d_layer");
  validate_tensor(input);
  validate_tensor(weights);
  if (weights.in_channels != input.channels) {
    throw ShapeMismatch("weight in_channels must match input channels");
  }
  if (weights.ksize > input.height || weights.ksize > input.width) {
    throw ShapeMismatch("kernel larger than input plane");
  }
  if (input.bitwidth != cfg.p || weights.bitwidth != cfg.q ||
      input.is_signed != cfg.is_signed ||
      weights.is_signed != cfg.is_signed) {
    throw RangeError("tensor bitwidths/signedness must match the configuration");
  }
  if (opts.accumulation == Accumulation::kPackedDomain) {
    require_accumulator_width(cfg, "conv2d_layer");
  }

  const int c_i = input.channels;
  const int c_o = weights.out_channels;
  const int ksize = weights.ksize;
  const int h_out = input.height - ksize + 1;
  const int w_out = input.width - ksize + 1;
  const int n = cfg.n;
  const int k = cfg.k;
  const int group_size = std::min(cfg.mode.channel_group, c_i);
  const int blocks = (input.width + n - 1) / n;
  const int chunks = (ksize + k - 1) / k;

  // Pre-pack every input-row block once: a_packed[(ci * H + row) * X + x].
  std::vector<std::uint64_t> a_packed(
      static_cast<std::size_t>(c_i) * input.height * blocks);
  {
    QuantSeq row;
    row.bitwidth = cfg.p;
    row.is_signed = cfg.is_signed;
    for (int ci = 0; ci < c_i; ++ci) {
      for (int h = 0; h < input.height; ++h) {
        row.values.assign(
            input.data.begin() +
                (static_cast<std::ptrdiff_t>(ci) * input.height + h) *
                    input.width,
            input.data.begin() +
                (static_cast<std::ptrdiff_t>(ci) * input.height + h + 1) *
                    input.width);
        for (int x = 0; x < blocks; ++x) {
          const QuantSeq block =
              block_of(row, static_cast<std::size_t>(x) * n,
                       static_cast<std::size_t>(n));
          a_packed[(static_cast<std::size_t>(ci) * input.height + h) * blocks +
                   x] = pack(block, cfg, Side::kA).word;
        }
      }
    }
  }

  // Pre-pack every kernel-row chunk, reversed so that the block product is a
  // convolution: b_packed[((co * C_i + ci) * K + kh) * T + t] packs
  // weights[co][ci][kh][K-1-j] taps j in [t*k, t*k + chunk).
  std::vector<std::uint64_t> b_packed(
      static_cast<std::size_t>(c_o) * c_i * ksize * chunks);
  {
    QuantSeq rev;
    rev.bitwidth = cfg.q;
    rev.is_signed = cfg.is_signed;
    for (int co = 0; co < c_o; ++co) {
      for (int ci = 0; ci < c_i; ++ci) {
        for (int kh = 0; kh < ksize; ++kh) {
          rev.values.resize(static_cast<std::size_t>(ksize));
          for (int j = 0; j < ksize; ++j) {
            rev.values[static_cast<std::size_t>(j)] =
                weights.at(co, ci, kh, ksize - 1 - j);
          }
          for (int t = 0; t < chunks; ++t) {
            const QuantSeq chunk =
                block_of(rev, static_cast<std::size_t>(t) * k,
                         static_cast<std::size_t>(k));
            b_packed[((static_cast<std::size_t>(co) * c_i + ci) * ksize + kh) *
                         chunks +
                     t] = pack(chunk, cfg, Side::kB).word;
          }
        }
      }
    }
  }

  Tensor3 out;
  out.channels = c_o;
  out.height = h_out;
  out.width = w_out;
  out.bitwidth = 32;
  out.is_signed = true;
  out.data.assign(static_cast<std::size_t>(c_o) * h_out * w_out, 0);

  const std::size_t row_len = static_cast<std::size_t>(blocks - 1) * n +
                              static_cast<std::size_t>(chunks - 1) * k +
                              static_cast<std::size_t>(n + k - 1);
  std::vector<std::int64_t> row_acc(row_len);
  HiKonvConfig mult_cfg = cfg;  // carried by operands/products below

  for (int co = 0; co < c_o; ++co) {
    for (int h = 0; h < h_out; ++h) {
      std::fill(row_acc.begin(), row_acc.end(), 0);
      for (int kh = 0; kh < ksize; ++kh) {
        const int in_row = h + kh;
        for (int t = 0; t < chunks; ++t) {
          for (int g0 = 0; g0 < c_i; g0 += group_size) {
            const int g1 = std::min(g0 + group_size, c_i);
            for (int x = 0; x < blocks; ++x) {
              const std::size_t base = static_cast<std::size_t>(x) * n +
                                       static_cast<std::size_t>(t) * k;
              auto operand_a = [&](int ci) {
                PackedOperand a;
                a.word = a_packed[(static_cast<std::size_t>(ci) * input.height +
                                   in_row) *
                                      blocks +
                                  x];
                a.lane_count = n;
                a.side = Side::kA;
                a.cfg = mult_cfg;
                return a;
              };
              auto operand_b = [&](int ci) {
                PackedOperand b;
                b.word = b_packed[((static_cast<std::size_t>(co) * c_i + ci) *
                                       ksize +
                                   kh) *
                                      chunks +
                                  t];
                b.lane_count = k;
                b.side = Side::kB;
                b.cfg = mult_cfg;
                return b;
              };
              if (opts.accumulation == Accumulation::kPackedDomain) {
                // Channel accumulation happens on the packed products; only
                // the group's summed word is split.
                uint128 word = 0;
                for (int ci = g0; ci < g1; ++ci) {
                  word += multiply(operand_a(ci), operand_b(ci)).word;
                  count_mult(opts.counters);
                  probe_word(word, mult_cfg, opts.counters);
                }
                const ProductWord state{word, mult_cfg};
                const std::vector<std::int64_t> segs =
                    split(state, mult_cfg, n + k - 1);
                for (std::size_t m = 0; m < segs.size(); ++m) {
                  row_acc[base + m] += segs[m];
                }
              } else {
                // Second route: split every product on its own and add the
                // plain integers at full precision.
                for (int ci = g0; ci < g1; ++ci) {
                  const ProductWord p = multiply(operand_a(ci), operand_b(ci));
                  count_mult(opts.counters);
                  const std::vector<std::int64_t> segs =
                      split(p, mult_cfg, n + k - 1);
                  for (std::size_t m = 0; m < segs.size(); ++m) {
                    row_acc[base + m] += segs[m];
                  }
                }
              }
            }
          }
        }
      }
      for (int w = 0; w < w_out; ++w) {
        out.at(co, h, w) = row_acc[static_cast<std::size_t>(w) + ksize - 1];
      }
    }
  }
  validate_tensor(out);
  return out;
}

int default_channel_group(int bit_a, int bit_b, int p, int q, int c_i,
                          bool is_signed) {
  if (c_i < 1) throw RangeError("channel count must be >= 1");
  const HiKonvConfig base =
      search_optimal(bit_a, bit_b, p, q, ConvMode::dnn_layer(1), is_signed);
  for (int m = c_i; m > 1; --m) {
    const HiKonvConfig cand = make_config(
        bit_a, bit_b, p, q, base.n, base.k, ConvMode::dnn_layer(m), is_signed);
    if (check_feasible(cand)) return m;
  }
  return 1;
}

}  // namespace hikonv
