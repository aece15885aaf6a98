#include <algorithm>
#include <atomic>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "hikonv/bench.hpp"
#include "hikonv/bitpack.hpp"
#include "hikonv/config.hpp"
#include "hikonv/errors.hpp"
#include "hikonv/kernel.hpp"
#include "hikonv/oracle.hpp"
#include "hikonv/qtensor.hpp"

namespace {

using namespace hikonv;

ConvMode parse_mode(const std::string& name, int m) {
  if (name == "single") return ConvMode::single_multiplier();
  if (name == "conv1d") return ConvMode::conv1d();
  if (name == "dnn") return ConvMode::dnn_layer(m);
  throw RangeError("unknown mode: " + name + " (use single, conv1d, or dnn)");
}

std::string mode_name(const ConvMode& mode) {
  switch (mode.kind) {
    case ConvKind::kSingleMultiplier:
      return "single";
    case ConvKind::kConv1D:
      return "conv1d";
    case ConvKind::kDnnLayer: {
      std::ostringstream out;
      out << "dnn, M=" << mode.channel_group;
      return out.str();
    }
  }
  return "?";
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << text;
  if (!out) throw IoError("write failed: " + path);
}

std::string join_values(const std::vector<std::int64_t>& values) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i > 0) out << ", ";
    out << values[i];
  }
  out << ']';
  return out.str();
}

// ---------------------------------------------------------------- search --

struct SearchArgs {
  int bit_a = 32, bit_b = 32, p = 4, q = 4, m = 1;
  std::string mode = "single";
  bool is_signed = false;
};

void run_search(const SearchArgs& args) {
  const ConvMode mode = parse_mode(args.mode, args.m);
  const HiKonvConfig cfg = search_optimal(args.bit_a, args.bit_b, args.p,
                                          args.q, mode, args.is_signed);
  std::cout << "optimal packing for a " << args.bit_a << "x" << args.bit_b
            << " multiplier, p=" << args.p << " q=" << args.q << " ("
            << mode_name(mode) << "): " << cfg.n << "x" << cfg.k
            << " elements per multiply, " << ops_per_mult(cfg.n, cfg.k)
            << " equivalent ops\n";
  std::cout << "n=" << cfg.n << " k=" << cfg.k << " s=" << cfg.s
            << " gb=" << cfg.g_b << " ops=" << ops_per_mult(cfg.n, cfg.k)
            << "\n";
}

// ----------------------------------------------------------------- table --

struct TableArgs {
  int bit_a = 32, bit_b = 32, p_min = 1, p_max = 8, q_min = 1, q_max = 8,
      m = 1;
  std::string mode = "single";
  std::string out;
};

void run_table(const TableArgs& args) {
  const ConvMode mode = parse_mode(args.mode, args.m);
  const std::vector<TableRow> rows = throughput_table(
      args.bit_a, args.bit_b, args.p_min, args.p_max, args.q_min, args.q_max,
      mode);
  write_text(args.out, table_to_csv(rows));
}

// ---------------------------------------------------------------- conv1d --

struct Conv1dArgs {
  std::string input, kernel, out;
  int bit_a = 32, bit_b = 32;
  bool naive = false, verify = false;
};

void run_conv1d(const Conv1dArgs& args) {
  const QuantSeq f = to_seq(read_qtensor(args.input));
  const QuantSeq g = to_seq(read_qtensor(args.kernel));
  if (f.is_signed != g.is_signed) {
    throw RangeError("input and kernel must agree on signedness");
  }
  const HiKonvConfig cfg =
      search_optimal(args.bit_a, args.bit_b, f.bitwidth, g.bitwidth,
                     ConvMode::conv1d(), f.is_signed);

  std::optional<std::vector<std::int64_t>> packed;
  std::optional<std::vector<std::int64_t>> reference;
  ConvCounters counters;
  if (!args.naive || args.verify) {
    Conv1dOptions opts;
    opts.counters = &counters;
    packed = conv1d(f, g, cfg, opts);
  }
  if (args.naive || args.verify) reference = naive_conv1d(f, g);
  if (args.verify && *packed != *reference) {
    throw EquivalenceFailure("packed conv1d disagrees with the reference");
  }
  const std::vector<std::int64_t>& result = args.naive ? *reference : *packed;

  QTensor out;
  out.dims = {static_cast<std::uint32_t>(result.size())};
  out.values = result;
  out.bitwidth = 32;
  out.is_signed = true;
  const std::size_t bytes = write_qtensor(args.out, out);
  std::cout << "wrote " << result.size() << " outputs (" << bytes
            << " bytes) to " << args.out << " using n=" << cfg.n
            << " k=" << cfg.k;
  if (packed) std::cout << ", wide mults=" << counters.wide_mults;
  if (args.verify) std::cout << ", verified";
  std::cout << "\n";
}

// ---------------------------------------------------------------- conv2d --

struct Conv2dArgs {
  std::string input, weights, out;
  int bit_a = 32, bit_b = 32, m = 0;
  bool naive = false, verify = false;
};

void run_conv2d(const Conv2dArgs& args) {
  const Tensor3 input = to_tensor3(read_qtensor(args.input));
  const Tensor4 weights = to_tensor4(read_qtensor(args.weights));
  if (input.is_signed != weights.is_signed) {
    throw RangeError("input and weights must agree on signedness");
  }
  const int m = args.m > 0
                    ? args.m
                    : default_channel_group(args.bit_a, args.bit_b,
                                            input.bitwidth, weights.bitwidth,
                                            input.channels, input.is_signed);
  const HiKonvConfig cfg =
      search_optimal(args.bit_a, args.bit_b, input.bitwidth, weights.bitwidth,
                     ConvMode::dnn_layer(m), input.is_signed);

  std::optional<Tensor3> packed;
  std::optional<Tensor3> reference;
  ConvCounters counters;
  if (!args.naive || args.verify) {
    Conv2dOptions opts;
    opts.counters = &counters;
    packed = conv2d_layer(input, weights, cfg, opts);
  }
  if (args.naive || args.verify) reference = naive_conv2d(input, weights);
  if (args.verify && packed->data != reference->data) {
    throw EquivalenceFailure("packed conv2d disagrees with the reference");
  }
  const Tensor3& result = args.naive ? *reference : *packed;

  const std::size_t bytes = write_qtensor(args.out, to_qtensor(result));
  std::cout << "wrote a " << result.channels << "x" << result.height << "x"
            << result.width << " tensor (" << bytes << " bytes) to "
            << args.out << " using n=" << cfg.n << " k=" << cfg.k
            << " M=" << m;
  if (packed) std::cout << ", wide mults=" << counters.wide_mults;
  if (args.verify) std::cout << ", verified";
  std::cout << "\n";
}

// ----------------------------------------------------------------- bench --

struct BenchArgs {
  std::string scenario = "conv1d";
  int len = 65536, k_len = 3, ci = 16, co = 16, height = 12, width = 12;
  int p = 4, q = 4, iters = 30, warmup = 5, bit_a = 32, bit_b = 32, m = 0;
  bool is_signed = false;
  std::uint64_t seed = 42;
  std::string out;
};

void run_bench_cmd(const BenchArgs& args) {
  BenchSpec spec;
  spec.scenario = args.scenario;
  spec.len = args.len;
  spec.k_len = args.k_len;
  spec.ci = args.ci;
  spec.co = args.co;
  spec.height = args.height;
  spec.width = args.width;
  spec.p = args.p;
  spec.q = args.q;
  spec.is_signed = args.is_signed;
  spec.iters = args.iters;
  spec.warmup = args.warmup;
  spec.bit_a = args.bit_a;
  spec.bit_b = args.bit_b;
  spec.m = args.m;
  spec.seed = args.seed;
  const BenchRecord rec = run_bench(spec);
  write_text(args.out, emit_csv({rec}));
}

// -------------------------------------------------------------- selftest --

struct SelftestArgs {
  int exhaustive_bits = 2;
  std::int64_t random_cases = 10000;
  std::uint64_t seed = 42;
  int threads = 1;
};

struct Counterexample {
  std::int64_t index = 0;
  std::string text;
};

std::mt19937_64 case_rng(std::uint64_t seed, std::uint64_t index) {
  return std::mt19937_64(seed + 0x9e3779b97f4a7c15ULL * (index + 1));
}

std::int64_t draw(std::mt19937_64& rng, std::int64_t lo, std::int64_t hi) {
  return std::uniform_int_distribution<std::int64_t>(lo, hi)(rng);
}

QuantSeq random_seq(std::mt19937_64& rng, std::size_t count, int bitwidth,
                    bool is_signed) {
  QuantSeq seq;
  seq.bitwidth = bitwidth;
  seq.is_signed = is_signed;
  seq.values.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    seq.values.push_back(draw(rng, min_value(bitwidth, is_signed),
                              max_value(bitwidth, is_signed)));
  }
  return seq;
}

std::int64_t run_exhaustive_blocks(int bits, bool is_signed) {
  const HiKonvConfig cfg = make_config(
      32, 32, bits, bits, 2, 2, ConvMode::single_multiplier(), is_signed);
  const std::int64_t lo = min_value(bits, is_signed);
  const std::int64_t hi = max_value(bits, is_signed);
  std::int64_t cases = 0;
  QuantSeq f{{0, 0}, bits, is_signed};
  QuantSeq g{{0, 0}, bits, is_signed};
  for (std::int64_t f0 = lo; f0 <= hi; ++f0) {
    for (std::int64_t f1 = lo; f1 <= hi; ++f1) {
      for (std::int64_t g0 = lo; g0 <= hi; ++g0) {
        for (std::int64_t g1 = lo; g1 <= hi; ++g1) {
          f.values = {f0, f1};
          g.values = {g0, g1};
          const std::vector<std::int64_t> got = conv_block(f, g, cfg);
          const std::vector<std::int64_t> want = naive_conv1d(f, g);
          ++cases;
          if (got != want) {
            std::ostringstream msg;
            msg << "conv_block mismatch at p=q=" << bits
                << " signed=" << is_signed << "\n  f = " << join_values(f.values)
                << "\n  g = " << join_values(g.values)
                << "\n  expected = " << join_values(want)
                << "\n  actual   = " << join_values(got);
            throw EquivalenceFailure(msg.str());
          }
        }
      }
    }
  }
  return cases;
}

std::optional<Counterexample> check_conv1d_case(std::uint64_t seed,
                                                std::int64_t index) {
  std::mt19937_64 rng = case_rng(seed, static_cast<std::uint64_t>(index));
  const bool is_signed = draw(rng, 0, 1) == 1;
  const int p = static_cast<int>(draw(rng, is_signed ? 2 : 1, 8));
  const int q = static_cast<int>(draw(rng, is_signed ? 2 : 1, 8));
  const int len = static_cast<int>(draw(rng, 1, 256));
  const int k_len = static_cast<int>(draw(rng, 1, 8));
  const QuantSeq f =
      random_seq(rng, static_cast<std::size_t>(len), p, is_signed);
  const QuantSeq g =
      random_seq(rng, static_cast<std::size_t>(k_len), q, is_signed);
  const HiKonvConfig cfg =
      search_optimal(32, 32, p, q, ConvMode::conv1d(), is_signed);
  const std::vector<std::int64_t> want = naive_conv1d(f, g);
  const std::vector<std::int64_t> packed = conv1d(f, g, cfg);
  Conv1dOptions unpacked_opts;
  unpacked_opts.accumulation = Accumulation::kUnpacked;
  const std::vector<std::int64_t> unpacked = conv1d(f, g, cfg, unpacked_opts);
  if (packed == want && unpacked == want) return std::nullopt;
  std::ostringstream msg;
  msg << "conv1d mismatch: p=" << p << " q=" << q << " signed=" << is_signed
      << " L=" << len << " K=" << k_len << " (n=" << cfg.n << " k=" << cfg.k
      << ")\n  f = " << join_values(f.values)
      << "\n  g = " << join_values(g.values)
      << "\n  expected = " << join_values(want)
      << "\n  packed   = " << join_values(packed)
      << "\n  unpacked = " << join_values(unpacked);
  return Counterexample{index, msg.str()};
}

std::optional<Counterexample> check_conv2d_case(std::uint64_t seed,
                                                std::int64_t index) {
  std::mt19937_64 rng =
      case_rng(seed ^ 0xc2d70f256d7c8a3bULL, static_cast<std::uint64_t>(index));
  const bool is_signed = draw(rng, 0, 1) == 1;
  const int p = static_cast<int>(draw(rng, is_signed ? 2 : 1, 8));
  const int q = static_cast<int>(draw(rng, is_signed ? 2 : 1, 8));
  const int ksize = static_cast<int>(draw(rng, 1, 5));
  const int height = static_cast<int>(draw(rng, ksize, 12));
  const int width = static_cast<int>(draw(rng, ksize, 12));
  const int ci = static_cast<int>(draw(rng, 1, 6));
  const int co = static_cast<int>(draw(rng, 1, 6));
  const int m = static_cast<int>(draw(rng, 1, ci));

  Tensor3 input;
  input.channels = ci;
  input.height = height;
  input.width = width;
  input.bitwidth = p;
  input.is_signed = is_signed;
  input.data = random_seq(rng, static_cast<std::size_t>(ci) * height * width,
                          p, is_signed)
                   .values;
  Tensor4 weights;
  weights.out_channels = co;
  weights.in_channels = ci;
  weights.ksize = ksize;
  weights.bitwidth = q;
  weights.is_signed = is_signed;
  weights.data =
      random_seq(rng, static_cast<std::size_t>(co) * ci * ksize * ksize, q,
                 is_signed)
          .values;

  const HiKonvConfig cfg =
      search_optimal(32, 32, p, q, ConvMode::dnn_layer(m), is_signed);
  const Tensor3 want = naive_conv2d(input, weights);
  const Tensor3 packed = conv2d_layer(input, weights, cfg);
  Conv2dOptions unpacked_opts;
  unpacked_opts.accumulation = Accumulation::kUnpacked;
  const Tensor3 unpacked = conv2d_layer(input, weights, cfg, unpacked_opts);
  if (packed.data == want.data && unpacked.data == want.data) {
    return std::nullopt;
  }
  std::ostringstream msg;
  msg << "conv2d mismatch: p=" << p << " q=" << q << " signed=" << is_signed
      << " Ci=" << ci << " Co=" << co << " H=" << height << " W=" << width
      << " K=" << ksize << " M=" << m << " (n=" << cfg.n << " k=" << cfg.k
      << ")\n  input    = " << join_values(input.data)
      << "\n  weights  = " << join_values(weights.data)
      << "\n  expected = " << join_values(want.data)
      << "\n  packed   = " << join_values(packed.data)
      << "\n  unpacked = " << join_values(unpacked.data);
  return Counterexample{index, msg.str()};
}

template <typename Check>
std::optional<Counterexample> run_cases(std::int64_t count, int threads,
                                        Check&& check) {
  if (threads <= 1) {
    for (std::int64_t i = 0; i < count; ++i) {
      if (auto bad = check(i)) return bad;
    }
    return std::nullopt;
  }
  std::atomic<std::int64_t> next{0};
  std::mutex mu;
  std::optional<Counterexample> first;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      while (true) {
        const std::int64_t i = next.fetch_add(1);
        if (i >= count) return;
        if (auto bad = check(i)) {
          std::lock_guard<std::mutex> lock(mu);
          if (!first || bad->index < first->index) first = bad;
        }
      }
    });
  }
  for (std::thread& th : pool) th.join();
  return first;
}

void run_selftest(const SelftestArgs& args) {
  if (args.exhaustive_bits < 1 || args.exhaustive_bits > 4) {
    throw RangeError("--exhaustive-bits must be in [1, 4]");
  }
  if (args.random_cases < 0) throw RangeError("--random-cases must be >= 0");
  if (args.threads < 1) throw RangeError("--threads must be >= 1");

  std::int64_t total = 0;
  const std::int64_t unsigned_cases =
      run_exhaustive_blocks(args.exhaustive_bits, false);
  total += unsigned_cases;
  std::int64_t signed_cases = 0;
  if (args.exhaustive_bits >= 2) {
    signed_cases = run_exhaustive_blocks(args.exhaustive_bits, true);
    total += signed_cases;
  }
  std::cout << "exhaustive conv_block: " << unsigned_cases << " unsigned + "
            << signed_cases << " signed cases ok\n";

  const std::int64_t conv1d_cases = args.random_cases;
  if (auto bad = run_cases(conv1d_cases, args.threads, [&](std::int64_t i) {
        return check_conv1d_case(args.seed, i);
      })) {
    std::cout << "counterexample (case " << bad->index << "):\n"
              << bad->text << "\n";
    throw EquivalenceFailure("selftest failed in random conv1d cases");
  }
  std::cout << "random conv1d: " << conv1d_cases << " cases ok\n";
  total += conv1d_cases;

  const std::int64_t conv2d_cases = std::max<std::int64_t>(
      args.random_cases == 0 ? 0 : 1, args.random_cases / 50);
  if (auto bad = run_cases(conv2d_cases, args.threads, [&](std::int64_t i) {
        return check_conv2d_case(args.seed, i);
      })) {
    std::cout << "counterexample (case " << bad->index << "):\n"
              << bad->text << "\n";
    throw EquivalenceFailure("selftest failed in random conv2d cases");
  }
  std::cout << "random conv2d: " << conv2d_cases << " cases ok\n";
  total += conv2d_cases;

  std::cout << "selftest passed (" << total << " cases)\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "hikonv: several low-bitwidth convolution outputs per wide integer "
      "multiplication"};
  app.require_subcommand(1);

  SearchArgs search_args;
  CLI::App* search = app.add_subcommand(
      "search", "Find the throughput-optimal packing for one geometry");
  search->add_option("--bit-a", search_args.bit_a, "Operand A width (bits)");
  search->add_option("--bit-b", search_args.bit_b, "Operand B width (bits)");
  search->add_option("--p", search_args.p, "Element bitwidth of f");
  search->add_option("--q", search_args.q, "Element bitwidth of g");
  search->add_option("--mode", search_args.mode,
                     "Guard-bit context: single, conv1d, or dnn");
  search->add_option("--m", search_args.m, "Channel group size (dnn mode)");
  search->add_flag("--signed", search_args.is_signed, "Signed elements");
  search->callback([&] { run_search(search_args); });

  TableArgs table_args;
  CLI::App* table = app.add_subcommand(
      "table", "CSV of optimal packings over bitwidth ranges");
  table->add_option("--bit-a", table_args.bit_a, "Operand A width (bits)");
  table->add_option("--bit-b", table_args.bit_b, "Operand B width (bits)");
  table->add_option("--p-min", table_args.p_min, "Smallest p");
  table->add_option("--p-max", table_args.p_max, "Largest p");
  table->add_option("--q-min", table_args.q_min, "Smallest q");
  table->add_option("--q-max", table_args.q_max, "Largest q");
  table->add_option("--mode", table_args.mode,
                    "Guard-bit context: single, conv1d, or dnn");
  table->add_option("--m", table_args.m, "Channel group size (dnn mode)");
  table->add_option("--out", table_args.out, "Output file (default stdout)");
  table->callback([&] { run_table(table_args); });

  Conv1dArgs conv1d_args;
  CLI::App* conv1d_cmd = app.add_subcommand(
      "conv1d", "1-D convolution of two QTSR sequences");
  conv1d_cmd->add_option("--input", conv1d_args.input, "Input QTSR file")
      ->required();
  conv1d_cmd->add_option("--kernel", conv1d_args.kernel, "Kernel QTSR file")
      ->required();
  conv1d_cmd->add_option("--out", conv1d_args.out, "Output QTSR file")
      ->required();
  conv1d_cmd->add_option("--bit-a", conv1d_args.bit_a, "Operand A width");
  conv1d_cmd->add_option("--bit-b", conv1d_args.bit_b, "Operand B width");
  conv1d_cmd->add_flag("--naive", conv1d_args.naive,
                       "Use the reference path instead of packing");
  conv1d_cmd->add_flag("--verify", conv1d_args.verify,
                       "Run both paths and require equality");
  conv1d_cmd->callback([&] { run_conv1d(conv1d_args); });

  Conv2dArgs conv2d_args;
  CLI::App* conv2d_cmd = app.add_subcommand(
      "conv2d", "2-D convolution layer over QTSR tensors");
  conv2d_cmd->add_option("--input", conv2d_args.input,
                         "Input QTSR file (C,H,W)")
      ->required();
  conv2d_cmd->add_option("--kernel,--weights", conv2d_args.weights,
                         "Weight QTSR file (Co,Ci,K,K)")
      ->required();
  conv2d_cmd->add_option("--out", conv2d_args.out, "Output QTSR file")
      ->required();
  conv2d_cmd->add_option("--bit-a", conv2d_args.bit_a, "Operand A width");
  conv2d_cmd->add_option("--bit-b", conv2d_args.bit_b, "Operand B width");
  conv2d_cmd->add_option("--m", conv2d_args.m,
                         "Channel group size (0 = largest feasible)");
  conv2d_cmd->add_flag("--naive", conv2d_args.naive,
                       "Use the reference path instead of packing");
  conv2d_cmd->add_flag("--verify", conv2d_args.verify,
                       "Run both paths and require equality");
  conv2d_cmd->callback([&] { run_conv2d(conv2d_args); });

  BenchArgs bench_args;
  CLI::App* bench = app.add_subcommand(
      "bench", "Median-latency comparison of both paths (CSV)");
  // Frees the short -h so --h can name the input height.
  bench->set_help_flag("--help", "Print this help message and exit");
  bench->add_option("--scenario", bench_args.scenario, "conv1d or conv2d");
  bench->add_option("--len", bench_args.len, "Input length (conv1d)");
  bench->add_option("--k", bench_args.k_len, "Kernel taps / kernel size");
  bench->add_option("--ci", bench_args.ci, "Input channels (conv2d)");
  bench->add_option("--co", bench_args.co, "Output channels (conv2d)");
  bench->add_option("--h", bench_args.height, "Input height (conv2d)");
  bench->add_option("--w", bench_args.width, "Input width (conv2d)");
  bench->add_option("--p", bench_args.p, "Element bitwidth of f");
  bench->add_option("--q", bench_args.q, "Element bitwidth of g");
  bench->add_flag("--signed", bench_args.is_signed, "Signed elements");
  bench->add_option("--iters", bench_args.iters, "Timed repetitions");
  bench->add_option("--warmup", bench_args.warmup, "Warmup repetitions");
  bench->add_option("--bit-a", bench_args.bit_a, "Operand A width");
  bench->add_option("--bit-b", bench_args.bit_b, "Operand B width");
  bench->add_option("--m", bench_args.m,
                    "Channel group size (0 = largest feasible)");
  bench->add_option("--seed", bench_args.seed, "Input generator seed");
  bench->add_option("--out", bench_args.out, "Output file (default stdout)");
  bench->callback([&] { run_bench_cmd(bench_args); });

  SelftestArgs selftest_args;
  CLI::App* selftest = app.add_subcommand(
      "selftest", "Exhaustive and randomized equivalence suites");
  selftest->add_option("--exhaustive-bits", selftest_args.exhaustive_bits,
                       "Bitwidth of the exhaustive block sweep");
  selftest->add_option("--random-cases", selftest_args.random_cases,
                       "Randomized conv1d case count");
  selftest->add_option("--seed", selftest_args.seed, "Case generator seed");
  selftest->add_option("--threads", selftest_args.threads,
                       "Worker threads for independent cases");
  selftest->callback([&] { run_selftest(selftest_args); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const EquivalenceFailure& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
