#include "hikonv/bench.hpp"

#include <algorithm>
#include <chrono>
#include <functional>
#include <random>
#include <sstream>

#include "hikonv/errors.hpp"
#include "hikonv/kernel.hpp"
#include "hikonv/oracle.hpp"

namespace hikonv {

namespace {

using Clock = std::chrono::steady_clock;

std::int64_t median_ns(std::vector<std::int64_t> samples) {
  std::sort(samples.begin(), samples.end());
  const std::size_t mid = samples.size() / 2;
  if (samples.size() % 2 == 1) return samples[mid];
  return (samples[mid - 1] + samples[mid]) / 2;
}

std::vector<std::int64_t> random_values(std::mt19937_64& rng, std::size_t count,
                                        int bitwidth, bool is_signed) {
  std::uniform_int_distribution<std::int64_t> dist(
      min_value(bitwidth, is_signed), max_value(bitwidth, is_signed));
  std::vector<std::int64_t> out(count);
  for (std::int64_t& v : out) v = dist(rng);
  return out;
}

struct Measurement {
  std::int64_t naive_ns = 0;
  std::int64_t hikonv_ns = 0;
};

// Runs both paths once per repetition, gating on exact equality before the
// repetition's timing is accepted.
template <typename Naive, typename Packed, typename Equal>
Measurement measure(int warmup, int iters, Naive&& run_naive,
                    Packed&& run_packed, Equal&& equal) {
  for (int i = 0; i < warmup; ++i) {
    if (!equal(run_naive(), run_packed())) {
      throw EquivalenceFailure(
          "packed path disagrees with the reference during warmup");
    }
  }
  std::vector<std::int64_t> naive_ns;
  std::vector<std::int64_t> packed_ns;
  naive_ns.reserve(static_cast<std::size_t>(iters));
  packed_ns.reserve(static_cast<std::size_t>(iters));
  for (int i = 0; i < iters; ++i) {
    const auto t0 = Clock::now();
    auto ref = run_naive();
    const auto t1 = Clock::now();
    auto fast = run_packed();
    const auto t2 = Clock::now();
    if (!equal(ref, fast)) {
      throw EquivalenceFailure(
          "packed path disagrees with the reference; timing rejected");
    }
    naive_ns.push_back(
        std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count());
    packed_ns.push_back(
        std::chrono::duration_cast<std::chrono::nanoseconds>(t2 - t1).count());
  }
  return Measurement{median_ns(std::move(naive_ns)),
                     median_ns(std::move(packed_ns))};
}

void validate_spec(const BenchSpec& spec) {
  if (spec.iters < 1) throw RangeError("iters must be >= 1");
  if (spec.warmup < 0) throw RangeError("warmup must be >= 0");
  if (spec.is_signed && (spec.p < 2 || spec.q < 2)) {
    throw RangeError("signed scenarios need p, q >= 2");
  }
}

BenchRecord bench_conv1d(const BenchSpec& spec) {
  if (spec.len < 1 || spec.k_len < 1) {
    throw RangeError("conv1d scenarios need len >= 1 and k >= 1");
  }
  std::mt19937_64 rng(spec.seed);
  QuantSeq f{random_values(rng, static_cast<std::size_t>(spec.len), spec.p,
                           spec.is_signed),
             spec.p, spec.is_signed};
  QuantSeq g{random_values(rng, static_cast<std::size_t>(spec.k_len), spec.q,
                           spec.is_signed),
             spec.q, spec.is_signed};
  const HiKonvConfig cfg = search_optimal(spec.bit_a, spec.bit_b, spec.p,
                                          spec.q, ConvMode::conv1d(),
                                          spec.is_signed);

  ConvCounters counters;
  Conv1dOptions opts;
  opts.counters = &counters;
  std::vector<std::int64_t> once = conv1d(f, g, cfg, opts);  // count mults
  const std::uint64_t wide_mults = counters.wide_mults;

  bool first_packed_run = true;
  const Measurement m = measure(
      spec.warmup, spec.iters, [&] { return naive_conv1d(f, g); },
      [&] {
        std::vector<std::int64_t> out = conv1d(f, g, cfg);
        if (spec.fault_inject && first_packed_run && !out.empty()) {
          first_packed_run = false;
          out[0] ^= 1;
        }
        return out;
      },
      [](const std::vector<std::int64_t>& a,
         const std::vector<std::int64_t>& b) { return a == b; });

  BenchRecord rec;
  rec.scenario = "conv1d";
  rec.p = spec.p;
  rec.q = spec.q;
  {
    std::ostringstream shape;
    shape << "L" << spec.len << "xK" << spec.k_len;
    rec.shape = shape.str();
  }
  rec.is_signed = spec.is_signed;
  rec.naive_ns = m.naive_ns;
  rec.hikonv_ns = m.hikonv_ns;
  rec.naive_mults = static_cast<std::uint64_t>(spec.len) *
                    static_cast<std::uint64_t>(spec.k_len);
  rec.hikonv_wide_mults = wide_mults;
  rec.speedup = m.hikonv_ns > 0
                    ? static_cast<double>(m.naive_ns) /
                          static_cast<double>(m.hikonv_ns)
                    : 0.0;
  rec.mult_ratio = static_cast<double>(rec.naive_mults) /
                   static_cast<double>(rec.hikonv_wide_mults);
  (void)once;
  return rec;
}

BenchRecord bench_conv2d(const BenchSpec& spec) {
  if (spec.ci < 1 || spec.co < 1 || spec.height < 1 || spec.width < 1 ||
      spec.k_len < 1) {
    throw RangeError("conv2d scenarios need ci, co, h, w, k >= 1");
  }
  if (spec.k_len > spec.height || spec.k_len > spec.width) {
    throw RangeError("kernel larger than input plane");
  }
  std::mt19937_64 rng(spec.seed);
  Tensor3 input;
  input.channels = spec.ci;
  input.height = spec.height;
  input.width = spec.width;
  input.bitwidth = spec.p;
  input.is_signed = spec.is_signed;
  input.data = random_values(
      rng, static_cast<std::size_t>(spec.ci) * spec.height * spec.width,
      spec.p, spec.is_signed);
  Tensor4 weights;
  weights.out_channels = spec.co;
  weights.in_channels = spec.ci;
  weights.ksize = spec.k_len;
  weights.bitwidth = spec.q;
  weights.is_signed = spec.is_signed;
  weights.data = random_values(
      rng,
      static_cast<std::size_t>(spec.co) * spec.ci * spec.k_len * spec.k_len,
      spec.q, spec.is_signed);

  const int m_group =
      spec.m > 0 ? spec.m
                 : default_channel_group(spec.bit_a, spec.bit_b, spec.p,
                                         spec.q, spec.ci, spec.is_signed);
  const HiKonvConfig cfg =
      search_optimal(spec.bit_a, spec.bit_b, spec.p, spec.q,
                     ConvMode::dnn_layer(m_group), spec.is_signed);

  ConvCounters counters;
  Conv2dOptions opts;
  opts.counters = &counters;
  Tensor3 once = conv2d_layer(input, weights, cfg, opts);
  const std::uint64_t wide_mults = counters.wide_mults;

  bool first_packed_run = true;
  const Measurement m = measure(
      spec.warmup, spec.iters, [&] { return naive_conv2d(input, weights); },
      [&] {
        Tensor3 out = conv2d_layer(input, weights, cfg);
        if (spec.fault_inject && first_packed_run && !out.data.empty()) {
          first_packed_run = false;
          out.data[0] ^= 1;
        }
        return out;
      },
      [](const Tensor3& a, const Tensor3& b) { return a.data == b.data; });

  const int h_out = spec.height - spec.k_len + 1;
  const int w_out = spec.width - spec.k_len + 1;
  BenchRecord rec;
  rec.scenario = "conv2d";
  rec.p = spec.p;
  rec.q = spec.q;
  {
    std::ostringstream shape;
    shape << "Ci" << spec.ci << "xCo" << spec.co << "xH" << spec.height << "xW"
          << spec.width << "xK" << spec.k_len;
    rec.shape = shape.str();
  }
  rec.is_signed = spec.is_signed;
  rec.naive_ns = m.naive_ns;
  rec.hikonv_ns = m.hikonv_ns;
  rec.naive_mults = static_cast<std::uint64_t>(spec.co) * h_out * w_out *
                    spec.ci * spec.k_len * spec.k_len;
  rec.hikonv_wide_mults = wide_mults;
  rec.speedup = m.hikonv_ns > 0
                    ? static_cast<double>(m.naive_ns) /
                          static_cast<double>(m.hikonv_ns)
                    : 0.0;
  rec.mult_ratio = static_cast<double>(rec.naive_mults) /
                   static_cast<double>(rec.hikonv_wide_mults);
  (void)once;
  return rec;
}

}  // namespace

BenchRecord run_bench(const BenchSpec& spec) {
  validate_spec(spec);
  if (spec.scenario == "conv1d") return bench_conv1d(spec);
  if (spec.scenario == "conv2d") return bench_conv2d(spec);
  throw RangeError("unknown scenario: " + spec.scenario);
}

std::string emit_csv(const std::vector<BenchRecord>& records) {
  if (records.empty()) {
    throw RangeError("emit_csv requires at least one record");
  }
  std::ostringstream out;
  out << "scenario,p,q,shape,signed,naive_ns,hikonv_ns,naive_mults,"
         "hikonv_wide_mults,speedup,mult_ratio\n";
  out.setf(std::ios::fixed);
  out.precision(4);
  for (const BenchRecord& rec : records) {
    out << rec.scenario << ',' << rec.p << ',' << rec.q << ',' << rec.shape
        << ',' << (rec.is_signed ? 1 : 0) << ',' << rec.naive_ns << ','
        << rec.hikonv_ns << ',' << rec.naive_mults << ','
        << rec.hikonv_wide_mults << ',' << rec.speedup << ','
        << rec.mult_ratio << '\n';
  }
  return out.str();
}

}  // namespace hikonv
