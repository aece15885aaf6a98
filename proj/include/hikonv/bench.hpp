#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace hikonv {

// One measured scenario.  Times are medians over the timed repetitions;
// speedup and mult_ratio are naive over packed.
struct BenchRecord {
  std::string scenario;  // "conv1d" or "conv2d"
  int p = 0;
  int q = 0;
  std::string shape;  // e.g. "L65536xK3" or "Ci16xCo16xH12xW12xK3"
  bool is_signed = false;
  std::int64_t naive_ns = 0;
  std::int64_t hikonv_ns = 0;
  std::uint64_t naive_mults = 0;
  std::uint64_t hikonv_wide_mults = 0;
  double speedup = 0.0;
  double mult_ratio = 0.0;
};

// Scenario description.  Geometry defaults to a 32x32 multiplier; m == 0
// requests the default channel group for conv2d.
struct BenchSpec {
  std::string scenario = "conv1d";
  int len = 0;     // conv1d input length
  int k_len = 0;   // kernel taps (conv1d) / square kernel size (conv2d)
  int ci = 0;      // conv2d input channels
  int co = 0;      // conv2d output channels
  int height = 0;  // conv2d input height
  int width = 0;   // conv2d input width
  int p = 4;
  int q = 4;
  bool is_signed = false;
  int iters = 30;
  int warmup = 5;
  int bit_a = 32;
  int bit_b = 32;
  int m = 0;
  std::uint64_t seed = 42;
  // Test seam: corrupts one packed-path output before the equivalence gate,
  // to prove the gate refuses to time wrong results.
  bool fault_inject = false;
};

// Generates pseudo-random inputs from the seed, runs warmup + iters timed
// repetitions of the reference and packed paths on those same inputs, and
// verifies output equality on every repetition before its timing is
// accepted; a mismatch raises EquivalenceFailure.  Deterministic in
// everything except wall-clock fields.
BenchRecord run_bench(const BenchSpec& spec);

// CSV with header
// scenario,p,q,shape,signed,naive_ns,hikonv_ns,naive_mults,hikonv_wide_mults,speedup,mult_ratio
// and ratios formatted to 4 decimal places.  Requires nonempty records.
std::string emit_csv(const std::vector<BenchRecord>& records);

}  // namespace hikonv
