#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace ccae {

/// SplitMix64 finalizer. Used to derive independent seeds from (seed, stream).
std::uint64_t splitmix64(std::uint64_t x);

/// 64-bit FNV-1a hash of a byte string.
std::uint64_t fnv1a64(std::string_view bytes);

/// Random number generator used by every stochastic stage.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the C++
/// standard. All conversions (uniform doubles, bounded integers, normals) are
/// implemented here rather than through <random> distributions, whose
/// algorithms are implementation-defined. Results are therefore bit-identical
/// across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  /// Generator for sub-stream `stream` of `seed`. Streams with different ids
  /// are statistically independent and do not depend on call order.
  static Rng derive(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi);

  /// Uniform integer in [0, n). Rejection sampling, no modulo bias. n > 0.
  std::uint64_t index(std::uint64_t n);

  /// Standard normal via the Box-Muller transform (pairs are cached).
  double normal();

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace ccae
