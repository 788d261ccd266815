#pragma once

#include <cstdint>
#include <random>

namespace bed {

/// Seeded random stream with hierarchical substream derivation.
///
/// Every randomised operation in the library takes an explicit RngStream, and
/// substreams for independent work items (one per prior sample, one per grid
/// point, ...) are derived up front from the parent seed and a key. Derivation
/// depends only on the construction seed, never on draw history, so the
/// assignment of randomness to work items is independent of evaluation order.
///
/// All distributions are implemented on top of the mt19937_64 bit stream,
/// which the standard specifies exactly; equal seeds give bit-identical
/// results on any conforming platform.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed);

  /// Child stream for work item `key`. Pure function of (seed, key).
  RngStream derive(std::uint64_t key) const;

  std::uint64_t next_u64();

  /// Uniform on the open interval (0, 1); never returns 0 or 1.
  double uniform01();

  /// Uniform on [lo, hi).
  double uniform(double lo, double hi);

  /// Standard normal via Box-Muller (two uniforms per draw, no cached spare).
  double normal();

  double normal(double mean, double stddev);

  /// Exact binomial draw by CDF inversion. O(n*p) expected time, which is
  /// cheap for the epidemic models here (n <= population).
  long binomial(long n, double p);

  /// Index draw from unnormalised non-negative weights (linear scan).
  std::size_t categorical(const double* weights, std::size_t count, double total);

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

/// SplitMix64 finalising mix; used for seed derivation.
std::uint64_t mix_u64(std::uint64_t x);

}  // namespace bed
