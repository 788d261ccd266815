#include "bed/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace bed {

std::uint64_t mix_u64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

RngStream::RngStream(std::uint64_t seed) : seed_(seed), engine_(mix_u64(seed)) {}

RngStream RngStream::derive(std::uint64_t key) const {
  return RngStream(mix_u64(seed_ ^ mix_u64(key + 0x632BE59BD9B4E019ULL)));
}

std::uint64_t RngStream::next_u64() { return engine_(); }

double RngStream::uniform01() {
  // 53-bit mantissa, offset by half an ulp so the result is in (0,1) strictly.
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double RngStream::uniform(double lo, double hi) {
  return lo + (hi - lo) * uniform01();
}

double RngStream::normal() {
  const double u1 = uniform01();
  const double u2 = uniform01();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
}

double RngStream::normal(double mean, double stddev) {
  return mean + stddev * normal();
}

long RngStream::binomial(long n, double p) {
  if (n < 0 || p < 0.0 || p > 1.0 || !std::isfinite(p)) {
    throw std::invalid_argument("binomial: need n >= 0 and p in [0,1]");
  }
  if (n == 0 || p == 0.0) return 0;
  if (p == 1.0) return n;
  // Work with q = min(p, 1-p) and flip at the end; keeps the walk short.
  const bool flipped = p > 0.5;
  const double q = flipped ? 1.0 - p : p;
  const double u = uniform01();
  const double logq1 = std::log1p(-q);
  double pmf = std::exp(static_cast<double>(n) * logq1);  // P(X = 0)
  double cdf = pmf;
  long k = 0;
  const double ratio = q / (1.0 - q);
  while (u > cdf && k < n) {
    pmf *= ratio * static_cast<double>(n - k) / static_cast<double>(k + 1);
    ++k;
    cdf += pmf;
  }
  return flipped ? n - k : k;
}

std::size_t RngStream::categorical(const double* weights, std::size_t count, double total) {
  const double u = uniform01() * total;
  double acc = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    acc += weights[i];
    if (u <= acc) return i;
  }
  return count - 1;  // guard against round-off at the top end
}

}  // namespace bed
