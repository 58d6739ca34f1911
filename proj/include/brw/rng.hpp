// SPDX-License-Identifier: Apache-2.0
//
// Counter-based splittable random number streams.
//
// Every stream is keyed by (master seed, purpose tag, index) so that work
// partitioned across threads draws from disjoint, reproducible streams no
// matter how the work is scheduled. The generator is a SplitMix64 walk with
// a per-stream odd increment derived from the key, which is the standard
// SplittableRandom construction.

#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

namespace brw {

namespace detail {
// Stafford "Mix13" finalizer; bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t hash_combine(std::uint64_t h, std::uint64_t v) {
  return mix64(h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2)));
}
}  // namespace detail

// Well-known purpose tags. Streams with different tags are independent even
// for the same (seed, index) pair.
enum class StreamKind : std::uint64_t {
  replica = 1,
  w_estimate = 2,
  limit_sample = 3,
  laplace_mc = 4,
  explicit_tree = 5,
  transform = 6,
  generic = 7,
};

class Rng {
 public:
  Rng() : state_(0), gamma_(0x9e3779b97f4a7c15ULL) {}

  // Stream keyed by (seed, purpose, index). Streams with distinct keys are
  // statistically independent.
  static Rng stream(std::uint64_t seed, StreamKind kind, std::uint64_t index) {
    std::uint64_t key = detail::hash_combine(seed, static_cast<std::uint64_t>(kind));
    key = detail::hash_combine(key, index);
    Rng r;
    r.state_ = detail::mix64(key);
    r.gamma_ = detail::mix64(key + 0xd1b54a32d192ed03ULL) | 1ULL;
    return r;
  }

  std::uint64_t next_u64() {
    state_ += gamma_;
    return detail::mix64(state_);
  }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform in (0, 1); safe as argument of log().
  double uniform_pos() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Uniform integer in {0, ..., n-1}. Lemire-style rejection keeps it unbiased.
  std::uint64_t uniform_below(std::uint64_t n) {
    if (n <= 1) return 0;
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
      std::uint64_t r = next_u64();
      __uint128_t m = static_cast<__uint128_t>(r) * n;
      if (static_cast<std::uint64_t>(m) >= threshold)
        return static_cast<std::uint64_t>(m >> 64);
    }
  }

  bool bernoulli(double p) { return uniform() < p; }

  double exponential() { return -std::log(uniform_pos()); }

  // Exact Poisson sample via counting unit-rate exponential arrivals.
  // Cost is O(mean), which is fine for the desk-scale means used here.
  std::int64_t poisson(double mean) {
    std::int64_t k = 0;
    double acc = exponential();
    while (acc <= mean) {
      ++k;
      acc += exponential();
    }
    return k;
  }

  // Index into a cumulative distribution given as partial sums (last entry
  // may fall slightly short of 1 from rounding; the last bucket absorbs it).
  std::size_t categorical_from_cdf(std::span<const double> cdf) {
    const double u = uniform();
    std::size_t lo = 0, hi = cdf.size() - 1;
    while (lo < hi) {
      std::size_t mid = (lo + hi) / 2;
      if (u < cdf[mid])
        hi = mid;
      else
        lo = mid + 1;
    }
    return lo;
  }

 private:
  std::uint64_t state_;
  std::uint64_t gamma_;
};

}  // namespace brw
