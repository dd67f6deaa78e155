#pragma once

#include <cstdint>
#include <random>

#include "dhgreg/common.hpp"

namespace dhg {

// splitmix64; used to derive independent stream seeds from one run seed.
inline uint64_t splitmix64(uint64_t& state) {
  uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// mt19937_64 with hand-rolled distributions so sequences are identical
// across standard library implementations.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  uint64_t next_u64() { return engine_(); }

  // uniform in [0, 1)
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // uniform integer in [0, n)
  uint64_t uniform_int(uint64_t n) {
    // modulo bias negligible for n << 2^64 (all our uses)
    return engine_() % n;
  }

  // inclusive range
  int64_t uniform_range(int64_t lo, int64_t hi) {
    return lo + static_cast<int64_t>(uniform_int(static_cast<uint64_t>(hi - lo + 1)));
  }

  bool bernoulli(double p) { return uniform() < p; }

  // Box-Muller with cached second value
  double normal() {
    if (has_cached_) {
      has_cached_ = false;
      return cached_;
    }
    double u1 = uniform();
    double u2 = uniform();
    while (u1 <= 1e-300) u1 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586476925286766559 * u2;
    cached_ = r * std::sin(a);
    has_cached_ = true;
    return r * std::cos(a);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  // derived independent stream
  Rng fork(uint64_t tag) const {
    uint64_t s = seed_mix_ ^ (tag * 0x9e3779b97f4a7c15ULL);
    return Rng(splitmix64(s));
  }

  explicit Rng(uint64_t seed, uint64_t mix) : engine_(seed), seed_mix_(mix) {}

 private:
  std::mt19937_64 engine_;
  uint64_t seed_mix_ = 0;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

// Canonical way to build the per-purpose streams of one run.
inline Rng make_stream(uint64_t run_seed, uint64_t purpose_tag) {
  uint64_t s = run_seed;
  uint64_t a = splitmix64(s);
  uint64_t t = purpose_tag;
  uint64_t b = splitmix64(t);
  uint64_t mixed = a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
  return Rng(mixed, mixed);
}

}  // namespace dhg
