#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace opdyn {

// SplitMix64 finalizer; used to whiten seeds and derive replica streams.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Stream seed for replica r of a run with the given base seed. Distinct
// replicas get decorrelated generators and can run in any order or in
// parallel without changing their draws.
constexpr std::uint64_t replica_seed(std::uint64_t base_seed, std::uint64_t replica) {
  return splitmix64(splitmix64(base_seed) ^ splitmix64(replica + 0x632BE59BD9B4E019ULL));
}

// Deterministic seedable generator: mt19937_64 plus the few draw helpers the
// simulators need. One Rng per simulation thread; never shared.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(splitmix64(seed)) {}

  std::uint64_t bits() { return gen_(); }

  // uniform in [0, 1)
  double u01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  // uniform in (0, 1]
  double u01_pos() { return (static_cast<double>(gen_() >> 11) + 1.0) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * u01(); }

  // exponential holding time with the given rate
  double exponential(double rate) { return -std::log(u01_pos()) / rate; }

  // uniform integer in [0, n); unbiased (rejection)
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t threshold = -n % n;  // 2^64 mod n
    for (;;) {
      const std::uint64_t r = gen_();
      if (r >= threshold) return r % n;
    }
  }

  int below_int(int n) { return static_cast<int>(below(static_cast<std::uint64_t>(n))); }

  bool bernoulli(double p) { return u01() < p; }

  // Poisson count by multiplicative inversion; meant for small means.
  int poisson(double mean) {
    const double limit = std::exp(-mean);
    int k = 0;
    double p = 1.0;
    do {
      ++k;
      p *= u01_pos();
    } while (p > limit);
    return k - 1;
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace opdyn
