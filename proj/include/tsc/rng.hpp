#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace tsc {

// Deterministic random source.  std::mt19937_64 has a fully specified output
// sequence, but the standard <random> distributions do not — their mapping
// from raw bits to variates is implementation-defined.  Training runs must be
// byte-reproducible for a fixed seed, so the variate transforms live here and
// are part of this project's contract.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), gen_(seed) {}

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1) with 53 random mantissa bits.
  double u01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  // Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * u01(); }

  // Standard normal via Box-Muller.  The spare value is cached, so draws come
  // in a fixed order regardless of how callers interleave other requests.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    // 1 - u01() keeps the log argument strictly positive.
    double r = std::sqrt(-2.0 * std::log(1.0 - u01()));
    double t = 6.283185307179586476925286766559 * u01();
    spare_ = r * std::sin(t);
    have_spare_ = true;
    return r * std::cos(t);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  // Uniform integer in [0, n), unbiased via rejection.
  std::uint64_t uniform_int(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = gen_();
    } while (x >= limit);
    return x % n;
  }

  // Index draw from non-negative weights (cumulative scan).  Total weight must
  // be positive; callers guard the all-zero case.
  std::size_t weighted_index(const std::vector<double>& weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    double u = u01() * total;
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
      acc += weights[i];
      if (u < acc) return i;
    }
    return weights.empty() ? 0 : weights.size() - 1;
  }

  // Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(uniform_int(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  // Derived stream for a sub-task (worker, epoch, ...).  Streams with distinct
  // ids are decorrelated from each other and from the parent via splitmix64.
  Rng fork(std::uint64_t stream_id) const {
    std::uint64_t z = seed_ + 0x9e3779b97f4a7c15ULL * (stream_id + 1);
    z = splitmix64(z);
    z = splitmix64(z);
    return Rng(z);
  }

 private:
  static std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t seed_;
  std::mt19937_64 gen_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace tsc
