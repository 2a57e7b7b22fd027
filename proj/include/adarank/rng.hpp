#pragma once

#include <cstdint>

namespace adarank {

// xoshiro256** (Blackman & Vigna) seeded through splitmix64. Normals come
// from the Marsaglia polar method, which needs only log and sqrt. This
// algorithm is fixed: changing it changes every recorded experiment.
//
// Single owner. Do not share one instance between threads.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0);

  std::uint64_t seed() const { return seed_; }
  void reset() { *this = Rng(seed_); }

  std::uint64_t next_u64();
  // Uniform in [0, 1) with 53 random bits.
  double uniform();
  // Uniform integer in [0, n). n must be positive.
  std::uint64_t uniform_index(std::uint64_t n);
  double normal();

  // Independent stream derived from this generator's seed and `stream`.
  Rng fork(std::uint64_t stream) const;

 private:
  std::uint64_t seed_;
  std::uint64_t s_[4];
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace adarank
