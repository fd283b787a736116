#pragma once

#include <cstdint>
#include <vector>

namespace webcolor {

// Deterministic splitmix64-based generator. All randomness in the project
// flows through this class so that results are reproducible across
// compilers and standard library versions (std:: distributions are
// implementation-defined).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64();

  // Uniform in [0, 1).
  double uniform();
  // Uniform in [a, b).
  double uniform(double a, double b);
  // Unbiased integer in [0, n). n must be > 0.
  std::uint64_t below(std::uint64_t n);
  // Standard normal via Box-Muller (one spare cached).
  double normal();
  double normal(double mean, double stddev);

  // Derives an independent stream; identical (seed, stream) pairs yield
  // identical sequences regardless of what the parent generated so far.
  Rng fork(std::uint64_t stream) const;

  // Fisher-Yates shuffle of 0..n-1.
  std::vector<std::size_t> permutation(std::size_t n);

 private:
  std::uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace webcolor
