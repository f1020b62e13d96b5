#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace spikefit {

// Seedable, splittable generator. The engine is std::mt19937_64, whose output
// sequence is fixed by the standard; uniforms and normals are derived here
// rather than through std::*_distribution so that streams are reproducible
// across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  // Independent child stream; the parent is not advanced.
  Rng split(std::uint64_t stream) const;

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  // Standard normal via the Marsaglia polar method; the spare value is cached.
  double normal();
  // Exp(1) by inversion.
  double exponential();
  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);
  // Index drawn with probability proportional to weights[i] (weights >= 0, sum > 0).
  std::size_t categorical(std::span<const double> weights);

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// SplitMix64 finalizer; used to derive child seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace spikefit
