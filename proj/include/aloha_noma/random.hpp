#pragma once

#include <cstdint>
#include <random>

namespace aloha_noma {

/// Seeded random source used by every stochastic routine in the library.
///
/// The bit stream comes from std::mt19937_64, whose output sequence is fixed
/// by the C++ standard. All derived variates (uniform, exponential, normal,
/// bounded integers) are produced by the transforms in this class rather than
/// by <random> distributions, whose algorithms are implementation-defined.
/// Identical seeds therefore give identical variates on every conforming
/// platform that rounds IEEE-754 doubles the same way.
class Rng
{
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    // Uniform on [0, 1) with 53 random bits.
    double uniform();

    // Exponential with the given rate, by inversion.
    double exponential(double rate);

    // Normal(mean, sigma^2) via the Box-Muller transform; the second variate
    // of each pair is cached.
    double normal(double mean, double sigma);

    // Uniform integer in [lo, hi] by rejection sampling (no modulo bias).
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

    bool bernoulli(double p) { return uniform() < p; }

    std::uint64_t next_u64() { return engine_(); }

  private:
    std::mt19937_64 engine_;
    double cached_normal_ = 0.0;
    bool has_cached_ = false;
};

// Mixes a base seed with a stream index so that sub-streams do not overlap
// in practice (splitmix64 finalizer).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

} // namespace aloha_noma
