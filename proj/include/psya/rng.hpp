#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace psya {

/// Seeded generator with platform-independent draws.
///
/// std:: distributions are implementation-defined, so every draw here is
/// derived directly from mt19937_64 output bits. Two processes on different
/// standard libraries produce the same sequence for the same seed.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0x5eedULL) : seed_(seed), engine_(seed) {}

    std::uint64_t seed() const noexcept { return seed_; }

    std::uint64_t next() { return engine_(); }

    /// Uniform in [0, 1) with 53 bits of precision.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [lo, hi] (inclusive). Rejection sampling avoids modulo bias.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

    bool bernoulli(double p) { return uniform() < p; }

    /// Independent child stream; same (seed, stream) always yields the same child.
    Rng fork(std::uint64_t stream) const { return Rng(mix(seed_ ^ mix(stream + 0x9e3779b97f4a7c15ULL))); }

    /// Engine state as text, for checkpoints.
    std::string save_state() const;
    void load_state(const std::string& state);

    static std::uint64_t mix(std::uint64_t x) noexcept {
        // splitmix64 finalizer
        x += 0x9e3779b97f4a7c15ULL;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

}  // namespace psya
