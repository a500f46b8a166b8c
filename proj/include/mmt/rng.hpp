#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace mmt {

// Deterministic random source. All sampling is derived from mt19937_64
// through fixed arithmetic (no std::*_distribution, whose output is
// implementation-defined), so a seed pins every downstream byte.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

    std::uint64_t seed() const { return seed_; }

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1) with 53 random mantissa bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Unbiased integer in [0, n).
    std::uint64_t uniform_int(std::uint64_t n);

    // Standard normal via Box-Muller; the paired value is cached.
    double normal();

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    // Normal(0, stddev) with resampling outside +-clip*stddev.
    double truncated_normal(double stddev, double clip = 2.0);

    // Fork a child stream; mixing keeps sibling streams decorrelated.
    Rng fork(std::uint64_t stream_id) const;

    // State round-trip for checkpoints.
    std::string serialize_state() const;
    void restore_state(const std::string& text);

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace mmt
