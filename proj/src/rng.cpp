#include "mmt/rng.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "mmt/error.hpp"

namespace mmt {

std::uint64_t Rng::uniform_int(std::uint64_t n) {
    if (n == 0) throw ArgumentError("uniform_int: n must be positive");
    constexpr std::uint64_t kMax = std::numeric_limits<std::uint64_t>::max();
    // accept only below the largest multiple of n, keeping the result unbiased
    const std::uint64_t limit = kMax - kMax % n;
    for (;;) {
        const std::uint64_t r = next_u64();
        if (r < limit) return r % n;
    }
}

double Rng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
}

double Rng::truncated_normal(double stddev, double clip) {
    for (;;) {
        const double x = normal() * stddev;
        if (std::abs(x) <= clip * stddev) return x;
    }
}

Rng Rng::fork(std::uint64_t stream_id) const {
    // splitmix64 finalizer over (seed, stream) keeps forks independent
    std::uint64_t z = seed_ + 0x9e3779b97f4a7c15ULL * (stream_id + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return Rng(z ^ (z >> 31));
}

std::string Rng::serialize_state() const {
    std::ostringstream out;
    out << engine_;
    out << ' ' << (has_spare_ ? 1 : 0) << ' ';
    out.precision(17);
    out << spare_ << ' ' << seed_;
    return out.str();
}

void Rng::restore_state(const std::string& text) {
    std::istringstream in(text);
    int spare_flag = 0;
    in >> engine_ >> spare_flag >> spare_ >> seed_;
    if (!in) throw DataError("rng: malformed serialized state");
    has_spare_ = spare_flag != 0;
}

}  // namespace mmt
