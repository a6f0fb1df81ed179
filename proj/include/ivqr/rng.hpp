#pragma once

#include <cstdint>
#include <random>

namespace ivqr {

// Counter-based replication seeding: the stream for replication r is a pure
// function of (master_seed, r), so Monte Carlo results do not depend on how
// replications are scheduled across threads.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

inline std::uint64_t replication_seed(std::uint64_t master_seed, std::uint64_t replication) {
    return splitmix64(splitmix64(master_seed) ^ splitmix64(replication + 0x632BE59BD9B4E019ull));
}

// mt19937_64 with a fixed uniform mapping; std::uniform_real_distribution is
// implementation-defined, so we draw bits directly.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    // strictly inside (0,1)
    double uniform() {
        const std::uint64_t bits = gen_() >> 11;  // 53 bits
        return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
    }

    std::uint64_t bits() { return gen_(); }

private:
    std::mt19937_64 gen_;
};

}  // namespace ivqr
