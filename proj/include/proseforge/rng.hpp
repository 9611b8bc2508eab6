#pragma once

#include <cstdint>
#include <random>

namespace proseforge {

// Seeded generator with hand-rolled uniform conversion. std::*_distribution
// is implementation-defined, so drawing bits directly keeps runs reproducible
// across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    // [0, 1)
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform();
    }

    // [0, n)
    int below(int n) {
        return static_cast<int>(next_u64() % static_cast<std::uint64_t>(n));
    }

private:
    std::mt19937_64 gen_;
};

} // namespace proseforge
