#pragma once

#include <cstdint>

namespace dkwm {

// 64-bit finalizer with full avalanche (the splitmix64 mixer).
inline std::uint64_t mix64(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ull;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

// Counter-based generator: every output is a pure function of
// (seed, stream, counter). Replicate streams can therefore be created on
// any thread, in any order, and still produce identical draws, which is
// what makes simulation results independent of scheduling.
class CounterRng {
public:
    CounterRng(std::uint64_t seed, std::uint64_t stream)
        : key_(mix64(seed + 0x9E3779B97F4A7C15ull) ^
               mix64(stream * 0xD1342543DE82EF95ull + 0x2545F4914F6CDD1Dull)) {}

    std::uint64_t next_u64() { return mix64(key_ + (++counter_) * 0x9E3779B97F4A7C15ull); }

    // Uniform on [0,1): the top 53 bits scaled by 2^-53.
    double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

}  // namespace dkwm
