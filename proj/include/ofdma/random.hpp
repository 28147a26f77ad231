#pragma once

#include <cstdint>

namespace ofdma::rng {

// SplitMix64. Used instead of std::mt19937 + std::uniform_real_distribution
// because the standard distributions are implementation-defined; this keeps
// scenario draws and therefore every CSV byte-identical across toolchains.
struct SplitMix64 {
    std::uint64_t state = 0;

    explicit SplitMix64(std::uint64_t seed) : state(seed) {}

    std::uint64_t next() {
        state += 0x9E3779B97F4A7C15ull;
        std::uint64_t z = state;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    // Uniform on [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
};

// Derives an independent stream seed from a base seed and a stream index
// (trial number, cell id, ...). Streams are decorrelated by running the
// SplitMix64 output function over the mixed words.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
    SplitMix64 s(base ^ (stream * 0xD6E8FEB86659FD93ull + 0xA5A5A5A5A5A5A5A5ull));
    s.next();
    return s.next();
}

}  // namespace ofdma::rng
