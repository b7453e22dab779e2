#pragma once

#include <cmath>
#include <cstdint>

#include "lapai/common.hpp"

namespace lapai {

// SplitMix64: tiny, well-mixed generator used both directly and to derive
// independent substreams from (seed, stream) pairs. Owning the generator and
// the normal transform keeps every noise byte identical across platforms,
// standard libraries, and thread counts.
struct SplitMix64 {
    std::uint64_t state = 0;

    explicit SplitMix64(std::uint64_t seed) : state(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform in (0, 1]: never returns 0 so log() below is safe.
    double next_unit() {
        return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    }
};

// Substream for one noise channel: decorrelated from neighbours by mixing the
// stream id through an extra SplitMix64 round before seeding.
inline SplitMix64 substream(std::uint64_t seed, std::uint64_t stream) {
    SplitMix64 mixer(seed ^ (0xd1b54a32d192ed03ULL * (stream + 1)));
    return SplitMix64(mixer.next_u64());
}

// Box-Muller without state caching: one normal per call, two uniforms burned.
inline double next_gaussian(SplitMix64& rng) {
    const double u1 = rng.next_unit();
    const double u2 = rng.next_unit();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
}

}  // namespace lapai
