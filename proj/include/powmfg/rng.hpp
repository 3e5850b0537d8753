#pragma once

#include <cstdint>

namespace powmfg {

// Counter-based random stream: every draw is a pure hash of
// (seed, stream, step, draw index), so results do not depend on scheduling
// or worker count.
struct CounterRng {
    std::uint64_t seed = 0;

    static std::uint64_t mix(std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t bits(std::uint64_t stream, std::uint64_t step,
                       std::uint64_t draw) const {
        std::uint64_t h = mix(seed ^ 0x6a09e667f3bcc908ULL);
        h = mix(h ^ stream);
        h = mix(h ^ step);
        h = mix(h ^ draw);
        return h;
    }

    // Uniform on (0, 1]; never returns zero so logs stay finite.
    double uniform(std::uint64_t stream, std::uint64_t step,
                   std::uint64_t draw) const {
        return (static_cast<double>(bits(stream, step, draw) >> 11) + 1.0) *
               0x1.0p-53;
    }

    // Standard normal via Box-Muller from two counter draws.
    double normal(std::uint64_t stream, std::uint64_t step,
                  std::uint64_t draw) const;
};

}  // namespace powmfg
