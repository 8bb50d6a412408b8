#pragma once

#include <cstdint>
#include <limits>

namespace acisim {

/// Purposes for named stream derivation. The numeric values are part of the
/// reproducibility contract: changing them changes every seeded result.
enum class StreamPurpose : std::uint64_t {
    Arrivals = 1,
    Channel = 2,
    Switching = 3,
    Calibration = 4,
    MonteCarlo = 5,
};

/// Queue index used for draws that belong to no single queue (e.g. the shared
/// ground-to-master hop).
inline constexpr std::uint64_t kSharedStream = 0xFFFF;

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// stream key = H(H(H(H(seed) ^ purpose) ^ queue) ^ slot)
inline constexpr std::uint64_t derive_stream(std::uint64_t seed, StreamPurpose purpose,
                                             std::uint64_t queue, std::uint64_t slot) {
    std::uint64_t h = splitmix64(seed);
    h = splitmix64(h ^ static_cast<std::uint64_t>(purpose));
    h = splitmix64(h ^ queue);
    return splitmix64(h ^ slot);
}

/// Small counter-based engine (splitmix64 sequence). Cheap to construct, which
/// is what per-(slot, queue) streams need; satisfies UniformRandomBitGenerator.
class StreamRng {
public:
    using result_type = std::uint64_t;

    explicit StreamRng(std::uint64_t key) : state_(key) {}
    StreamRng(std::uint64_t seed, StreamPurpose purpose, std::uint64_t queue = 0, std::uint64_t slot = 0)
        : state_(derive_stream(seed, purpose, queue, slot)) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() {
        state_ += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

private:
    std::uint64_t state_;
};

} // namespace acisim
