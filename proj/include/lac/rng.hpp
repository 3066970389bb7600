#pragma once

#include <cstdint>
#include <random>

namespace lac {

/// SplitMix64 finalizer. Used to turn (seed XOR stream id) into a well mixed
/// 64-bit seed for an independent generator.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// One reproducible random stream.
///
/// Stream splitting rule: the generator for stream `id` under scenario seed
/// `seed` is mt19937_64 seeded with splitmix64(seed ^ id). Uniforms are built
/// from the top 53 bits of one 64-bit output so the sequence is identical on
/// every standard library (std::uniform_real_distribution is not).
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed, std::uint64_t stream_id = 0)
        : engine_(splitmix64(seed ^ stream_id)) {}

    /// Uniform on the open interval (0, 1).
    double uniform_open() noexcept {
        return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Uniform on [0, 1).
    double uniform() noexcept {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    std::uint64_t next_u64() noexcept { return engine_(); }

private:
    std::mt19937_64 engine_;
};

}  // namespace lac
