#ifndef CATASTROPHE_RANDOM_HPP
#define CATASTROPHE_RANDOM_HPP

#include <bit>
#include <cmath>
#include <cstdint>
#include <random>

namespace catastrophe
{

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept
{
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/**
 * Derives the seed of stream `index` under master seed `seed`.
 *
 * Both inputs pass through the SplitMix64 finalizer before being combined, so
 * neighbouring seeds and neighbouring indices give unrelated streams. The
 * result depends only on (seed, index): replica i gets the same stream no
 * matter which worker runs it or in what order.
 */
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) noexcept
{
    return mix64(mix64(seed) ^ mix64(index ^ 0x6a09e667f3bcc909ULL));
}

/**
 * One replica's random stream: a 64-bit Mersenne Twister seeded by
 * derive_seed(seed, index), with hand-written conversions to uniform,
 * exponential and bounded integer variates. The std distribution classes are
 * not used because their output differs between standard library vendors.
 */
class Stream
{
public:
    Stream(std::uint64_t seed, std::uint64_t index)
        : engine_(derive_seed(seed, index))
    {
    }

    std::uint64_t bits() { return engine_(); }

    // Uniform on the open interval (0, 1).
    double uniform()
    {
        return (static_cast<double>(bits() >> 11) + 0.5) * 0x1.0p-53;
    }

    // Unit-mean exponential.
    double exponential() { return -std::log(uniform()); }

    // Uniform on {0, ..., bound - 1}; bound >= 1. Lemire's multiply-and-reject, exact.
    std::uint64_t below(std::uint64_t bound)
    {
        auto product = static_cast<unsigned __int128>(bits()) * bound;
        auto low = static_cast<std::uint64_t>(product);
        if (low < bound) {
            const std::uint64_t threshold = (0 - bound) % bound;
            while (low < threshold) {
                product = static_cast<unsigned __int128>(bits()) * bound;
                low = static_cast<std::uint64_t>(product);
            }
        }
        return static_cast<std::uint64_t>(product >> 64);
    }

private:
    std::mt19937_64 engine_;
};

// Seed for a sub-experiment keyed by a real parameter (e.g. the horizon in a sweep).
inline std::uint64_t seed_for_key(std::uint64_t seed, double key) noexcept
{
    return derive_seed(seed, std::bit_cast<std::uint64_t>(key) ^ 0xbb67ae8584caa73bULL);
}

} // namespace catastrophe
#endif // CATASTROPHE_RANDOM_HPP
