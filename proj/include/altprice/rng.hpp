#pragma once

#include <array>
#include <cstdint>
#include <limits>

#include "normal.hpp"

namespace altprice
{

/// xoshiro256** (Blackman & Vigna) seeded through SplitMix64. Fully specified
/// bit-for-bit, so a given seed reproduces the same stream on every platform.
/// jump() advances by 2^128 draws, giving non-overlapping sub-streams.
class Xoshiro256
{
public:
    using result_type = std::uint64_t;

    explicit Xoshiro256(std::uint64_t seed = 42) noexcept
    {
        std::uint64_t x = seed;
        for (auto &s : state_)
            s = splitmix64(x);
    }

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept
    {
        const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    void jump() noexcept
    {
        static constexpr std::uint64_t kJump[] = {0x180ec6d33cfd0aba, 0xd5a61266f0c9392c,
                                                  0xa9582618e03fc9aa, 0x39abdc4529b1661c};
        std::array<std::uint64_t, 4> acc{};
        for (std::uint64_t word : kJump) {
            for (int b = 0; b < 64; ++b) {
                if (word & (std::uint64_t{1} << b)) {
                    for (int i = 0; i < 4; ++i)
                        acc[i] ^= state_[i];
                }
                (*this)();
            }
        }
        state_ = acc;
    }

    /// Generator for sub-stream `index` of `seed`: the seeded state jumped
    /// `index` times.
    static Xoshiro256 stream(std::uint64_t seed, std::uint64_t index) noexcept
    {
        Xoshiro256 g(seed);
        for (std::uint64_t i = 0; i < index; ++i)
            g.jump();
        return g;
    }

    /// Uniform on the open interval (0, 1) with 53 random bits.
    double uniform() noexcept
    {
        return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Standard normal by inversion.
    double normal() noexcept { return normal_quantile(uniform()); }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) noexcept
    {
        return (x << k) | (x >> (64 - k));
    }

    static std::uint64_t splitmix64(std::uint64_t &x) noexcept
    {
        std::uint64_t z = (x += 0x9e3779b97f4a7c15);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9;
        z = (z ^ (z >> 27)) * 0x94d049bb133111eb;
        return z ^ (z >> 31);
    }

    std::array<std::uint64_t, 4> state_{};
};

} // namespace altprice
