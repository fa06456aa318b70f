#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace krein {

// Philox4x32-10 (Salmon et al., SC'11). Stateless: the output block is a
// pure function of (counter, key).
inline std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> c, std::array<std::uint32_t, 2> k) {
    constexpr std::uint32_t M0 = 0xD2511F53u, M1 = 0xCD9E8D57u;
    constexpr std::uint32_t W0 = 0x9E3779B9u, W1 = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round) {
        const std::uint64_t p0 = std::uint64_t(M0) * c[0];
        const std::uint64_t p1 = std::uint64_t(M1) * c[2];
        c = {std::uint32_t(p1 >> 32) ^ c[1] ^ k[0], std::uint32_t(p1), std::uint32_t(p0 >> 32) ^ c[3] ^ k[1],
             std::uint32_t(p0)};
        k[0] += W0;
        k[1] += W1;
    }
    return c;
}

// Uniform on (0, 1]: never 0, so log() is safe.
inline double u32_to_open01(std::uint32_t x) { return (double(x) + 1.0) * 0x1p-32; }

// One block per (stream, path, index); the seed is the key.
class CounterStream {
public:
    CounterStream(std::uint64_t seed, std::uint64_t path, std::uint32_t stream)
        : key_{std::uint32_t(seed), std::uint32_t(seed >> 32)}, path_(std::uint32_t(path)), stream_(stream) {}

    std::array<std::uint32_t, 4> block(std::uint64_t index) const {
        return philox4x32({std::uint32_t(index), std::uint32_t(index >> 32), path_, stream_}, key_);
    }

    // Standard normal from words 0 and 1 of a block (Box-Muller, cosine branch).
    static double normal(const std::array<std::uint32_t, 4>& b) {
        const double r = std::sqrt(-2.0 * std::log(u32_to_open01(b[0])));
        return r * std::cos(2.0 * std::numbers::pi * u32_to_open01(b[1]));
    }

private:
    std::array<std::uint32_t, 2> key_;
    std::uint32_t path_;
    std::uint32_t stream_;
};

}  // namespace krein
