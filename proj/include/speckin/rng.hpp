// Counter-based random number generation (Philox 4x32-10) plus SplitMix64
// sub-seed derivation. Every stochastic routine in the library takes an
// explicit 64-bit seed; variates are addressed by (key, stream, index), so
// ensemble members can be generated in any order, on any thread, and still
// reproduce bit-for-bit.
#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace speckin {

// One SplitMix64 step. Advances `state` and returns a mixed 64-bit word.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Deterministic sub-seed for a named stream (per-beta cells, per-purpose
// generators, ...). Not invertible; collisions across small stream ids are
// not a concern at the 64-bit level.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t s = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    std::uint64_t a = splitmix64(s);
    return a ^ splitmix64(s);
}

namespace philox {

constexpr std::uint32_t kMul0  = 0xD2511F53u;
constexpr std::uint32_t kMul1  = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

// Philox 4x32 with 10 rounds: 128-bit counter = (index, stream), 64-bit key.
inline std::array<std::uint32_t, 4> block(std::uint64_t key,
                                          std::uint64_t stream,
                                          std::uint64_t index) {
    std::uint32_t c0 = static_cast<std::uint32_t>(index);
    std::uint32_t c1 = static_cast<std::uint32_t>(index >> 32);
    std::uint32_t c2 = static_cast<std::uint32_t>(stream);
    std::uint32_t c3 = static_cast<std::uint32_t>(stream >> 32);
    std::uint32_t k0 = static_cast<std::uint32_t>(key);
    std::uint32_t k1 = static_cast<std::uint32_t>(key >> 32);
    for (int round = 0; round < 10; ++round) {
        if (round != 0) {
            k0 += kWeyl0;
            k1 += kWeyl1;
        }
        const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * c0;
        const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * c2;
        const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
        const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
        const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
        const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
        const std::uint32_t n0 = hi1 ^ c1 ^ k0;
        const std::uint32_t n2 = hi0 ^ c3 ^ k1;
        c0 = n0;
        c1 = lo1;
        c2 = n2;
        c3 = lo0;
    }
    return {c0, c1, c2, c3};
}

} // namespace philox

// Maps 64 random bits to a double in the open interval (0, 1).
inline double bits_to_unit_open(std::uint64_t bits) {
    return static_cast<double>(bits >> 11) * 0x1.0p-53 + 0x1.0p-54;
}

// Two independent standard normals from one Philox block (Box-Muller with a
// fixed two-uniforms-per-pair layout, so variate n lives in block n/2).
inline std::array<double, 2> normal_pair(std::uint64_t key,
                                         std::uint64_t stream,
                                         std::uint64_t pair_index) {
    const auto w = philox::block(key, stream, pair_index);
    const std::uint64_t b0 = (static_cast<std::uint64_t>(w[0]) << 32) | w[1];
    const std::uint64_t b1 = (static_cast<std::uint64_t>(w[2]) << 32) | w[3];
    const double u1 = bits_to_unit_open(b0);
    const double u2 = bits_to_unit_open(b1);
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 6.283185307179586476925286766559 * u2;
    return {r * std::cos(theta), r * std::sin(theta)};
}

// Sequential view over the counter-based normals of one (key, stream) lane.
class NormalStream {
public:
    NormalStream(std::uint64_t key, std::uint64_t stream)
        : key_(key), stream_(stream) {}

    double next() {
        if (!have_cached_) {
            const auto z = normal_pair(key_, stream_, pair_index_++);
            cached_ = z[1];
            have_cached_ = true;
            return z[0];
        }
        have_cached_ = false;
        return cached_;
    }

    // Random normal by absolute index, independent of cursor state.
    double at(std::uint64_t index) const {
        return normal_pair(key_, stream_, index >> 1)[index & 1];
    }

    std::uint64_t key() const { return key_; }
    std::uint64_t stream() const { return stream_; }

private:
    std::uint64_t key_;
    std::uint64_t stream_;
    std::uint64_t pair_index_ = 0;
    double cached_ = 0.0;
    bool have_cached_ = false;
};

// Stream-id name space, so unrelated consumers of one seed never overlap.
namespace rng_purpose {
constexpr std::uint64_t kWishart = 1;
constexpr std::uint64_t kGbmAsset = 2;       // + asset index
constexpr std::uint64_t kGbmShared = 3;
constexpr std::uint64_t kKinetics = 4;       // + realization index
constexpr std::uint64_t kSynth = 5;          // + generator-specific lane

inline std::uint64_t stream(std::uint64_t purpose, std::uint64_t entity = 0) {
    return (purpose << 56) | (entity & 0x00FFFFFFFFFFFFFFULL);
}
} // namespace rng_purpose

} // namespace speckin
