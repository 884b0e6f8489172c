#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>
#include <vector>

namespace dcpose {

// Deterministic 64-bit generator (splitmix64). Every random decision in the
// project flows from one master seed through named substreams, so runs are
// reproducible bit-for-bit across platforms:
//
//   substream seed  = mix64(master ^ fnv1a64(name))
//   indexed child   = mix64(base + (index + 1) * 0x9E3779B97F4A7C15)
//
// mix64 is the splitmix64 finalizer; fnv1a64 uses the standard offset basis
// 0xCBF29CE484222325 and prime 0x100000001B3.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ull;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    // Uniform on [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n). n must be positive.
    std::uint64_t uniform_index(std::uint64_t n) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    // Standard normal via Box-Muller; no cached spare, two uniforms per draw.
    double gaussian() {
        double u1 = uniform();
        double u2 = uniform();
        // Guard against log(0).
        u1 = u1 > 0.0 ? u1 : 0x1.0p-53;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    // K-component noise vector, each component uniform on [0, 1).
    std::vector<double> uniform_vector(std::size_t n) {
        std::vector<double> v(n);
        for (auto& x : v) x = uniform();
        return v;
    }

    // In-place Fisher-Yates. Hand-rolled (std::shuffle's draw sequence is
    // implementation-defined).
    template <typename T>
    void shuffle(std::vector<T>& items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(uniform_index(i));
            std::swap(items[i - 1], items[j]);
        }
    }

private:
    std::uint64_t state_;
};

inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xCBF29CE484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001B3ull;
    }
    return h;
}

// Seed for a named substream of a master seed.
inline std::uint64_t substream_seed(std::uint64_t master, std::string_view name) {
    return mix64(master ^ fnv1a64(name));
}

// Seed for the index-th child of a base stream (per-sample, per-epoch, ...).
inline std::uint64_t child_seed(std::uint64_t base, std::uint64_t index) {
    return mix64(base + (index + 1) * 0x9E3779B97F4A7C15ull);
}

inline Rng substream(std::uint64_t master, std::string_view name) {
    return Rng(substream_seed(master, name));
}

}  // namespace dcpose
