#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace itemrag {

/// SplitMix64 pseudo-random generator (Steele, Lea & Flood).
///
/// Chosen over std::mt19937_64 because the standard distributions are not
/// bit-portable across standard-library implementations; this generator plus
/// the derivations below produce identical streams on every platform.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1) with 53 bits of precision.
    double next_double() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, n). n must be > 0. Unbiased via rejection.
    std::uint64_t next_below(std::uint64_t n) {
        const std::uint64_t threshold = -n % n;  // 2^64 mod n
        for (;;) {
            const std::uint64_t r = next();
            if (r >= threshold) return r % n;
        }
    }

private:
    std::uint64_t state_;
};

/// FNV-1a 64-bit hash. Stable across platforms, unlike std::hash.
inline std::uint64_t fnv1a64(std::string_view data) {
    std::uint64_t h = 0xCBF29CE484222325ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001B3ull;
    }
    return h;
}

/// Derives an independent stream from a run seed and a stable key, so that
/// per-item or per-user work is deterministic regardless of scheduling.
inline SplitMix64 derive_stream(std::uint64_t seed, std::string_view key) {
    return SplitMix64(seed ^ fnv1a64(key));
}

/// In-place Fisher-Yates shuffle.
template <typename T>
void shuffle(std::vector<T>& values, SplitMix64& rng) {
    if (values.size() < 2) return;
    for (std::size_t i = values.size() - 1; i > 0; --i) {
        const std::size_t j = static_cast<std::size_t>(rng.next_below(i + 1));
        using std::swap;
        swap(values[i], values[j]);
    }
}

}  // namespace itemrag
