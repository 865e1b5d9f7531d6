#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace metaclust {

// 64-bit FNV-1a. Used as the base string hash for shingles and as the
// digest for ids; it is fixed so that run outputs are stable across builds.
constexpr std::uint64_t fnv1a64(std::string_view s,
                                std::uint64_t h = 0xcbf29ce484222325ULL) noexcept {
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t combine64(std::uint64_t a, std::uint64_t b) noexcept {
    return mix64(a ^ mix64(b));
}

/// Digest of an ordered list of ids: FNV-1a over the ids joined by '\n'.
template <typename Range>
std::uint64_t digest_ids(const Range& ids) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    bool first = true;
    for (const auto& id : ids) {
        if (!first) h = fnv1a64("\n", h);
        h = fnv1a64(std::string_view(id), h);
        first = false;
    }
    return h;
}

inline std::string to_hex16(std::uint64_t v) {
    static constexpr char kDigits[] = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i, v >>= 4) out[static_cast<std::size_t>(i)] = kDigits[v & 0xf];
    return out;
}

/// Seeded generator with a portable index distribution. std::shuffle and
/// std::uniform_int_distribution are implementation-defined, so every
/// random choice that affects run output goes through this class.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform integer in [0, n). n must be > 0.
    std::uint64_t uniform_index(std::uint64_t n) {
        const std::uint64_t limit = std::mt19937_64::max() - std::mt19937_64::max() % n;
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return x % n;
    }

    /// Uniform real in [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) { return uniform01() < p; }

    /// Fisher-Yates, walking from the back.
    template <typename T>
    void shuffle(std::span<T> v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(uniform_index(i));
            std::swap(v[i - 1], v[j]);
        }
    }
    template <typename T>
    void shuffle(std::vector<T>& v) { shuffle(std::span<T>(v)); }

private:
    std::mt19937_64 engine_;
};

}  // namespace metaclust
