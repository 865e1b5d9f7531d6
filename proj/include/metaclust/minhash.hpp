#pragma once

#include "metaclust/record.hpp"

#include <array>
#include <cstdint>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace metaclust {

/// The similarity ladder, highest first.
inline constexpr std::array<int, 5> kLevels{100, 80, 60, 40, 20};
inline constexpr std::size_t kShingleLength = 8;
inline constexpr std::size_t kDefaultNumHashes = 64;
inline constexpr std::size_t kBandsPerLevel = 4;
inline constexpr std::uint64_t kSentinelHash = std::numeric_limits<std::uint64_t>::max();

bool is_level(int level) noexcept;

/// All length-8 code point windows of a word, or the word itself when it
/// is shorter. Duplicated windows are reported once.
std::vector<std::string> shingle(std::string_view word);

struct Signature {
    std::vector<std::uint64_t> hashes;
    std::uint64_t seed = 0;

    /// True for the reserved signature of an empty shingle set.
    bool is_sentinel() const noexcept;
    bool operator==(const Signature&) const = default;
};

// Hash family: h_i(s) = mix64(fnv1a64(s) ^ mix64(seed + i)).
class MinHasher {
public:
    MinHasher(std::size_t num_hashes, std::uint64_t seed);

    Signature signature(const TokenStream& tokens) const;

    std::size_t num_hashes() const noexcept { return salts_.size(); }
    std::uint64_t seed() const noexcept { return seed_; }

private:
    std::uint64_t seed_;
    std::vector<std::uint64_t> salts_;
};

Signature minhash_signature(const TokenStream& tokens, std::size_t num_hashes, std::uint64_t seed);

/// Minhash positions combined into each band key, per level.
class GroupSizeTable {
public:
    /// {100:16, 80:8, 60:6, 40:4, 20:2}
    GroupSizeTable();

    /// Parses "100:16,80:8,..."; unspecified levels keep their defaults.
    static GroupSizeTable parse(std::string_view spec);

    std::size_t at(int level) const;
    void set(int level, std::size_t size);
    const std::map<int, std::size_t>& entries() const noexcept { return sizes_; }
    std::string to_string() const;

    /// Throws ConfigError unless sizes are positive, fit into num_hashes
    /// four times, and do not increase as the level drops.
    void validate(std::size_t num_hashes) const;

private:
    std::map<int, std::size_t> sizes_;
};

struct BandKeySet {
    std::array<std::uint64_t, kBandsPerLevel> keys{};
    int level = 100;
    bool sentinel = false;

    bool operator==(const BandKeySet&) const = default;
};

/// Signature positions for each of the 4 bands at one level: a seeded
/// permutation of [0, H) cut into 4 disjoint groups of the level's size.
class BandLayout {
public:
    BandLayout(int level, std::size_t group_size, std::size_t num_hashes, std::uint64_t band_seed);

    BandKeySet keys(const Signature& sig) const;

    int level() const noexcept { return level_; }
    std::size_t group_size() const noexcept { return group_size_; }
    const std::array<std::vector<std::size_t>, kBandsPerLevel>& positions() const noexcept { return positions_; }

private:
    int level_;
    std::size_t group_size_;
    std::size_t num_hashes_;
    std::array<std::vector<std::size_t>, kBandsPerLevel> positions_;
};

BandKeySet band_keys(const Signature& sig, int level, std::uint64_t band_seed,
                     const GroupSizeTable& sizes = {});

enum class BandMatch { any, all };

BandMatch parse_band_match(std::string_view s);
std::string_view to_string(BandMatch m);

/// Connected components of records sharing a band key (same band index;
/// sentinel sets only meet other sentinel sets). With BandMatch::all the
/// whole 4-key tuple must match. Output is a partition of [0, n): groups
/// ordered by their smallest index, members ascending, singletons included.
std::vector<std::vector<std::uint32_t>> group_candidates(std::span<const BandKeySet> keys,
                                                         BandMatch match = BandMatch::any);

}  // namespace metaclust
