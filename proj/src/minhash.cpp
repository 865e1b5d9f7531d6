#include "metaclust/minhash.hpp"

#include "metaclust/hashing.hpp"
#include "metaclust/text.hpp"
#include "metaclust/union_find.hpp"

#include <algorithm>
#include <charconv>
#include <numeric>
#include <tuple>

namespace metaclust {

bool is_level(int level) noexcept {
    return std::find(kLevels.begin(), kLevels.end(), level) != kLevels.end();
}

std::vector<std::string> shingle(std::string_view word) {
    std::vector<std::string> out;
    if (word.empty()) return out;
    const auto offsets = text::code_point_offsets(word);
    const std::size_t chars = offsets.size() - 1;
    if (chars <= kShingleLength) {
        out.emplace_back(word);
        return out;
    }
    out.reserve(chars - kShingleLength + 1);
    for (std::size_t i = 0; i + kShingleLength <= chars; ++i) {
        std::string s(word.substr(offsets[i], offsets[i + kShingleLength] - offsets[i]));
        if (std::find(out.begin(), out.end(), s) == out.end()) out.push_back(std::move(s));
    }
    return out;
}

bool Signature::is_sentinel() const noexcept {
    return std::all_of(hashes.begin(), hashes.end(), [](std::uint64_t h) { return h == kSentinelHash; });
}

MinHasher::MinHasher(std::size_t num_hashes, std::uint64_t seed) : seed_(seed), salts_(num_hashes) {
    if (num_hashes < 8 || num_hashes % kBandsPerLevel != 0) {
        throw ConfigError("number of minhashes must be >= 8 and divisible by 4");
    }
    for (std::size_t i = 0; i < num_hashes; ++i) salts_[i] = mix64(seed + i);
}

Signature MinHasher::signature(const TokenStream& tokens) const {
    std::vector<std::uint64_t> bases;
    for (const auto& token : tokens) {
        const auto offsets = text::code_point_offsets(token);
        const std::size_t chars = offsets.size() - 1;
        if (chars == 0) continue;
        if (chars <= kShingleLength) {
            bases.push_back(fnv1a64(token));
            continue;
        }
        for (std::size_t i = 0; i + kShingleLength <= chars; ++i) {
            bases.push_back(fnv1a64(std::string_view(token).substr(offsets[i], offsets[i + kShingleLength] - offsets[i])));
        }
    }
    std::sort(bases.begin(), bases.end());
    bases.erase(std::unique(bases.begin(), bases.end()), bases.end());

    Signature sig{std::vector<std::uint64_t>(salts_.size(), kSentinelHash), seed_};
    for (std::uint64_t base : bases) {
        for (std::size_t i = 0; i < salts_.size(); ++i) {
            const std::uint64_t h = mix64(base ^ salts_[i]);
            if (h < sig.hashes[i]) sig.hashes[i] = h;
        }
    }
    return sig;
}

Signature minhash_signature(const TokenStream& tokens, std::size_t num_hashes, std::uint64_t seed) {
    return MinHasher(num_hashes, seed).signature(tokens);
}

GroupSizeTable::GroupSizeTable() : sizes_{{100, 16}, {80, 8}, {60, 6}, {40, 4}, {20, 2}} {}

GroupSizeTable GroupSizeTable::parse(std::string_view spec) {
    GroupSizeTable table;
    while (!spec.empty()) {
        const auto comma = spec.find(',');
        const auto item = spec.substr(0, comma);
        spec = comma == std::string_view::npos ? std::string_view{} : spec.substr(comma + 1);
        const auto colon = item.find(':');
        if (colon == std::string_view::npos) throw ConfigError("bad group size entry: " + std::string(item));
        int level = 0;
        std::size_t size = 0;
        const auto l = item.substr(0, colon);
        const auto s = item.substr(colon + 1);
        if (std::from_chars(l.data(), l.data() + l.size(), level).ec != std::errc{} ||
            std::from_chars(s.data(), s.data() + s.size(), size).ec != std::errc{}) {
            throw ConfigError("bad group size entry: " + std::string(item));
        }
        table.set(level, size);
    }
    return table;
}

std::size_t GroupSizeTable::at(int level) const {
    auto it = sizes_.find(level);
    if (it == sizes_.end()) throw ConfigError("not a similarity level: " + std::to_string(level));
    return it->second;
}

void GroupSizeTable::set(int level, std::size_t size) {
    if (!is_level(level)) throw ConfigError("not a similarity level: " + std::to_string(level));
    sizes_[level] = size;
}

std::string GroupSizeTable::to_string() const {
    std::string out;
    for (int level : kLevels) {
        if (!out.empty()) out += ',';
        out += std::to_string(level) + ':' + std::to_string(at(level));
    }
    return out;
}

void GroupSizeTable::validate(std::size_t num_hashes) const {
    std::size_t previous = std::numeric_limits<std::size_t>::max();
    for (int level : kLevels) {
        const std::size_t g = at(level);
        if (g == 0) throw ConfigError("group size must be positive");
        if (g * kBandsPerLevel > num_hashes) {
            throw ConfigError("group size " + std::to_string(g) + " at level " + std::to_string(level) +
                              " needs more than " + std::to_string(num_hashes) + " minhashes");
        }
        if (g > previous) throw ConfigError("group sizes must not increase as the level drops");
        previous = g;
    }
}

BandLayout::BandLayout(int level, std::size_t group_size, std::size_t num_hashes, std::uint64_t band_seed)
    : level_(level), group_size_(group_size), num_hashes_(num_hashes) {
    if (group_size == 0 || group_size * kBandsPerLevel > num_hashes) {
        throw ConfigError("band groups do not fit into the signature");
    }
    std::vector<std::size_t> perm(num_hashes);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    Rng rng(combine64(band_seed, static_cast<std::uint64_t>(level)));
    rng.shuffle(perm);
    for (std::size_t b = 0; b < kBandsPerLevel; ++b) {
        positions_[b].assign(perm.begin() + static_cast<std::ptrdiff_t>(b * group_size),
                             perm.begin() + static_cast<std::ptrdiff_t>((b + 1) * group_size));
    }
}

BandKeySet BandLayout::keys(const Signature& sig) const {
    if (sig.hashes.size() != num_hashes_) throw ConfigError("signature length does not match band layout");
    BandKeySet out;
    out.level = level_;
    out.sentinel = sig.is_sentinel();
    for (std::size_t b = 0; b < kBandsPerLevel; ++b) {
        std::uint64_t k = 0;
        for (std::size_t p : positions_[b]) k ^= sig.hashes[p];
        out.keys[b] = k;
    }
    return out;
}

BandKeySet band_keys(const Signature& sig, int level, std::uint64_t band_seed, const GroupSizeTable& sizes) {
    return BandLayout(level, sizes.at(level), sig.hashes.size(), band_seed).keys(sig);
}

BandMatch parse_band_match(std::string_view s) {
    if (s == "any") return BandMatch::any;
    if (s == "all") return BandMatch::all;
    throw ConfigError("band match must be any or all");
}

std::string_view to_string(BandMatch m) { return m == BandMatch::any ? "any" : "all"; }

namespace {

struct KeyEntry {
    std::uint64_t key;
    std::uint32_t band;
    std::uint32_t index;

    auto tie() const { return std::tie(band, key, index); }
    bool operator<(const KeyEntry& o) const { return tie() < o.tie(); }
};

}  // namespace

std::vector<std::vector<std::uint32_t>> group_candidates(std::span<const BandKeySet> keys, BandMatch match) {
    const auto n = static_cast<std::uint32_t>(keys.size());
    UnionFind uf(n);
    std::vector<KeyEntry> entries;

    if (match == BandMatch::any) {
        entries.reserve(static_cast<std::size_t>(n) * kBandsPerLevel);
        for (std::uint32_t i = 0; i < n; ++i) {
            const std::uint32_t band_base = keys[i].sentinel ? kBandsPerLevel : 0;
            for (std::uint32_t b = 0; b < kBandsPerLevel; ++b) {
                entries.push_back({keys[i].keys[b], band_base + b, i});
            }
        }
    } else {
        entries.reserve(n);
        for (std::uint32_t i = 0; i < n; ++i) {
            std::uint64_t k = 0xcbf29ce484222325ULL;
            for (auto v : keys[i].keys) k = combine64(k, v);
            entries.push_back({k, keys[i].sentinel ? 1u : 0u, i});
        }
    }
    std::sort(entries.begin(), entries.end());
    for (std::size_t i = 1; i < entries.size(); ++i) {
        const auto& a = entries[i - 1];
        const auto& b = entries[i];
        if (a.band != b.band || a.key != b.key) continue;
        if (match == BandMatch::all && keys[a.index].keys != keys[b.index].keys) continue;
        uf.unite(a.index, b.index);
    }

    std::vector<std::vector<std::uint32_t>> groups;
    std::vector<std::uint32_t> slot(n, std::numeric_limits<std::uint32_t>::max());
    for (std::uint32_t i = 0; i < n; ++i) {
        const auto root = uf.find(i);
        if (slot[root] == std::numeric_limits<std::uint32_t>::max()) {
            slot[root] = static_cast<std::uint32_t>(groups.size());
            groups.emplace_back();
        }
        groups[slot[root]].push_back(i);
    }
    return groups;
}

}  // namespace metaclust
