#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace metaclust {

/// Measures compressed length. Instances hold scratch state and are not
/// shared between threads.
class Compressor {
public:
    virtual ~Compressor() = default;
    virtual std::size_t compressed_size(std::string_view bytes) = 0;
    virtual std::string id() const = 0;
};

struct CompressorSpec {
    std::string name = "zlib";
    int level = 6;

    /// e.g. "zlib-1.2.11/6"
    std::string id() const;
};

/// Throws ConfigError for unknown names or out-of-range levels.
std::unique_ptr<Compressor> make_compressor(const CompressorSpec& spec);

/// Byte separating x and y when measuring C(xy).
inline constexpr char kConcatSeparator = '\x1c';

/// C(x) per item of a level pass. Entries are filled lazily or by a
/// pre-population pass; concurrent fills of one entry store the same value.
class CompressedSizeCache {
public:
    CompressedSizeCache(std::vector<std::string_view> bytes, std::string compressor_id);

    std::size_t get(std::size_t index, Compressor& c) const;
    bool cached(std::size_t index) const { return sizes_[index].load(std::memory_order_relaxed) != 0; }

    std::string_view bytes(std::size_t index) const { return bytes_[index]; }
    std::size_t size() const noexcept { return bytes_.size(); }
    const std::string& compressor_id() const noexcept { return compressor_id_; }

private:
    std::vector<std::string_view> bytes_;
    std::string compressor_id_;
    // Stored as size + 1 so that 0 means "not yet computed".
    mutable std::vector<std::atomic<std::uint32_t>> sizes_;
};

/// 1 - (C(xy) - min(C(x),C(y))) / max(C(x),C(y)), unclamped.
double raw_similarity(std::string_view x, std::string_view y, Compressor& c);

/// The formula above clamped to [0, 1]; byte-identical non-empty inputs
/// score exactly 1 and two empty inputs score 0.
double similarity(std::string_view x, std::string_view y, Compressor& c);

/// Same as similarity() with C(x) and C(y) served from the cache.
double similarity(std::size_t x, std::size_t y, const CompressedSizeCache& cache, Compressor& c);

}  // namespace metaclust
