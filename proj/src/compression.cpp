#include "metaclust/compression.hpp"

#include "metaclust/record.hpp"

#include <zlib.h>

#include <algorithm>
#include <array>

namespace metaclust {
namespace {

class ZlibCompressor final : public Compressor {
public:
    explicit ZlibCompressor(int level) : level_(level) {
        if (deflateInit2(&stream_, level, Z_DEFLATED, 15, 8, Z_DEFAULT_STRATEGY) != Z_OK) {
            throw ConfigError("zlib deflateInit2 failed");
        }
    }
    ~ZlibCompressor() override { deflateEnd(&stream_); }

    ZlibCompressor(const ZlibCompressor&) = delete;
    ZlibCompressor& operator=(const ZlibCompressor&) = delete;

    std::size_t compressed_size(std::string_view bytes) override {
        deflateReset(&stream_);
        stream_.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(bytes.data()));
        stream_.avail_in = static_cast<uInt>(bytes.size());
        int rc;
        do {
            stream_.next_out = out_.data();
            stream_.avail_out = static_cast<uInt>(out_.size());
            rc = deflate(&stream_, Z_FINISH);
        } while (rc == Z_OK || (rc == Z_BUF_ERROR && stream_.avail_out == 0));
        if (rc != Z_STREAM_END) throw std::runtime_error("zlib deflate failed");
        return static_cast<std::size_t>(stream_.total_out);
    }

    std::string id() const override { return CompressorSpec{"zlib", level_}.id(); }

private:
    int level_;
    z_stream stream_{};
    std::array<Bytef, 1 << 16> out_{};
};

}  // namespace

std::string CompressorSpec::id() const {
    if (name == "zlib") return "zlib-" + std::string(zlibVersion()) + "/" + std::to_string(level);
    return name + "/" + std::to_string(level);
}

std::unique_ptr<Compressor> make_compressor(const CompressorSpec& spec) {
    if (spec.name == "zlib") {
        if (spec.level < 1 || spec.level > 9) throw ConfigError("zlib compression level must be in 1..9");
        return std::make_unique<ZlibCompressor>(spec.level);
    }
    throw ConfigError("unknown compressor: " + spec.name);
}

CompressedSizeCache::CompressedSizeCache(std::vector<std::string_view> bytes, std::string compressor_id)
    : bytes_(std::move(bytes)), compressor_id_(std::move(compressor_id)), sizes_(bytes_.size()) {}

std::size_t CompressedSizeCache::get(std::size_t index, Compressor& c) const {
    std::uint32_t v = sizes_[index].load(std::memory_order_relaxed);
    if (v == 0) {
        v = static_cast<std::uint32_t>(c.compressed_size(bytes_[index]) + 1);
        sizes_[index].store(v, std::memory_order_relaxed);
    }
    return v - 1;
}

namespace {

double formula(std::size_t cx, std::size_t cy, std::size_t cxy) {
    const double lo = static_cast<double>(std::min(cx, cy));
    const double hi = static_cast<double>(std::max(cx, cy));
    return 1.0 - (static_cast<double>(cxy) - lo) / hi;
}

std::size_t concat_size(std::string_view x, std::string_view y, Compressor& c) {
    thread_local std::string buffer;
    buffer.clear();
    buffer.reserve(x.size() + y.size() + 1);
    buffer.append(x);
    buffer.push_back(kConcatSeparator);
    buffer.append(y);
    return c.compressed_size(buffer);
}

double finish(std::string_view x, std::string_view y, std::size_t cx, std::size_t cy, Compressor& c) {
    if (x.empty() && y.empty()) return 0.0;
    if (x == y) return 1.0;
    return std::clamp(formula(cx, cy, concat_size(x, y, c)), 0.0, 1.0);
}

}  // namespace

double raw_similarity(std::string_view x, std::string_view y, Compressor& c) {
    return formula(c.compressed_size(x), c.compressed_size(y), concat_size(x, y, c));
}

double similarity(std::string_view x, std::string_view y, Compressor& c) {
    if (x.empty() && y.empty()) return 0.0;
    if (x == y) return 1.0;
    return finish(x, y, c.compressed_size(x), c.compressed_size(y), c);
}

double similarity(std::size_t x, std::size_t y, const CompressedSizeCache& cache, Compressor& c) {
    const auto bx = cache.bytes(x);
    const auto by = cache.bytes(y);
    if (bx.empty() && by.empty()) return 0.0;
    if (bx == by) return 1.0;
    return finish(bx, by, cache.get(x, c), cache.get(y, c), c);
}

}  // namespace metaclust
