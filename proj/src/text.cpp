#include "metaclust/text.hpp"

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>

#include <algorithm>
#include <stdexcept>

namespace metaclust::text {
namespace {

bool is_ascii(std::string_view s) {
    return std::all_of(s.begin(), s.end(), [](char c) { return static_cast<unsigned char>(c) < 0x80; });
}

bool ascii_alnum(UChar32 c) {
    return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}

const icu::Normalizer2& nfc() {
    UErrorCode status = U_ZERO_ERROR;
    const icu::Normalizer2* n = icu::Normalizer2::getNFCInstance(status);
    if (U_FAILURE(status) || n == nullptr) {
        throw std::runtime_error("ICU NFC normalizer unavailable");
    }
    return *n;
}

}  // namespace

std::string normalize(std::string_view utf8) {
    if (is_ascii(utf8)) {
        std::string out(utf8);
        for (char& c : out) {
            if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
        }
        return out;
    }
    icu::UnicodeString in = icu::UnicodeString::fromUTF8(
        icu::StringPiece(utf8.data(), static_cast<int32_t>(utf8.size())));
    UErrorCode status = U_ZERO_ERROR;
    icu::UnicodeString composed = nfc().normalize(in, status);
    if (U_FAILURE(status)) composed = in;
    composed.foldCase(U_FOLD_CASE_DEFAULT);
    std::string out;
    composed.toUTF8String(out);
    return out;
}

void append_words(std::string_view s, std::vector<std::string>& out) {
    const auto* bytes = reinterpret_cast<const uint8_t*>(s.data());
    const auto length = static_cast<int32_t>(s.size());
    int32_t i = 0;
    int32_t start = -1;
    bool all_digits = true;

    auto flush = [&](int32_t end) {
        if (start >= 0 && !all_digits) out.emplace_back(s.substr(start, end - start));
        start = -1;
        all_digits = true;
    };

    while (i < length) {
        const int32_t at = i;
        UChar32 c;
        if (bytes[i] < 0x80) {
            c = bytes[i++];
        } else {
            U8_NEXT(bytes, i, length, c);
        }
        const bool alnum = c >= 0 && (c < 0x80 ? ascii_alnum(c) : u_isalnum(c) != 0);
        if (alnum) {
            if (start < 0) start = at;
            if (c < 0x80 ? !(c >= '0' && c <= '9') : !u_isdigit(c)) all_digits = false;
        } else {
            flush(at);
        }
    }
    flush(length);
}

std::vector<std::size_t> code_point_offsets(std::string_view s) {
    std::vector<std::size_t> offsets;
    offsets.reserve(s.size() + 1);
    const auto* bytes = reinterpret_cast<const uint8_t*>(s.data());
    const auto length = static_cast<int32_t>(s.size());
    int32_t i = 0;
    while (i < length) {
        offsets.push_back(static_cast<std::size_t>(i));
        U8_FWD_1(bytes, i, length);
    }
    offsets.push_back(s.size());
    return offsets;
}

}  // namespace metaclust::text
