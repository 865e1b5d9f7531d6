#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace metaclust::text {

/// NFC composition followed by simple case folding. Invalid UTF-8 bytes
/// are replaced with U+FFFD.
std::string normalize(std::string_view utf8);

/// Splits normalized text into maximal runs of alphanumeric code points and
/// appends the ones that are not entirely digits.
void append_words(std::string_view normalized, std::vector<std::string>& out);

/// Byte offsets of each code point start in a valid UTF-8 string, plus a
/// final entry equal to s.size().
std::vector<std::size_t> code_point_offsets(std::string_view s);

}  // namespace metaclust::text
