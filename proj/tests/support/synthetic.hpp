#pragma once

#include "metaclust/hashing.hpp"
#include "metaclust/hierarchy.hpp"
#include "metaclust/level_clusterer.hpp"
#include "metaclust/record.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace synth {

using metaclust::Record;
using metaclust::Rng;

std::string random_word(Rng& rng, std::size_t min_len = 3, std::size_t max_len = 11);
std::string random_text(Rng& rng, std::size_t words);
std::string random_bytes(Rng& rng, std::size_t n);

// Pseudo-words drawn with a skewed frequency so that texts share common
// words the way real descriptions do.
class Vocabulary {
public:
    Vocabulary(std::uint64_t seed, std::size_t size);
    const std::string& pick(Rng& rng) const;
    std::string text(Rng& rng, std::size_t words) const;

private:
    std::vector<std::string> words_;
};

Record make_record(std::string id, std::string provider,
                   std::vector<std::pair<std::string_view, std::vector<std::string>>> fields);

// Replaces round(fraction * tokens) distinct space-separated tokens with fresh random words.
std::string corrupt_tokens(Rng& rng, const std::string& text, double fraction);
// Replaces that fraction of all descriptive tokens of a record, chosen across fields.
Record corrupt_record(Rng& rng, Record r, double fraction);
// Replaces round(fraction * size) distinct byte positions with random letters.
std::string corrupt_bytes(Rng& rng, std::string bytes, double fraction);

// n records with unrelated random text.
std::vector<Record> random_records(std::uint64_t seed, std::size_t n, const std::string& prefix = "r");

// Metadata-like corpus: providers, works with views and parts, collections
// sharing creators and subjects, plus exact duplicates.
std::vector<Record> hierarchy_corpus(std::uint64_t seed, std::size_t n);

// One provider of digitised books: titles name the book and a page
// number, descriptions are per-page noise, other fields are near-constant.
std::vector<Record> book_pages(std::uint64_t seed, std::size_t books, std::size_t pages,
                               const std::string& provider = "Library");

std::vector<metaclust::LevelItem> level_items(const std::vector<Record>& records, int level,
                                              const metaclust::PipelineConfig& config = {},
                                              const metaclust::FieldMask& mask = metaclust::FieldMask::all());

std::string id_of(const std::string& prefix, std::size_t i);

}  // namespace synth
