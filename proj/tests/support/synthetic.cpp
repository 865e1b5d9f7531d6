#include "support/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>
#include <sstream>

namespace synth {

using namespace metaclust;

std::string random_word(Rng& rng, std::size_t min_len, std::size_t max_len) {
    static constexpr char kLetters[] = "abcdefghijklmnopqrstuvwxyz";
    const std::size_t len = min_len + rng.uniform_index(max_len - min_len + 1);
    std::string w(len, 'a');
    for (auto& c : w) c = kLetters[rng.uniform_index(26)];
    return w;
}

std::string random_text(Rng& rng, std::size_t words) {
    std::string out;
    for (std::size_t i = 0; i < words; ++i) {
        if (i) out += ' ';
        out += random_word(rng);
    }
    return out;
}

std::string random_bytes(Rng& rng, std::size_t n) {
    std::string out(n, '\0');
    for (auto& c : out) c = static_cast<char>(rng.uniform_index(256));
    return out;
}

Vocabulary::Vocabulary(std::uint64_t seed, std::size_t size) {
    Rng rng(seed);
    words_.reserve(size);
    for (std::size_t i = 0; i < size; ++i) words_.push_back(random_word(rng, 2, 12));
}

const std::string& Vocabulary::pick(Rng& rng) const {
    // Roughly Zipfian: squaring a uniform draw favours low ranks.
    const double u = rng.uniform01();
    auto i = static_cast<std::size_t>(u * u * static_cast<double>(words_.size()));
    return words_[std::min(i, words_.size() - 1)];
}

std::string Vocabulary::text(Rng& rng, std::size_t words) const {
    std::string out;
    for (std::size_t i = 0; i < words; ++i) {
        if (i) out += ' ';
        out += pick(rng);
    }
    return out;
}

Record make_record(std::string id, std::string provider,
                   std::vector<std::pair<std::string_view, std::vector<std::string>>> fields) {
    Record r;
    r.id = std::move(id);
    for (auto& [name, values] : fields) {
        for (auto& v : values) r.add(name, std::move(v));
    }
    r.add(kDataProviderField, std::move(provider));
    r.provider = resolve_provider(r);
    return r;
}

std::string corrupt_tokens(Rng& rng, const std::string& text, double fraction) {
    std::vector<std::string> tokens;
    std::istringstream in(text);
    for (std::string t; in >> t;) tokens.push_back(t);
    if (tokens.empty()) return text;
    const auto k = static_cast<std::size_t>(std::lround(fraction * static_cast<double>(tokens.size())));
    std::vector<std::size_t> pos(tokens.size());
    std::iota(pos.begin(), pos.end(), std::size_t{0});
    for (std::size_t i = 0; i < k && i < pos.size(); ++i) {
        std::swap(pos[i], pos[i + rng.uniform_index(pos.size() - i)]);
        tokens[pos[i]] = random_word(rng);
    }
    std::string out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i) out += ' ';
        out += tokens[i];
    }
    return out;
}

Record corrupt_record(Rng& rng, Record r, double fraction) {
    // Token positions across every descriptive value of the record.
    struct Slot {
        std::size_t field, value, token;
    };
    std::vector<std::vector<std::vector<std::string>>> split(r.fields.size());
    std::vector<Slot> slots;
    for (std::size_t f = 0; f < r.fields.size(); ++f) {
        const auto& field = r.fields[f];
        split[f].resize(field.values.size());
        if (field.name == kDataProviderField || field.name == kProviderField) continue;
        for (std::size_t v = 0; v < field.values.size(); ++v) {
            std::istringstream in(field.values[v]);
            for (std::string t; in >> t;) {
                slots.push_back({f, v, split[f][v].size()});
                split[f][v].push_back(t);
            }
        }
    }
    const auto k = static_cast<std::size_t>(std::lround(fraction * static_cast<double>(slots.size())));
    for (std::size_t i = 0; i < k; ++i) {
        std::swap(slots[i], slots[i + rng.uniform_index(slots.size() - i)]);
        split[slots[i].field][slots[i].value][slots[i].token] = random_word(rng);
    }
    std::set<std::pair<std::size_t, std::size_t>> touched;
    for (std::size_t i = 0; i < k; ++i) touched.insert({slots[i].field, slots[i].value});
    for (const auto& [f, v] : touched) {
        std::string joined;
        for (const auto& t : split[f][v]) joined += (joined.empty() ? "" : " ") + t;
        r.fields[f].values[v] = joined;
    }
    return r;
}

std::string corrupt_bytes(Rng& rng, std::string bytes, double fraction) {
    const auto k = static_cast<std::size_t>(std::lround(fraction * static_cast<double>(bytes.size())));
    std::vector<std::size_t> pos(bytes.size());
    std::iota(pos.begin(), pos.end(), std::size_t{0});
    for (std::size_t i = 0; i < k; ++i) {
        std::swap(pos[i], pos[i + rng.uniform_index(pos.size() - i)]);
        bytes[pos[i]] = static_cast<char>('a' + rng.uniform_index(26));
    }
    return bytes;
}

std::string id_of(const std::string& prefix, std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%07zu", i);
    return prefix + buf;
}

std::vector<Record> random_records(std::uint64_t seed, std::size_t n, const std::string& prefix) {
    Rng rng(seed);
    std::vector<Record> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        out.push_back(make_record(id_of(prefix, i), "provider" + std::to_string(i % 7),
                                  {{kTitleField, {random_text(rng, 3 + rng.uniform_index(6))}},
                                   {kDescriptionField, {random_text(rng, 10 + rng.uniform_index(20))}},
                                   {"dc:creator", {random_text(rng, 2)}}}));
    }
    return out;
}

std::vector<Record> hierarchy_corpus(std::uint64_t seed, std::size_t n) {
    Rng rng(seed);
    const Vocabulary vocab(combine64(seed, 1), 20000);
    std::vector<std::string> creators(std::max<std::size_t>(50, n / 40));
    for (auto& c : creators) c = random_word(rng, 4, 9) + " " + random_word(rng, 5, 10);
    std::vector<std::string> subjects(std::max<std::size_t>(30, n / 200));
    for (auto& s : subjects) s = vocab.text(rng, 2);
    const std::vector<std::string> types{"text", "image", "sound", "video", "physical object"};
    static constexpr const char* kPart[] = {"first", "second", "third", "fourth", "fifth", "sixth"};
    const std::size_t providers = 12;

    std::vector<Record> out;
    out.reserve(n + 8);
    std::size_t next = 0;
    while (out.size() < n) {
        // A collection: works sharing creator, subject and a description stem.
        const std::string provider = "provider" + std::to_string(rng.uniform_index(providers));
        const std::string creator = creators[rng.uniform_index(creators.size())];
        const std::string subject = subjects[rng.uniform_index(subjects.size())];
        const std::string stem = vocab.text(rng, 6 + rng.uniform_index(8));
        const std::string type = types[rng.uniform_index(types.size())];
        const std::size_t works = 1 + rng.uniform_index(4);
        for (std::size_t w = 0; w < works && out.size() < n; ++w) {
            const std::string title = vocab.text(rng, 3 + rng.uniform_index(6));
            const std::string description = stem + " " + vocab.text(rng, 8 + rng.uniform_index(20));
            const std::string date = std::to_string(1700 + rng.uniform_index(300));
            auto emit = [&](const std::string& t, const std::string& ident) {
                out.push_back(make_record(id_of("r", next++), provider,
                                          {{kTitleField, {t}},
                                           {kDescriptionField, {description}},
                                           {"dc:creator", {creator}},
                                           {"dc:subject", {subject}},
                                           {"dc:date", {date}},
                                           {"dc:type", {type}},
                                           {"dc:identifier", {ident}}}));
            };
            const std::string ident = "urn " + random_word(rng, 10, 10);
            emit(title, ident);
            const double roll = rng.uniform01();
            if (roll < 0.1) {
                emit(title, ident);  // exact duplicate
            } else if (roll < 0.3) {
                const std::size_t views = 1 + rng.uniform_index(3);
                for (std::size_t v = 0; v < views; ++v) emit(title, "urn " + random_word(rng, 10, 10));
            } else if (roll < 0.45) {
                const std::size_t parts = 2 + rng.uniform_index(5);
                for (std::size_t p = 0; p < parts; ++p) {
                    emit(title + " " + kPart[p] + " part", "urn " + random_word(rng, 10, 10));
                }
            }
        }
    }
    out.resize(n);
    return out;
}

std::vector<Record> book_pages(std::uint64_t seed, std::size_t books, std::size_t pages,
                               const std::string& provider) {
    Rng rng(seed);
    const std::vector<std::string> languages{"en", "fr", "de"};
    std::vector<Record> out;
    for (std::size_t b = 0; b < books; ++b) {
        const std::string book = random_text(rng, 8);
        const std::string lang = languages[rng.uniform_index(languages.size())];
        for (std::size_t p = 0; p < pages; ++p) {
            char num[8];
            std::snprintf(num, sizeof num, "%03zu", p + 1);
            out.push_back(make_record(provider + "-" + id_of("b", b * pages + p), provider,
                                      {{kTitleField, {"Book " + book + " page " + num}},
                                       {kDescriptionField, {random_text(rng, 6 + rng.uniform_index(6))}},
                                       {"dc:type", {"text"}},
                                       {"dc:language", {lang}},
                                       {"dc:date", {std::to_string(1800 + rng.uniform_index(200))}},
                                       {"dc:rights", {"public domain"}}}));
        }
    }
    return out;
}

std::vector<LevelItem> level_items(const std::vector<Record>& records, int level, const PipelineConfig& config,
                                   const FieldMask& mask) {
    std::vector<const Record*> ptrs;
    ptrs.reserve(records.size());
    for (const auto& r : records) ptrs.push_back(&r);
    return make_level_items(ptrs, [&](const Record&) -> const FieldMask& { return mask; }, level, config);
}

}  // namespace synth
