#include "metaclust/hierarchy.hpp"

#include "metaclust/hashing.hpp"
#include "metaclust/thread_pool.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <sstream>
#include <unordered_set>

namespace metaclust {

Record make_artificial_record(const Cluster& cluster, std::span<const Record* const> constituents,
                              std::size_t value_cap) {
    Record out;
    out.id = cluster.id;
    out.kind = RecordKind::artificial;
    out.provenance.push_back(cluster.head);
    out.provenance.insert(out.provenance.end(), cluster.members.begin(), cluster.members.end());

    std::map<std::string, std::map<std::string, std::size_t>> counts;
    for (const Record* r : constituents) {
        if (r->id == cluster.head) out.provider = r->provider;
        for (const Field& f : r->fields) {
            auto& per_value = counts[f.name];
            for (const auto& v : f.values) ++per_value[v];
        }
    }
    for (auto& [name, per_value] : counts) {
        std::vector<std::pair<std::string, std::size_t>> ranked(per_value.begin(), per_value.end());
        std::stable_sort(ranked.begin(), ranked.end(),
                         [](const auto& a, const auto& b) { return a.second > b.second; });
        if (ranked.size() > value_cap) ranked.resize(value_cap);
        Field f{name, {}};
        for (auto& [value, n] : ranked) f.values.push_back(value);
        out.fields.push_back(std::move(f));
    }
    return out;
}

Forest::Forest(std::vector<HierarchyNode> nodes, std::vector<std::string> originals) : nodes_(std::move(nodes)) {
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        if (!index_.emplace(nodes_[i].cluster_id, i).second) {
            throw IntegrityError("duplicate forest node " + nodes_[i].cluster_id);
        }
    }
    for (auto& id : originals) originals_.emplace(std::move(id), true);
}

const HierarchyNode* Forest::find(const std::string& id) const {
    auto it = index_.find(id);
    return it == index_.end() ? nullptr : &nodes_[it->second];
}

void Forest::expand_into(const std::string& id, std::vector<std::string>& out) const {
    if (const HierarchyNode* node = find(id)) {
        for (const auto& child : node->children) expand_into(child, out);
        return;
    }
    if (!originals_.count(id)) throw IntegrityError("dangling forest id " + id);
    out.push_back(id);
}

std::vector<std::string> Forest::expand(const std::string& id) const {
    std::vector<std::string> out;
    expand_into(id, out);
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<std::string> Forest::roots() const {
    std::unordered_set<std::string_view> children;
    for (const auto& n : nodes_) children.insert(n.children.begin(), n.children.end());
    std::vector<std::string> out;
    for (const auto& n : nodes_) {
        if (!children.count(n.cluster_id)) out.push_back(n.cluster_id);
    }
    return out;
}

std::size_t Forest::depth(const std::string& id) const {
    const HierarchyNode* node = find(id);
    if (node == nullptr) return 0;
    std::size_t below = 0;
    for (const auto& child : node->children) below = std::max(below, depth(child));
    return below + 1;
}

std::string compulsory_field(std::span<const Record* const> provider_records) {
    bool description = false;
    for (const Record* r : provider_records) {
        if (r->has(kTitleField)) return std::string(kTitleField);
        description = description || r->has(kDescriptionField);
    }
    if (description) return std::string(kDescriptionField);
    throw ConfigError("provider has neither dc:title nor dc:description");
}

bool PipelineConfig::runs(int level) const {
    return std::find(levels.begin(), levels.end(), level) != levels.end();
}

void PipelineConfig::validate() const {
    if (levels.empty()) throw ConfigError("no levels selected");
    for (int l : levels) {
        if (!is_level(l)) throw ConfigError("not a similarity level: " + std::to_string(l));
    }
    if (max_iter < 1) throw ConfigError("max_iter must be >= 1");
    if (workers < 1) throw ConfigError("workers must be >= 1");
    if (max_heads < 1) throw ConfigError("max_heads must be >= 1");
    if (value_cap < 1) throw ConfigError("value cap must be >= 1");
    if (num_hashes < 8 || num_hashes % kBandsPerLevel != 0) {
        throw ConfigError("number of minhashes must be >= 8 and divisible by 4");
    }
    group_sizes.validate(num_hashes);
    make_compressor(compressor);
}

const LevelResult* HierarchyResult::level(int l) const {
    for (const auto& r : levels) {
        if (r.level == l) return &r;
    }
    return nullptr;
}

std::vector<LevelItem> make_level_items(std::span<const Record* const> records,
                                        const std::function<const FieldMask&(const Record&)>& mask_of, int level,
                                        const PipelineConfig& config) {
    const MinHasher hasher(config.num_hashes, config.seed);
    const BandLayout layout(level, config.group_sizes.at(level), config.num_hashes, config.band_seed);
    std::vector<LevelItem> items(records.size());
    parallel_for(records.size(), config.workers, [&](std::size_t, std::size_t i) {
        const Record& r = *records[i];
        const FieldMask& mask = mask_of(r);
        items[i].id = r.id;
        items[i].bytes = serialize_for_compression(r, mask);
        items[i].keys = layout.keys(hasher.signature(tokenize(r, mask)));
    });
    return items;
}

std::string corpus_digest(std::span<const Record> corpus) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const Record& r : corpus) {
        h = fnv1a64(record_line(r), h);
        h = fnv1a64("\n", h);
    }
    return to_hex16(h);
}

MaskTable complete_masks(std::span<const Record> corpus, MaskTable masks) {
    std::map<std::string, std::vector<const Record*>> by_provider;
    for (const Record& r : corpus) by_provider[r.provider].push_back(&r);
    for (const auto& [provider, records] : by_provider) {
        if (masks.count(provider)) continue;
        try {
            masks.emplace(provider, FieldMask({compulsory_field(records)}));
        } catch (const ConfigError&) {
            throw ConfigError("provider '" + provider + "' has no mask and neither dc:title nor dc:description");
        }
    }
    return masks;
}

namespace {

std::string now_utc() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

ClusterConfig level_config(const PipelineConfig& config, int level) {
    ClusterConfig c;
    c.level = level;
    c.max_iter = config.max_iter;
    c.seed = config.seed;
    c.workers = config.workers;
    c.max_heads = config.max_heads;
    c.band_match = config.band_match;
    c.compressor = config.compressor;
    return c;
}

}  // namespace

HierarchyResult run_hierarchy(std::span<const Record> corpus, const MaskTable& masks, const PipelineConfig& config) {
    config.validate();
    HierarchyResult result;
    result.manifest.config = config;
    result.manifest.compressor_id = config.compressor.id();
    result.manifest.started_at = now_utc();
    result.manifest.corpus_size = corpus.size();
    result.manifest.corpus_digest = corpus_digest(corpus);
    const MaskTable full_masks = complete_masks(corpus, masks);
    result.manifest.masks = full_masks;

    std::unordered_map<std::string, const Record*> by_id;
    std::vector<const Record*> originals;
    originals.reserve(corpus.size());
    for (const Record& r : corpus) {
        if (!by_id.emplace(r.id, &r).second) throw ConfigError("duplicate record id " + r.id);
        originals.push_back(&r);
    }

    const FieldMask all = FieldMask::all();
    auto all_fields = [&](const Record&) -> const FieldMask& { return all; };
    auto provider_mask = [&](const Record& r) -> const FieldMask& { return full_masks.at(r.provider); };

    auto timed_level = [&](std::span<const Record* const> population, int level,
                           const std::function<const FieldMask&(const Record&)>& mask_of) {
        const auto start = std::chrono::steady_clock::now();
        auto items = make_level_items(population, mask_of, level, config);
        LevelResult lr = cluster_level(items, level_config(config, level));
        const std::chrono::duration<double> took = std::chrono::steady_clock::now() - start;
        result.timings.push_back({level, population.size(), lr.clusters.size(), took.count()});
        return lr;
    };

    auto summarize = [&](const LevelResult& lr) {
        for (const Cluster& c : lr.clusters) {
            std::vector<const Record*> parts{by_id.at(c.head)};
            for (const auto& m : c.members) parts.push_back(by_id.at(m));
            result.artificial.push_back(make_artificial_record(c, parts, config.value_cap));
        }
    };

    if (config.runs(100) && !corpus.empty()) {
        LevelResult lr = timed_level(originals, 100, all_fields);
        summarize(lr);
        result.levels.push_back(std::move(lr));
    }

    std::vector<HierarchyNode> nodes;
    std::vector<const Record*> population = originals;
    for (int level : {80, 60, 40, 20}) {
        if (!config.runs(level) || corpus.empty()) continue;
        std::vector<std::string> input_ids;
        input_ids.reserve(population.size());
        for (const Record* r : population) input_ids.push_back(r->id);
        result.chain_inputs.push_back(std::move(input_ids));

        LevelResult lr = timed_level(population, level, level == 80 ? std::function(provider_mask)
                                                                    : std::function(all_fields));
        std::vector<const Record*> next;
        std::unordered_set<std::string_view> clustered;
        for (const Cluster& c : lr.clusters) {
            std::vector<const Record*> parts{by_id.at(c.head)};
            for (const auto& m : c.members) parts.push_back(by_id.at(m));
            result.artificial.push_back(make_artificial_record(c, parts, config.value_cap));
            const Record& art = result.artificial.back();
            if (!by_id.emplace(art.id, &art).second) throw IntegrityError("cluster id collision " + art.id);
            next.push_back(&art);

            HierarchyNode node{c.id, level, c.head, c.members, art.id};
            node.children.push_back(c.head);
            std::sort(node.children.begin(), node.children.end());
            nodes.push_back(std::move(node));
            clustered.insert(c.head);
            clustered.insert(c.members.begin(), c.members.end());
        }
        for (const Record* r : population) {
            if (!clustered.count(r->id)) next.push_back(r);
        }
        population = std::move(next);
        result.levels.push_back(std::move(lr));
    }

    for (const Record* r : population) {
        if (r->kind == RecordKind::original) result.never_clustered.push_back(r->id);
    }
    std::sort(result.never_clustered.begin(), result.never_clustered.end());

    std::vector<std::string> original_ids;
    original_ids.reserve(corpus.size());
    for (const Record& r : corpus) original_ids.push_back(r.id);
    result.forest = Forest(std::move(nodes), std::move(original_ids));
    result.manifest.finished_at = now_utc();

    verify_hierarchy(corpus, result);
    return result;
}

void verify_hierarchy(std::span<const Record> corpus, const HierarchyResult& result) {
    std::vector<std::string> corpus_ids;
    corpus_ids.reserve(corpus.size());
    for (const Record& r : corpus) corpus_ids.push_back(r.id);

    std::size_t chain_index = 0;
    std::vector<std::string> previous_output;
    std::unordered_set<std::string> level100_ids;
    for (const LevelResult& lr : result.levels) {
        if (lr.level == 100) {
            check_partition(lr, corpus_ids);
            for (const auto& c : lr.clusters) level100_ids.insert(c.id);
            continue;
        }
        if (chain_index >= result.chain_inputs.size()) throw IntegrityError("missing chain population");
        const auto& input = result.chain_inputs[chain_index];
        check_partition(lr, input);

        std::vector<std::string> expected = chain_index == 0 ? corpus_ids : previous_output;
        std::vector<std::string> actual = input;
        std::sort(expected.begin(), expected.end());
        std::sort(actual.begin(), actual.end());
        if (expected != actual) {
            throw IntegrityError("level " + std::to_string(lr.level) + " input is not the previous level's output");
        }
        if (chain_index > 0 && input.size() > result.chain_inputs[chain_index - 1].size()) {
            throw IntegrityError("population grew at level " + std::to_string(lr.level));
        }

        std::unordered_set<std::string_view> input_set(input.begin(), input.end());
        previous_output.clear();
        for (const Cluster& c : lr.clusters) {
            const HierarchyNode* node = result.forest.find(c.id);
            if (node == nullptr || node->level != lr.level) throw IntegrityError("cluster missing from forest " + c.id);
            for (const auto& child : node->children) {
                if (!input_set.count(child)) throw IntegrityError("child " + child + " not in the level input");
            }
            auto expanded = result.forest.expand(c.id);
            if (std::adjacent_find(expanded.begin(), expanded.end()) != expanded.end()) {
                throw IntegrityError("overlapping children under " + c.id);
            }
            previous_output.push_back(c.id);
        }
        previous_output.insert(previous_output.end(), lr.unclustered.begin(), lr.unclustered.end());
        ++chain_index;
    }

    std::vector<std::string> covered = result.never_clustered;
    for (const auto& root : result.forest.roots()) {
        auto ids = result.forest.expand(root);
        covered.insert(covered.end(), ids.begin(), ids.end());
    }
    if (!result.chain_inputs.empty()) {
        std::sort(covered.begin(), covered.end());
        std::vector<std::string> all = corpus_ids;
        std::sort(all.begin(), all.end());
        if (covered != all) throw IntegrityError("forest roots and unclustered originals do not cover the corpus");
    }

    for (const auto& node : result.forest.nodes()) {
        if (level100_ids.count(node.cluster_id)) throw IntegrityError("level-100 cluster in the forest chain");
        for (const auto& child : node.children) {
            if (level100_ids.count(child)) throw IntegrityError("level-100 cluster in the forest chain");
        }
    }
}

}  // namespace metaclust
