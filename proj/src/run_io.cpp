#include "metaclust/run_io.hpp"

#include "metaclust/hashing.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

namespace metaclust {

namespace fs = std::filesystem;

std::string dump_line(const json& j) { return j.dump(-1, ' ', false, json::error_handler_t::replace); }

std::string files::level_file(int level) { return "level_" + std::to_string(level) + ".ndjson"; }

void write_level_result(std::ostream& out, const LevelResult& r) {
    out << dump_line({{"type", "level"},
                      {"level", r.level},
                      {"input_count", r.input_count},
                      {"iterations_used", r.iterations_used},
                      {"clusters", r.clusters.size()},
                      {"unclustered", r.unclustered.size()}})
        << '\n';
    for (const Cluster& c : r.clusters) {
        out << dump_line({{"type", "cluster"},
                          {"cluster_id", c.id},
                          {"level", c.level},
                          {"head", c.head},
                          {"members", c.members},
                          {"size", c.size()},
                          {"mean_head_similarity", c.mean_head_similarity}})
            << '\n';
    }
    for (const auto& id : r.unclustered) out << dump_line({{"type", "unclustered"}, {"id", id}}) << '\n';
}

LevelResult read_level_result(std::istream& in) {
    LevelResult r;
    std::string line;
    bool header = false;
    std::size_t expected_clusters = 0;
    std::size_t expected_unclustered = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const json j = json::parse(line);
        const auto type = j.at("type").get<std::string>();
        if (type == "level") {
            r.level = j.at("level").get<int>();
            r.input_count = j.at("input_count").get<std::size_t>();
            r.iterations_used = j.at("iterations_used").get<std::size_t>();
            expected_clusters = j.at("clusters").get<std::size_t>();
            expected_unclustered = j.at("unclustered").get<std::size_t>();
            header = true;
        } else if (type == "cluster") {
            Cluster c;
            c.id = j.at("cluster_id").get<std::string>();
            c.level = j.at("level").get<int>();
            c.head = j.at("head").get<std::string>();
            c.members = j.at("members").get<std::vector<std::string>>();
            c.mean_head_similarity = j.at("mean_head_similarity").get<double>();
            r.clusters.push_back(std::move(c));
        } else if (type == "unclustered") {
            r.unclustered.push_back(j.at("id").get<std::string>());
        } else {
            throw std::runtime_error("unknown level file line type " + type);
        }
    }
    if (!header) throw std::runtime_error("level file has no header line");
    if (r.clusters.size() != expected_clusters || r.unclustered.size() != expected_unclustered) {
        throw std::runtime_error("level file is truncated");
    }
    return r;
}

void write_forest(std::ostream& out, const Forest& forest) {
    for (const HierarchyNode& n : forest.nodes()) {
        out << dump_line({{"cluster_id", n.cluster_id},
                          {"level", n.level},
                          {"head", n.head},
                          {"children", n.children},
                          {"artificial_record_id", n.artificial_record_id},
                          {"category", ""}})
            << '\n';
    }
}

std::vector<HierarchyNode> read_forest(std::istream& in) {
    std::vector<HierarchyNode> nodes;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const json j = json::parse(line);
        nodes.push_back({j.at("cluster_id").get<std::string>(), j.at("level").get<int>(),
                         j.at("head").get<std::string>(), j.at("children").get<std::vector<std::string>>(),
                         j.at("artificial_record_id").get<std::string>()});
    }
    return nodes;
}

void write_id_lines(std::ostream& out, const std::vector<std::string>& ids) {
    for (const auto& id : ids) out << dump_line({{"id", id}}) << '\n';
}

std::vector<std::string> read_id_lines(std::istream& in) {
    std::vector<std::string> ids;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty()) ids.push_back(json::parse(line).at("id").get<std::string>());
    }
    return ids;
}

void write_duplicate_report(std::ostream& out, const LevelResult& level100, const std::deque<Record>& artificial) {
    std::unordered_map<std::string_view, const Record*> by_id;
    for (const Record& r : artificial) by_id.emplace(r.id, &r);
    for (const Cluster& c : level100.clusters) {
        json fields = json::object();
        if (auto it = by_id.find(c.id); it != by_id.end()) {
            for (const Field& f : it->second->fields) fields[f.name] = f.values;
        }
        out << dump_line({{"cluster_id", c.id},
                          {"head", c.head},
                          {"members", c.members},
                          {"size", c.size()},
                          {"artificial_record", {{"id", c.id}, {"fields", std::move(fields)}}}})
            << '\n';
    }
}

json field_selection_to_json(const FieldSelection& selection) {
    json providers = json::object();
    for (const auto& [name, sel] : selection.providers) {
        providers[name] = {{"fields", sel.mask.fields()},
                           {"fitness", sel.fitness ? json(*sel.fitness) : json(nullptr)},
                           {"records", sel.record_count},
                           {"evolved", sel.evolved}};
    }
    return {{"providers", std::move(providers)},
            {"field_counts", selection.field_counts()},
            {"combination_counts", selection.combination_counts()}};
}

FieldSelection field_selection_from_json(const json& j) {
    FieldSelection out;
    for (const auto& [name, p] : j.at("providers").items()) {
        ProviderSelection sel;
        auto fields = p.at("fields").get<std::set<std::string>>();
        if (fields.empty()) throw ConfigError("empty mask for provider " + name);
        sel.mask = FieldMask(std::move(fields));
        if (p.contains("fitness") && !p.at("fitness").is_null()) sel.fitness = p.at("fitness").get<double>();
        sel.record_count = p.value("records", std::size_t{0});
        sel.evolved = p.value("evolved", false);
        out.providers.emplace(name, std::move(sel));
    }
    return out;
}

void write_field_report(std::ostream& out, const FieldSelection& selection, std::size_t top) {
    auto ranked = [](const std::map<std::string, std::size_t>& counts) {
        std::vector<std::pair<std::string, std::size_t>> v(counts.begin(), counts.end());
        std::stable_sort(v.begin(), v.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
        return v;
    };
    std::size_t evolved = 0;
    for (const auto& [name, sel] : selection.providers) evolved += sel.evolved ? 1 : 0;
    out << "providers\t" << selection.providers.size() << "\nevolved\t" << evolved << "\n\n";
    out << "rank\t#providers\tmetadata field\n";
    std::size_t i = 0;
    for (const auto& [field, n] : ranked(selection.field_counts())) {
        if (i++ >= top) break;
        out << i << '\t' << n << '\t' << field << '\n';
    }
    out << "\nrank\t#providers\tfield combination\n";
    i = 0;
    for (const auto& [combo, n] : ranked(selection.combination_counts())) {
        if (i++ >= top) break;
        std::string spaced = combo;
        std::replace(spaced.begin(), spaced.end(), '+', ' ');
        out << i << '\t' << n << '\t' << spaced << '\n';
    }
}

json manifest_to_json(const RunManifest& m) {
    const PipelineConfig& c = m.config;
    json masks = json::object();
    for (const auto& [provider, mask] : m.masks) masks[provider] = mask.fields();
    json sizes = json::object();
    for (const auto& [level, g] : c.group_sizes.entries()) sizes[std::to_string(level)] = g;
    return {{"levels", c.levels},
            {"seed", c.seed},
            {"band_seed", c.band_seed},
            {"workers", c.workers},
            {"num_hashes", c.num_hashes},
            {"shingle_length", kShingleLength},
            {"hash_family", "fnv1a64+splitmix64"},
            {"group_sizes", sizes},
            {"band_match", std::string(to_string(c.band_match))},
            {"max_iter", c.max_iter},
            {"max_heads", c.max_heads},
            {"compressor", {{"name", c.compressor.name}, {"level", c.compressor.level}, {"id", m.compressor_id}}},
            {"value_cap", c.value_cap},
            {"masks", masks},
            {"corpus_digest", m.corpus_digest},
            {"corpus_size", m.corpus_size},
            {"started_at", m.started_at},
            {"finished_at", m.finished_at}};
}

std::string format_duration(double seconds) {
    const auto minutes = static_cast<long>(seconds / 60.0);
    char buf[64];
    std::snprintf(buf, sizeof buf, "%ldm%.2fs", minutes, seconds - 60.0 * static_cast<double>(minutes));
    return buf;
}

void write_timing_table(std::ostream& out, const std::vector<LevelTiming>& timings) {
    out << "similarity_level\trecords_to_be_clustered\tclusters\ttime\n";
    for (const auto& t : timings) {
        out << t.level << '\t' << t.input_count << '\t' << t.cluster_count << '\t' << format_duration(t.seconds)
            << '\n';
    }
}

RunData run_data(const HierarchyResult& result) {
    return {result.levels, result.forest.nodes(), result.never_clustered};
}

namespace {

std::ofstream open_out(const fs::path& p) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    return out;
}

std::ifstream open_in(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + p.string());
    return in;
}

Forest forest_of(const RunData& run) {
    std::unordered_set<std::string> nodes;
    for (const auto& n : run.forest) nodes.insert(n.cluster_id);
    std::vector<std::string> leaves;
    for (const auto& n : run.forest) {
        for (const auto& c : n.children) {
            if (!nodes.count(c)) leaves.push_back(c);
        }
    }
    return Forest(run.forest, std::move(leaves));
}

json size_summary(const std::vector<std::size_t>& sizes) {
    if (sizes.empty()) return {{"count", 0}, {"min", nullptr}, {"max", nullptr}, {"mean", nullptr}};
    std::size_t sum = 0;
    for (auto s : sizes) sum += s;
    return {{"count", sizes.size()},
            {"min", *std::min_element(sizes.begin(), sizes.end())},
            {"max", *std::max_element(sizes.begin(), sizes.end())},
            {"mean", static_cast<double>(sum) / static_cast<double>(sizes.size())}};
}

std::string bucket_label(std::size_t size) {
    std::size_t hi = 2;
    while (hi < size) hi *= 2;
    const std::size_t lo = hi / 2 + 1;
    return lo == hi ? std::to_string(hi) : std::to_string(lo) + "-" + std::to_string(hi);
}

json histogram(const std::vector<std::size_t>& sizes) {
    std::map<std::size_t, std::pair<std::string, std::size_t>> buckets;
    for (auto s : sizes) {
        std::size_t hi = 2;
        while (hi < s) hi *= 2;
        auto& b = buckets[hi];
        b.first = bucket_label(s);
        ++b.second;
    }
    json out = json::array();
    for (const auto& [hi, b] : buckets) out.push_back({{"sizes", b.first}, {"clusters", b.second}});
    return out;
}

}  // namespace

void write_run(const fs::path& dir, const HierarchyResult& result, const json& run_config) {
    fs::create_directories(dir);
    for (const LevelResult& lr : result.levels) {
        auto out = open_out(dir / files::level_file(lr.level));
        write_level_result(out, lr);
    }
    {
        auto out = open_out(dir / files::kForest);
        write_forest(out, result.forest);
    }
    {
        auto out = open_out(dir / files::kNeverClustered);
        write_id_lines(out, result.never_clustered);
    }
    {
        auto out = open_out(dir / files::kArtificial);
        for (const Record& r : result.artificial) out << record_line(r) << '\n';
    }
    if (const LevelResult* l100 = result.level(100)) {
        auto out = open_out(dir / files::kDuplicates);
        write_duplicate_report(out, *l100, result.artificial);
    }
    {
        auto out = open_out(dir / files::kTiming);
        write_timing_table(out, result.timings);
    }
    {
        json manifest = manifest_to_json(result.manifest);
        manifest["run_config"] = run_config;
        auto out = open_out(dir / files::kManifest);
        out << manifest.dump(2, ' ', false, json::error_handler_t::replace) << '\n';
    }
    {
        auto out = open_out(dir / files::kSummary);
        out << compute_stats(run_data(result)).dump(2, ' ', false, json::error_handler_t::replace) << '\n';
    }
}

RunData load_run(const fs::path& dir) {
    auto manifest_in = open_in(dir / files::kManifest);
    const json manifest = json::parse(manifest_in);
    RunData run;
    for (int level : manifest.at("levels").get<std::vector<int>>()) {
        const fs::path p = dir / files::level_file(level);
        if (!fs::exists(p)) {
            // Levels with an empty corpus produce no file.
            if (manifest.at("corpus_size").get<std::size_t>() == 0) continue;
            throw std::runtime_error("missing " + p.string());
        }
        auto in = open_in(p);
        run.levels.push_back(read_level_result(in));
    }
    std::sort(run.levels.begin(), run.levels.end(),
              [](const LevelResult& a, const LevelResult& b) { return a.level > b.level; });
    auto forest_in = open_in(dir / files::kForest);
    run.forest = read_forest(forest_in);
    auto never_in = open_in(dir / files::kNeverClustered);
    run.never_clustered = read_id_lines(never_in);
    return run;
}

json compute_stats(const RunData& run) {
    const Forest forest = forest_of(run);
    json levels = json::array();
    for (const LevelResult& lr : run.levels) {
        std::vector<std::size_t> direct;
        std::vector<std::size_t> originals;
        for (const Cluster& c : lr.clusters) {
            direct.push_back(c.size());
            originals.push_back(lr.level == 100 ? c.size() : forest.expand(c.id).size());
        }
        levels.push_back({{"level", lr.level},
                          {"input_count", lr.input_count},
                          {"clusters", lr.clusters.size()},
                          {"unclustered", lr.unclustered.size()},
                          {"iterations_used", lr.iterations_used},
                          {"cluster_size", size_summary(direct)},
                          {"original_records_per_cluster", size_summary(originals)},
                          {"size_histogram", histogram(direct)}});
    }
    std::map<std::size_t, std::size_t> depths;
    const auto roots = forest.roots();
    for (const auto& r : roots) ++depths[forest.depth(r)];
    json depth_json = json::object();
    for (const auto& [d, n] : depths) depth_json[std::to_string(d)] = n;
    return {{"levels", std::move(levels)},
            {"forest",
             {{"nodes", run.forest.size()},
              {"roots", roots.size()},
              {"never_clustered_originals", run.never_clustered.size()},
              {"root_depth_distribution", std::move(depth_json)}}},
            {"reference_full_corpus",
             {{"records", 23595555},
              {"level_20_original_records_per_cluster", {{"min", 2}, {"max", 456155}, {"mean", 190}}}}}};
}

SampleResult sample_for_evaluation(const RunData& run, std::span<const Record> corpus, const SampleOptions& options) {
    std::unordered_map<std::string_view, const Record*> by_id;
    for (const Record& r : corpus) by_id.emplace(r.id, &r);
    const Forest forest = forest_of(run);
    json categories = json::array();
    for (auto c : kCategories) categories.push_back(std::string(c));

    SampleResult out;
    for (const LevelResult& lr : run.levels) {
        const std::size_t n = lr.clusters.size();
        std::vector<std::size_t> picked(n);
        std::iota(picked.begin(), picked.end(), std::size_t{0});
        if (n < options.per_level) {
            out.warnings.push_back("level " + std::to_string(lr.level) + ": only " + std::to_string(n) +
                                   " clusters, exporting all");
        } else {
            Rng rng(combine64(options.seed, static_cast<std::uint64_t>(lr.level)));
            for (std::size_t i = 0; i < options.per_level; ++i) {
                const auto j = i + static_cast<std::size_t>(rng.uniform_index(n - i));
                std::swap(picked[i], picked[j]);
            }
            picked.resize(options.per_level);
            std::sort(picked.begin(), picked.end());
        }
        for (std::size_t idx : picked) {
            const Cluster& c = lr.clusters[idx];
            std::vector<std::string> originals;
            if (lr.level == 100) {
                originals = c.members;
                originals.push_back(c.head);
                std::sort(originals.begin(), originals.end());
            } else {
                originals = forest.expand(c.id);
            }
            json members = json::array();
            for (std::size_t i = 0; i < originals.size() && i < options.max_members; ++i) {
                json fields = json::object();
                if (auto it = by_id.find(originals[i]); it != by_id.end()) {
                    for (const Field& f : it->second->fields) fields[f.name] = f.values;
                }
                members.push_back({{"id", originals[i]}, {"fields", std::move(fields)}});
            }
            out.rows.push_back({{"level", lr.level},
                                {"cluster_id", c.id},
                                {"size", c.size()},
                                {"original_count", originals.size()},
                                {"members", std::move(members)},
                                {"category", ""},
                                {"category_options", categories}});
        }
    }
    return out;
}

}  // namespace metaclust
