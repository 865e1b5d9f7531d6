#include "metaclust/field_selection.hpp"
#include "metaclust/hierarchy.hpp"
#include "metaclust/record.hpp"
#include "metaclust/run_io.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace metaclust;

namespace {

enum ExitCode { kOk = 0, kFailure = 1, kConfig = 2, kIntegrity = 3 };

struct Options {
    std::string input;
    std::string output;
    std::string run;
    std::string masks;
    std::string levels = "100,80,60,40,20";
    std::uint64_t seed = kDefaultSeed;
    std::uint64_t band_seed = kDefaultSeed;
    std::size_t workers = 1;
    std::size_t num_hashes = kDefaultNumHashes;
    std::string group_sizes = GroupSizeTable().to_string();
    std::string band_match = "any";
    std::string compressor = "zlib";
    int compression_level = 6;
    int max_iter = 5;
    std::size_t max_heads = 10;
    std::size_t value_cap = kDefaultValueCap;
    GAConfig ga;
    std::size_t sample_n = 100;
    std::size_t max_members = 50;
};

std::vector<int> parse_levels(const std::string& spec) {
    std::vector<int> levels;
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ',')) {
        int l = 0;
        try {
            std::size_t used = 0;
            l = std::stoi(item, &used);
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw ConfigError("bad level '" + item + "'");
        }
        if (!is_level(l)) throw ConfigError("unsupported level " + std::to_string(l));
        levels.push_back(l);
    }
    if (levels.empty()) throw ConfigError("no levels given");
    std::sort(levels.begin(), levels.end(), std::greater<>());
    if (std::adjacent_find(levels.begin(), levels.end()) != levels.end()) throw ConfigError("repeated level");
    return levels;
}

PipelineConfig pipeline_config(const Options& o) {
    PipelineConfig c;
    c.levels = parse_levels(o.levels);
    c.seed = o.seed;
    c.band_seed = o.band_seed;
    c.workers = o.workers;
    c.num_hashes = o.num_hashes;
    c.group_sizes = GroupSizeTable::parse(o.group_sizes);
    c.band_match = parse_band_match(o.band_match);
    c.compressor = {o.compressor, o.compression_level};
    c.max_iter = o.max_iter;
    c.max_heads = o.max_heads;
    c.value_cap = o.value_cap;
    c.validate();
    make_compressor(c.compressor);
    return c;
}

GAConfig ga_config(const Options& o) {
    GAConfig g = o.ga;
    g.seed = o.seed;
    g.workers = o.workers;
    g.validate();
    return g;
}

json options_json(const std::string& command, const Options& o) {
    return {{"command", command},
            {"input", o.input},
            {"output", o.output},
            {"masks", o.masks},
            {"levels", o.levels},
            {"seed", o.seed},
            {"band_seed", o.band_seed},
            {"workers", o.workers},
            {"num_hashes", o.num_hashes},
            {"group_sizes", o.group_sizes},
            {"band_match", o.band_match},
            {"compressor", o.compressor},
            {"compression_level", o.compression_level},
            {"max_iter", o.max_iter},
            {"max_heads", o.max_heads},
            {"value_cap", o.value_cap},
            {"ga_pop", o.ga.population},
            {"ga_gens", o.ga.generations},
            {"ga_sample_cap", o.ga.sample_cap},
            {"min_provider_records", o.ga.min_provider_records}};
}

std::vector<Record> load_corpus(const std::string& path, const fs::path& rejects_dir) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read input " + path);
    IngestResult r = ingest(in);
    if (!rejects_dir.empty()) {
        fs::create_directories(rejects_dir);
        std::ofstream out(rejects_dir / files::kRejects, std::ios::binary);
        write_rejects(out, r.rejects);
    }
    if (!r.rejects.empty()) std::cerr << "warning: " << r.rejects.size() << " input lines rejected\n";
    return std::move(r.records);
}

void write_selection(const fs::path& dir, const FieldSelection& sel) {
    fs::create_directories(dir);
    std::ofstream js(dir / files::kFieldSelection, std::ios::binary);
    js << field_selection_to_json(sel).dump(2) << '\n';
    std::ofstream report(dir / files::kFieldReport, std::ios::binary);
    write_field_report(report, sel);
}

int cmd_cluster(const Options& o) {
    const PipelineConfig pipeline = pipeline_config(o);
    const GAConfig ga = ga_config(o);
    const fs::path out_dir(o.output);
    const std::vector<Record> corpus = load_corpus(o.input, out_dir);

    MaskTable masks;
    if (!o.masks.empty()) {
        std::ifstream in(o.masks, std::ios::binary);
        if (!in) throw ConfigError("cannot read mask file " + o.masks);
        masks = field_selection_from_json(json::parse(in)).masks();
    } else if (pipeline.runs(80)) {
        const FieldSelection sel = select_all_providers(corpus, ga, pipeline);
        write_selection(out_dir, sel);
        masks = sel.masks();
    }

    const HierarchyResult result = run_hierarchy(corpus, masks, pipeline);
    write_run(out_dir, result, options_json("cluster", o));
    write_timing_table(std::cout, result.timings);
    return kOk;
}

int cmd_select_fields(const Options& o) {
    const PipelineConfig pipeline = pipeline_config(o);
    const GAConfig ga = ga_config(o);
    const fs::path out_dir(o.output);
    const std::vector<Record> corpus = load_corpus(o.input, out_dir);
    const FieldSelection sel = select_all_providers(corpus, ga, pipeline);
    write_selection(out_dir, sel);
    write_field_report(std::cout, sel);
    return kOk;
}

int cmd_sample_eval(const Options& o) {
    const fs::path run_dir(o.run);
    const RunData run = load_run(run_dir);
    const std::vector<Record> corpus = load_corpus(o.input, {});
    SampleOptions options;
    options.per_level = o.sample_n;
    options.seed = o.seed;
    options.max_members = o.max_members;
    const SampleResult sample = sample_for_evaluation(run, corpus, options);
    for (const auto& w : sample.warnings) std::cerr << "warning: " << w << '\n';
    const fs::path out = o.output.empty() ? run_dir / files::kEvalSample : fs::path(o.output);
    std::ofstream file(out, std::ios::binary);
    if (!file) throw ConfigError("cannot write " + out.string());
    for (const auto& row : sample.rows) file << dump_line(row) << '\n';
    std::cout << sample.rows.size() << " clusters written to " << out.string() << '\n';
    return kOk;
}

int cmd_stats(const Options& o) {
    const fs::path run_dir(o.run);
    const RunData run = load_run(run_dir);
    const json stats = compute_stats(run);
    const fs::path out = o.output.empty() ? run_dir / files::kStats : fs::path(o.output);
    std::ofstream file(out, std::ios::binary);
    if (!file) throw ConfigError("cannot write " + out.string());
    file << stats.dump(2) << '\n';
    std::cout << stats.dump(2) << '\n';

    const fs::path summary = run_dir / files::kSummary;
    if (fs::exists(summary)) {
        std::ifstream in(summary, std::ios::binary);
        if (json::parse(in) != stats) {
            std::cerr << "error: statistics differ from " << summary.string() << '\n';
            return kIntegrity;
        }
    }
    return kOk;
}

void add_pipeline_flags(CLI::App* cmd, Options& o) {
    cmd->add_option("--levels", o.levels, "comma-separated similarity levels")->capture_default_str();
    cmd->add_option("--seed", o.seed)->capture_default_str();
    cmd->add_option("--band-seed", o.band_seed, "seed of the band position permutation")->capture_default_str();
    cmd->add_option("--workers", o.workers)->capture_default_str()->check(CLI::PositiveNumber);
    cmd->add_option("--num-hashes", o.num_hashes, "minhash signature length")->capture_default_str();
    cmd->add_option("--group-sizes", o.group_sizes, "level:size list of band widths")->capture_default_str();
    cmd->add_option("--band-match", o.band_match, "any or all")->capture_default_str();
    cmd->add_option("--compressor", o.compressor)->capture_default_str();
    cmd->add_option("--compression-level", o.compression_level)->capture_default_str();
    cmd->add_option("--max-iter", o.max_iter)->capture_default_str();
    cmd->add_option("--max-heads", o.max_heads)->capture_default_str();
    cmd->add_option("--value-cap", o.value_cap, "values kept per field in artificial records")
        ->capture_default_str();
}

void add_ga_flags(CLI::App* cmd, Options& o) {
    cmd->add_option("--ga-pop", o.ga.population)->capture_default_str();
    cmd->add_option("--ga-gens", o.ga.generations)->capture_default_str();
    cmd->add_option("--ga-sample-cap", o.ga.sample_cap)->capture_default_str();
    cmd->add_option("--min-provider-records", o.ga.min_provider_records)->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-level clustering of metadata record corpora"};
    app.require_subcommand(1);
    Options o;

    auto* cluster = app.add_subcommand("cluster", "run the clustering hierarchy");
    cluster->add_option("--input", o.input, "newline-delimited records")->required();
    cluster->add_option("--output", o.output, "run directory")->required();
    cluster->add_option("--masks", o.masks, "field_selection.json from select-fields");
    add_pipeline_flags(cluster, o);
    add_ga_flags(cluster, o);

    auto* select = app.add_subcommand("select-fields", "choose level-80 fields per provider");
    select->add_option("--input", o.input)->required();
    select->add_option("--output", o.output, "output directory")->required();
    add_pipeline_flags(select, o);
    add_ga_flags(select, o);

    auto* sample = app.add_subcommand("sample-eval", "export clusters for manual evaluation");
    sample->add_option("--run", o.run, "run directory")->required();
    sample->add_option("--input", o.input, "the corpus the run was made from")->required();
    sample->add_option("--output", o.output, "output file");
    sample->add_option("--n", o.sample_n, "clusters per level")->capture_default_str();
    sample->add_option("--seed", o.seed)->capture_default_str();
    sample->add_option("--max-members", o.max_members)->capture_default_str();

    auto* stats = app.add_subcommand("stats", "cluster size statistics of a run");
    stats->add_option("--run", o.run, "run directory")->required();
    stats->add_option("--output", o.output, "output file");

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand(cluster)) return cmd_cluster(o);
        if (app.got_subcommand(select)) return cmd_select_fields(o);
        if (app.got_subcommand(sample)) return cmd_sample_eval(o);
        return cmd_stats(o);
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return kConfig;
    } catch (const IntegrityError& e) {
        std::cerr << "integrity error: " << e.what() << '\n';
        return kIntegrity;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kFailure;
    }
}
