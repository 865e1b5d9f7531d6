#pragma once

#include "metaclust/field_selection.hpp"
#include "metaclust/hierarchy.hpp"
#include "metaclust/level_clusterer.hpp"

#include <json.hpp>

#include <array>
#include <filesystem>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace metaclust {

using json = nlohmann::json;

/// Worksheet vocabulary for manual cluster evaluation.
inline constexpr std::array<std::string_view, 7> kCategories{
    "same objects/duplicate records",
    "views of the same object",
    "parts of an object",
    "derivative works",
    "collections",
    "thematic grouping",
    "nonsense",
};

std::string dump_line(const json& j);

/// Level file: a header line, one line per cluster, one per unclustered id.
void write_level_result(std::ostream& out, const LevelResult& r);
LevelResult read_level_result(std::istream& in);

void write_forest(std::ostream& out, const Forest& forest);
std::vector<HierarchyNode> read_forest(std::istream& in);

void write_id_lines(std::ostream& out, const std::vector<std::string>& ids);
std::vector<std::string> read_id_lines(std::istream& in);

/// Level-100 clusters with their summary records.
void write_duplicate_report(std::ostream& out, const LevelResult& level100, const std::deque<Record>& artificial);

json field_selection_to_json(const FieldSelection& selection);
FieldSelection field_selection_from_json(const json& j);
/// Plain-text tables: providers per field and per field combination.
void write_field_report(std::ostream& out, const FieldSelection& selection, std::size_t top = 10);

json manifest_to_json(const RunManifest& m);

/// "6m2.82s"
std::string format_duration(double seconds);
/// Tab-separated: level, records to be clustered, clusters, time.
void write_timing_table(std::ostream& out, const std::vector<LevelTiming>& timings);

/// Everything the stats and sample-eval commands read back from a run.
struct RunData {
    std::vector<LevelResult> levels;
    std::vector<HierarchyNode> forest;
    std::vector<std::string> never_clustered;
};

RunData run_data(const HierarchyResult& result);

namespace files {
inline constexpr std::string_view kManifest = "manifest.json";
inline constexpr std::string_view kForest = "forest.ndjson";
inline constexpr std::string_view kNeverClustered = "never_clustered.ndjson";
inline constexpr std::string_view kArtificial = "artificial_records.ndjson";
inline constexpr std::string_view kDuplicates = "duplicates.ndjson";
inline constexpr std::string_view kTiming = "timing.tsv";
inline constexpr std::string_view kSummary = "summary.json";
inline constexpr std::string_view kFieldSelection = "field_selection.json";
inline constexpr std::string_view kFieldReport = "field_report.txt";
inline constexpr std::string_view kRejects = "rejects.ndjson";
inline constexpr std::string_view kStats = "stats.json";
inline constexpr std::string_view kEvalSample = "eval_sample.ndjson";
std::string level_file(int level);
}  // namespace files

/// Writes every run file into `dir` (created if needed).
void write_run(const std::filesystem::path& dir, const HierarchyResult& result, const json& run_config);

/// Throws std::runtime_error when the manifest or a level file is missing.
RunData load_run(const std::filesystem::path& dir);

/// Per-level cluster size statistics, unclustered counts and forest depth
/// distribution.
json compute_stats(const RunData& run);

struct SampleOptions {
    std::size_t per_level = 100;
    std::uint64_t seed = kDefaultSeed;
    std::size_t max_members = 50;
};

struct SampleResult {
    std::vector<json> rows;
    std::vector<std::string> warnings;
};

/// Seeded sample of clusters per level with the metadata of their original
/// records and an empty category slot.
SampleResult sample_for_evaluation(const RunData& run, std::span<const Record> corpus, const SampleOptions& options);

}  // namespace metaclust
