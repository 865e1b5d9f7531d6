#pragma once

#include "metaclust/level_clusterer.hpp"
#include "metaclust/minhash.hpp"
#include "metaclust/record.hpp"

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace metaclust {

inline constexpr std::uint64_t kDefaultSeed = 20130201;
inline constexpr std::size_t kDefaultValueCap = 20;

/// Summary record of a cluster: per field, the distinct values of the
/// constituents ordered by descending frequency then lexicographically,
/// capped at value_cap. Takes the head's provider; provenance lists the
/// head followed by the members.
Record make_artificial_record(const Cluster& cluster, std::span<const Record* const> constituents,
                              std::size_t value_cap = kDefaultValueCap);

struct HierarchyNode {
    std::string cluster_id;
    int level = 80;
    std::string head;
    std::vector<std::string> children;  // sorted
    std::string artificial_record_id;

    bool operator==(const HierarchyNode&) const = default;
};

/// Cluster forest over the 80 → 20 chain.
class Forest {
public:
    Forest() = default;
    Forest(std::vector<HierarchyNode> nodes, std::vector<std::string> originals);

    const std::vector<HierarchyNode>& nodes() const noexcept { return nodes_; }
    const HierarchyNode* find(const std::string& id) const;

    /// Original record ids under a node or id. Throws IntegrityError on a
    /// child that is neither a node nor a known original.
    std::vector<std::string> expand(const std::string& id) const;

    /// Nodes that are nobody's child, in node order.
    std::vector<std::string> roots() const;

    /// Longest node chain below a node (a leaf cluster of originals is 1).
    std::size_t depth(const std::string& id) const;

private:
    void expand_into(const std::string& id, std::vector<std::string>& out) const;

    std::vector<HierarchyNode> nodes_;
    std::unordered_map<std::string, std::size_t> index_;
    std::unordered_map<std::string, bool> originals_;
};

/// Provider → mask used at level 80.
using MaskTable = std::map<std::string, FieldMask>;

/// Compulsory field for a provider's records: dc:title when any record
/// has it, else dc:description. Throws ConfigError when neither occurs.
std::string compulsory_field(std::span<const Record* const> provider_records);

struct PipelineConfig {
    std::vector<int> levels{100, 80, 60, 40, 20};
    std::uint64_t seed = kDefaultSeed;
    std::uint64_t band_seed = kDefaultSeed;
    std::size_t workers = 1;
    std::size_t num_hashes = kDefaultNumHashes;
    GroupSizeTable group_sizes;
    BandMatch band_match = BandMatch::any;
    int max_iter = 5;
    std::size_t max_heads = 10;
    CompressorSpec compressor;
    std::size_t value_cap = kDefaultValueCap;

    bool runs(int level) const;
    void validate() const;
};

struct RunManifest {
    PipelineConfig config;
    std::string compressor_id;
    MaskTable masks;
    std::string corpus_digest;
    std::size_t corpus_size = 0;
    std::string started_at;
    std::string finished_at;
};

struct LevelTiming {
    int level = 0;
    std::size_t input_count = 0;
    std::size_t cluster_count = 0;
    double seconds = 0.0;
};

struct HierarchyResult {
    std::vector<LevelResult> levels;  // in run order, level 100 first when run
    Forest forest;
    std::deque<Record> artificial;    // every artificial record, level-100 ones included
    std::vector<std::string> never_clustered;  // originals outside every chain cluster, sorted
    std::vector<std::vector<std::string>> chain_inputs;  // input ids per chain level run
    std::vector<LevelTiming> timings;
    RunManifest manifest;

    const LevelResult* level(int l) const;
};

/// Reduces records to level items: bytes and band keys of the selected
/// fields. `mask_of` picks the mask per record.
std::vector<LevelItem> make_level_items(std::span<const Record* const> records,
                                        const std::function<const FieldMask&(const Record&)>& mask_of, int level,
                                        const PipelineConfig& config);

/// Digest over the records in their export form.
std::string corpus_digest(std::span<const Record> corpus);

/// Fills in the default mask for every provider that lacks one.
MaskTable complete_masks(std::span<const Record> corpus, MaskTable masks);

/// Level 100 over all fields, level 80 over originals with per-provider
/// masks, then 60/40/20 over the previous level's artificial records and
/// unclustered entities, all fields. Verifies the hierarchy before
/// returning; throws IntegrityError on any violation.
HierarchyResult run_hierarchy(std::span<const Record> corpus, const MaskTable& masks, const PipelineConfig& config);

/// Partition of every level, refinement and disjointness of the forest,
/// conservation of the corpus, and population shrinkage over the chain.
void verify_hierarchy(std::span<const Record> corpus, const HierarchyResult& result);

}  // namespace metaclust
