#pragma once

#include "metaclust/compression.hpp"
#include "metaclust/hashing.hpp"
#include "metaclust/minhash.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace metaclust {

/// One entry of a level pass: an original or artificial record reduced to
/// its compression bytes and band keys.
struct LevelItem {
    std::string id;
    std::string bytes;
    BandKeySet keys;
};

struct Cluster {
    std::string id;
    int level = 100;
    std::string head;
    std::vector<std::string> members;  // sorted, head excluded
    double mean_head_similarity = 0.0;

    std::size_t size() const noexcept { return members.size() + 1; }
    bool operator==(const Cluster&) const = default;
};

struct LevelResult {
    int level = 100;
    std::vector<Cluster> clusters;       // sorted by head id
    std::vector<std::string> unclustered;  // sorted
    std::size_t iterations_used = 0;
    std::size_t input_count = 0;

    bool operator==(const LevelResult&) const = default;
};

struct ClusterConfig {
    int level = 100;
    int max_iter = 5;
    std::uint64_t seed = 0;
    std::size_t workers = 1;
    std::size_t max_heads = 10;
    BandMatch band_match = BandMatch::any;
    CompressorSpec compressor;

    double threshold() const noexcept { return level / 100.0; }
};

/// "L<level>-" followed by the hex digest of the sorted head+member ids.
std::string make_cluster_id(int level, std::vector<std::string> ids);

/// sim(a, b) between two item indices; a is the head side.
using SimilarityFn = std::function<double(std::uint32_t, std::uint32_t)>;

/// Scans `group` in rng-shuffled order and keeps a record as a head when
/// its similarity to every head kept so far is below the threshold.
/// Returns at least one head for a non-empty group, at most max_heads.
std::vector<std::uint32_t> select_heads(std::span<const std::uint32_t> group, double threshold, Rng& rng,
                                        const SimilarityFn& sim, std::size_t max_heads = 10);

struct Candidate {
    std::uint32_t head = 0;
    std::vector<std::uint32_t> members;
    std::vector<double> member_similarity;  // sim(head, members[i])
};

/// Attaches every non-head record to its most similar head. Ties go to
/// the head with the smallest id; `rank` orders item indices by id.
/// Returns one candidate per head, in the order of `heads`.
std::vector<Candidate> assign_to_heads(std::span<const std::uint32_t> group, std::span<const std::uint32_t> heads,
                                       const SimilarityFn& sim, std::span<const std::uint32_t> rank);

struct Scored {
    std::uint32_t index = 0;
    double similarity = 0.0;
};

struct Validation {
    bool accepted = false;
    double mean = 0.0;
};

/// Accepts when the arithmetic mean of the scores, summed in ascending id
/// rank, is >= threshold. An empty score list is never accepted.
Validation validate_scores(std::span<const Scored> scores, double threshold, std::span<const std::uint32_t> rank);

Validation validate_candidate(const Candidate& candidate, double threshold, std::span<const std::uint32_t> rank);

/// Seed of the generator used for one stack pop. A set processed for the
/// k-th time (k from 0) at a given iteration gets
///   combine64(combine64(combine64(seed, level), iteration), combine64(digest, k))
/// where digest is digest_ids() over the group's ids in ascending order.
std::uint64_t group_seed(std::uint64_t seed, int level, std::size_t iteration, std::uint64_t digest,
                         std::uint32_t occurrence);

/// Iterative head-based clustering of one level over band-key groups.
/// Throws ConfigError when max_iter < 1 or ids repeat.
LevelResult cluster_level(std::span<const LevelItem> items, const ClusterConfig& config);

/// Throws IntegrityError unless clusters and unclustered partition the ids
/// of `items` and every cluster's recorded mean meets the threshold.
void check_partition(const LevelResult& result, std::span<const LevelItem> items);
void check_partition(const LevelResult& result, std::span<const std::string> ids);

}  // namespace metaclust
