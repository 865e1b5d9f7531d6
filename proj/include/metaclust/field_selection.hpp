#pragma once

#include "metaclust/hierarchy.hpp"
#include "metaclust/level_clusterer.hpp"
#include "metaclust/record.hpp"

#include <cstdint>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace metaclust {

/// Fitness of degenerate clusterings (fewer than two clusters).
inline constexpr double kSentinelFitness = std::numeric_limits<double>::lowest();

/// Floor applied to the within-cluster distance so that perfectly tight
/// clusterings score high instead of dividing by zero.
inline constexpr double kMinWithinDistance = 1e-6;

/// ln(avg_size) * between / within.
double variance_ratio_fitness(double avg_size, double between, double within);

struct FitnessOptions {
    std::size_t pair_sample = 1000;
    std::uint64_t seed = kDefaultSeed;
    std::size_t value_cap = kDefaultValueCap;
    CompressorSpec compressor;
};

struct FitnessBreakdown {
    double avg_size = 0.0;
    double within = 0.0;
    double between = 0.0;
    double fitness = kSentinelFitness;
};

/// Scores a clustering of `records` under `mask`. Avg is the mean cluster
/// size (head + members); within is the mean over clusters of the mean
/// head→member distance; between is the mean distance between the
/// clusters' artificial records over all pairs, or over pair_sample seeded
/// pairs when there are more. Distance is 1 - similarity on the masked
/// bytes. Unclustered records are ignored.
FitnessBreakdown evaluate_fitness(std::span<const Cluster> clusters, std::span<const Record* const> records,
                                  const FieldMask& mask, const FitnessOptions& options);

struct GAConfig {
    std::size_t population = 50;
    std::size_t generations = 100;
    double crossover_rate = 0.9;
    double mutation_rate = -1.0;  // negative: 1 / chromosome length
    std::size_t tournament = 2;
    std::size_t elitism = 1;
    std::size_t sample_cap = 50000;
    std::size_t min_provider_records = 100;
    std::size_t pair_sample = 1000;
    std::uint64_t seed = kDefaultSeed;
    std::size_t workers = 1;

    void validate() const;
};

/// Candidate field names of a provider: every field seen in its records
/// except the provider-key fields, sorted.
std::vector<std::string> provider_fields(std::span<const Record* const> records);

/// Level-80 clustering fitness per field mask, cached by bit vector.
/// Safe to call from several threads.
class FitnessEvaluator {
public:
    FitnessEvaluator(std::span<const Record* const> records, std::vector<std::string> fields,
                     const PipelineConfig& pipeline, const GAConfig& ga);

    const std::vector<std::string>& fields() const noexcept { return fields_; }
    std::size_t compulsory_bit() const noexcept { return compulsory_; }

    FieldMask mask(const std::vector<std::uint8_t>& bits) const;
    double operator()(const std::vector<std::uint8_t>& bits);
    std::size_t evaluations() const;
    /// Every distinct bit vector scored so far, in lexicographic order.
    std::vector<std::vector<std::uint8_t>> evaluated() const;

private:
    std::vector<const Record*> records_;
    std::vector<std::string> fields_;
    std::size_t compulsory_ = 0;
    PipelineConfig pipeline_;
    FitnessOptions options_;
    mutable std::mutex mutex_;
    std::map<std::vector<std::uint8_t>, double> cache_;
};

struct Chromosome {
    std::vector<std::uint8_t> bits;
    std::optional<double> fitness;
};

struct EvolveResult {
    FieldMask mask;
    double fitness = kSentinelFitness;
    std::vector<double> best_per_generation;  // best-ever after the initial population and each generation
    std::size_t evaluations = 0;
    std::vector<FieldMask> evaluated;  // every distinct mask scored during the run
    bool evolved = false;
};

/// Generational GA over the provider's field bits with tournament
/// selection, single-point crossover, bit-flip mutation and elitism. The
/// compulsory bit is set after every operator. Throws ConfigError when the
/// provider has no candidate fields.
EvolveResult evolve(std::span<const Record* const> records, const GAConfig& config, const PipelineConfig& pipeline);

struct ProviderSelection {
    FieldMask mask;
    std::optional<double> fitness;
    std::size_t record_count = 0;
    bool evolved = false;
};

struct FieldSelection {
    std::map<std::string, ProviderSelection> providers;

    MaskTable masks() const;
    /// Number of providers selecting each field.
    std::map<std::string, std::size_t> field_counts() const;
    /// Number of providers per selected combination, keyed by FieldMask::key().
    std::map<std::string, std::size_t> combination_counts() const;
};

/// Runs evolve() for providers with more than min_provider_records records
/// and gives every other provider its compulsory field alone.
FieldSelection select_all_providers(std::span<const Record> corpus, const GAConfig& config,
                                    const PipelineConfig& pipeline);

}  // namespace metaclust
