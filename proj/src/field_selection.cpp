#include "metaclust/field_selection.hpp"

#include "metaclust/hashing.hpp"
#include "metaclust/thread_pool.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <unordered_map>

namespace metaclust {

double variance_ratio_fitness(double avg_size, double between, double within) {
    return std::log(avg_size) * between / within;
}

FitnessBreakdown evaluate_fitness(std::span<const Cluster> clusters, std::span<const Record* const> records,
                                  const FieldMask& mask, const FitnessOptions& options) {
    FitnessBreakdown out;
    if (clusters.empty()) return out;

    std::unordered_map<std::string_view, const Record*> by_id;
    for (const Record* r : records) by_id.emplace(r->id, r);
    auto lookup = [&](const std::string& id) {
        auto it = by_id.find(id);
        if (it == by_id.end()) throw IntegrityError("fitness: unknown record " + id);
        return it->second;
    };

    auto compressor = make_compressor(options.compressor);
    double size_sum = 0.0;
    double within_sum = 0.0;
    std::vector<std::string> summaries;
    summaries.reserve(clusters.size());
    for (const Cluster& c : clusters) {
        size_sum += static_cast<double>(c.size());
        const Record* head = lookup(c.head);
        const std::string head_bytes = serialize_for_compression(*head, mask);
        std::vector<const Record*> parts{head};
        double d = 0.0;
        for (const auto& m : c.members) {
            const Record* r = lookup(m);
            parts.push_back(r);
            d += 1.0 - similarity(head_bytes, serialize_for_compression(*r, mask), *compressor);
        }
        within_sum += c.members.empty() ? 0.0 : d / static_cast<double>(c.members.size());
        summaries.push_back(serialize_for_compression(make_artificial_record(c, parts, options.value_cap), mask));
    }
    const double k = static_cast<double>(clusters.size());
    out.avg_size = size_sum / k;
    out.within = within_sum / k;
    if (clusters.size() < 2) return out;

    const std::size_t n = clusters.size();
    const std::size_t total_pairs = n * (n - 1) / 2;
    double between_sum = 0.0;
    std::size_t pairs = 0;
    if (total_pairs <= options.pair_sample) {
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j, ++pairs) {
                between_sum += 1.0 - similarity(summaries[i], summaries[j], *compressor);
            }
        }
    } else {
        Rng rng(options.seed);
        for (; pairs < options.pair_sample; ++pairs) {
            const auto i = static_cast<std::size_t>(rng.uniform_index(n));
            auto j = static_cast<std::size_t>(rng.uniform_index(n - 1));
            if (j >= i) ++j;
            between_sum += 1.0 - similarity(summaries[i], summaries[j], *compressor);
        }
    }
    out.between = between_sum / static_cast<double>(pairs);
    out.fitness = variance_ratio_fitness(out.avg_size, out.between, std::max(out.within, kMinWithinDistance));
    return out;
}

void GAConfig::validate() const {
    if (population < 2) throw ConfigError("GA population must be >= 2");
    if (generations < 1) throw ConfigError("GA generations must be >= 1");
    if (tournament < 1) throw ConfigError("GA tournament size must be >= 1");
    if (elitism >= population) throw ConfigError("GA elitism must be smaller than the population");
    if (crossover_rate < 0.0 || crossover_rate > 1.0) throw ConfigError("GA crossover rate must be in [0, 1]");
    if (mutation_rate > 1.0) throw ConfigError("GA mutation rate must be <= 1");
    if (sample_cap < 2) throw ConfigError("GA sample cap must be >= 2");
}

std::vector<std::string> provider_fields(std::span<const Record* const> records) {
    std::set<std::string> names;
    for (const Record* r : records) {
        for (const Field& f : r->fields) {
            if (f.name != kDataProviderField && f.name != kProviderField) names.insert(f.name);
        }
    }
    return {names.begin(), names.end()};
}

FitnessEvaluator::FitnessEvaluator(std::span<const Record* const> records, std::vector<std::string> fields,
                                   const PipelineConfig& pipeline, const GAConfig& ga)
    : records_(records.begin(), records.end()), fields_(std::move(fields)), pipeline_(pipeline) {
    if (fields_.empty()) throw ConfigError("provider has no fields to select from");
    const std::string compulsory = compulsory_field(records);
    auto it = std::find(fields_.begin(), fields_.end(), compulsory);
    if (it == fields_.end()) throw ConfigError("compulsory field missing from field list");
    compulsory_ = static_cast<std::size_t>(it - fields_.begin());

    if (records_.size() > ga.sample_cap) {
        std::vector<std::size_t> idx(records_.size());
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        Rng rng(combine64(ga.seed, 0x5a3d1eULL));
        for (std::size_t i = 0; i < ga.sample_cap; ++i) {
            const auto j = i + static_cast<std::size_t>(rng.uniform_index(idx.size() - i));
            std::swap(idx[i], idx[j]);
        }
        idx.resize(ga.sample_cap);
        std::sort(idx.begin(), idx.end());
        std::vector<const Record*> sample;
        sample.reserve(idx.size());
        for (auto i : idx) sample.push_back(records_[i]);
        records_ = std::move(sample);
    }
    pipeline_.workers = 1;
    options_.pair_sample = ga.pair_sample;
    options_.seed = pipeline.seed;
    options_.value_cap = pipeline.value_cap;
    options_.compressor = pipeline.compressor;
}

FieldMask FitnessEvaluator::mask(const std::vector<std::uint8_t>& bits) const {
    std::set<std::string> selected;
    for (std::size_t i = 0; i < fields_.size(); ++i) {
        if (bits[i] != 0) selected.insert(fields_[i]);
    }
    return FieldMask(std::move(selected));
}

double FitnessEvaluator::operator()(const std::vector<std::uint8_t>& bits) {
    {
        std::lock_guard lock(mutex_);
        if (auto it = cache_.find(bits); it != cache_.end()) return it->second;
    }
    const FieldMask m = mask(bits);
    auto items = make_level_items(records_, [&](const Record&) -> const FieldMask& { return m; }, 80, pipeline_);
    ClusterConfig cc;
    cc.level = 80;
    cc.max_iter = pipeline_.max_iter;
    cc.seed = pipeline_.seed;
    cc.workers = 1;
    cc.max_heads = pipeline_.max_heads;
    cc.band_match = pipeline_.band_match;
    cc.compressor = pipeline_.compressor;
    const LevelResult lr = cluster_level(items, cc);
    const double f = evaluate_fitness(lr.clusters, records_, m, options_).fitness;
    std::lock_guard lock(mutex_);
    cache_.emplace(bits, f);
    return f;
}

std::size_t FitnessEvaluator::evaluations() const {
    std::lock_guard lock(mutex_);
    return cache_.size();
}

std::vector<std::vector<std::uint8_t>> FitnessEvaluator::evaluated() const {
    std::lock_guard lock(mutex_);
    std::vector<std::vector<std::uint8_t>> out;
    out.reserve(cache_.size());
    for (const auto& [bits, f] : cache_) out.push_back(bits);
    return out;
}

namespace {

void evaluate_population(std::vector<Chromosome>& population, FitnessEvaluator& eval, std::size_t workers) {
    std::vector<std::vector<std::uint8_t>> todo;
    for (const auto& c : population) {
        if (!c.fitness && std::find(todo.begin(), todo.end(), c.bits) == todo.end()) todo.push_back(c.bits);
    }
    std::vector<double> scores(todo.size());
    parallel_for(todo.size(), workers, [&](std::size_t, std::size_t i) { scores[i] = eval(todo[i]); }, 1);
    for (auto& c : population) {
        if (c.fitness) continue;
        const auto it = std::find(todo.begin(), todo.end(), c.bits);
        c.fitness = scores[static_cast<std::size_t>(it - todo.begin())];
    }
}

const Chromosome& tournament(const std::vector<Chromosome>& population, std::size_t size, Rng& rng) {
    const Chromosome* best = &population[rng.uniform_index(population.size())];
    for (std::size_t i = 1; i < size; ++i) {
        const Chromosome& c = population[rng.uniform_index(population.size())];
        if (*c.fitness > *best->fitness) best = &c;
    }
    return *best;
}

}  // namespace

EvolveResult evolve(std::span<const Record* const> records, const GAConfig& config, const PipelineConfig& pipeline) {
    config.validate();
    FitnessEvaluator eval(records, provider_fields(records), pipeline, config);
    const std::size_t length = eval.fields().size();
    const std::size_t forced = eval.compulsory_bit();

    EvolveResult result;
    if (length == 1) {
        std::vector<std::uint8_t> only{1};
        result.mask = eval.mask(only);
        result.fitness = eval(only);
        result.evaluations = eval.evaluations();
        result.evaluated.push_back(result.mask);
        return result;
    }

    const double mutation = config.mutation_rate < 0.0 ? 1.0 / static_cast<double>(length) : config.mutation_rate;
    Rng rng(config.seed);
    std::vector<Chromosome> population(config.population);
    for (auto& c : population) {
        c.bits.resize(length);
        for (auto& b : c.bits) b = rng.bernoulli(0.5) ? 1 : 0;
        c.bits[forced] = 1;
    }
    evaluate_population(population, eval, config.workers);

    Chromosome best = population.front();
    auto track_best = [&] {
        for (const auto& c : population) {
            if (*c.fitness > *best.fitness) best = c;
        }
        result.best_per_generation.push_back(*best.fitness);
    };
    track_best();

    for (std::size_t gen = 0; gen < config.generations; ++gen) {
        std::vector<std::size_t> order(population.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return *population[a].fitness > *population[b].fitness; });
        std::vector<Chromosome> next;
        next.reserve(population.size());
        for (std::size_t e = 0; e < config.elitism; ++e) next.push_back(population[order[e]]);

        while (next.size() < population.size()) {
            Chromosome a{tournament(population, config.tournament, rng).bits, std::nullopt};
            Chromosome b{tournament(population, config.tournament, rng).bits, std::nullopt};
            if (rng.bernoulli(config.crossover_rate)) {
                const auto point = 1 + static_cast<std::size_t>(rng.uniform_index(length - 1));
                for (std::size_t i = point; i < length; ++i) std::swap(a.bits[i], b.bits[i]);
            }
            for (Chromosome* c : {&a, &b}) {
                c->bits[forced] = 1;
                for (auto& bit : c->bits) {
                    if (rng.bernoulli(mutation)) bit ^= 1;
                }
                c->bits[forced] = 1;
            }
            next.push_back(std::move(a));
            if (next.size() < population.size()) next.push_back(std::move(b));
        }
        population = std::move(next);
        evaluate_population(population, eval, config.workers);
        track_best();
    }

    result.mask = eval.mask(best.bits);
    result.fitness = *best.fitness;
    result.evaluations = eval.evaluations();
    for (const auto& bits : eval.evaluated()) result.evaluated.push_back(eval.mask(bits));
    result.evolved = true;
    return result;
}

MaskTable FieldSelection::masks() const {
    MaskTable out;
    for (const auto& [provider, sel] : providers) out.emplace(provider, sel.mask);
    return out;
}

std::map<std::string, std::size_t> FieldSelection::field_counts() const {
    std::map<std::string, std::size_t> out;
    for (const auto& [provider, sel] : providers) {
        for (const auto& f : sel.mask.fields()) ++out[f];
    }
    return out;
}

std::map<std::string, std::size_t> FieldSelection::combination_counts() const {
    std::map<std::string, std::size_t> out;
    for (const auto& [provider, sel] : providers) ++out[sel.mask.key()];
    return out;
}

FieldSelection select_all_providers(std::span<const Record> corpus, const GAConfig& config,
                                    const PipelineConfig& pipeline) {
    config.validate();
    std::map<std::string, std::vector<const Record*>> by_provider;
    for (const Record& r : corpus) by_provider[r.provider].push_back(&r);

    FieldSelection out;
    for (const auto& [provider, records] : by_provider) {
        ProviderSelection sel;
        sel.record_count = records.size();
        if (records.size() > config.min_provider_records) {
            GAConfig per = config;
            per.seed = combine64(config.seed, fnv1a64(provider));
            EvolveResult r = evolve(records, per, pipeline);
            sel.mask = std::move(r.mask);
            sel.fitness = r.fitness;
            sel.evolved = r.evolved;
        } else {
            sel.mask = FieldMask({compulsory_field(records)});
        }
        out.providers.emplace(provider, std::move(sel));
    }
    return out;
}

}  // namespace metaclust
