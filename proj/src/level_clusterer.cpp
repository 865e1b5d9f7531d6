#include "metaclust/level_clusterer.hpp"

#include "metaclust/record.hpp"
#include "metaclust/thread_pool.hpp"

#include <algorithm>
#include <mutex>
#include <numeric>
#include <unordered_map>
#include <unordered_set>

namespace metaclust {

std::string make_cluster_id(int level, std::vector<std::string> ids) {
    std::sort(ids.begin(), ids.end());
    return "L" + std::to_string(level) + "-" + to_hex16(digest_ids(ids));
}

std::vector<std::uint32_t> select_heads(std::span<const std::uint32_t> group, double threshold, Rng& rng,
                                        const SimilarityFn& sim, std::size_t max_heads) {
    std::vector<std::uint32_t> order(group.begin(), group.end());
    rng.shuffle(order);
    std::vector<std::uint32_t> heads;
    for (std::uint32_t candidate : order) {
        if (heads.size() >= max_heads) break;
        const bool far = std::all_of(heads.begin(), heads.end(),
                                     [&](std::uint32_t h) { return sim(h, candidate) < threshold; });
        if (far) heads.push_back(candidate);
    }
    return heads;
}

std::vector<Candidate> assign_to_heads(std::span<const std::uint32_t> group, std::span<const std::uint32_t> heads,
                                       const SimilarityFn& sim, std::span<const std::uint32_t> rank) {
    std::vector<Candidate> out(heads.size());
    for (std::size_t h = 0; h < heads.size(); ++h) out[h].head = heads[h];
    for (std::uint32_t r : group) {
        if (std::find(heads.begin(), heads.end(), r) != heads.end()) continue;
        std::size_t best = 0;
        double best_sim = -1.0;
        for (std::size_t h = 0; h < heads.size(); ++h) {
            const double s = sim(heads[h], r);
            if (s > best_sim || (s == best_sim && rank[heads[h]] < rank[heads[best]])) {
                best = h;
                best_sim = s;
            }
        }
        out[best].members.push_back(r);
        out[best].member_similarity.push_back(best_sim);
    }
    return out;
}

Validation validate_scores(std::span<const Scored> scores, double threshold, std::span<const std::uint32_t> rank) {
    if (scores.empty()) return {};
    std::vector<Scored> ordered(scores.begin(), scores.end());
    std::sort(ordered.begin(), ordered.end(),
              [&](const Scored& a, const Scored& b) { return rank[a.index] < rank[b.index]; });
    double sum = 0.0;
    for (const auto& s : ordered) sum += s.similarity;
    const double mean = sum / static_cast<double>(ordered.size());
    return {mean >= threshold, mean};
}

Validation validate_candidate(const Candidate& candidate, double threshold, std::span<const std::uint32_t> rank) {
    std::vector<Scored> scores;
    scores.reserve(candidate.members.size());
    for (std::size_t i = 0; i < candidate.members.size(); ++i) {
        scores.push_back({candidate.members[i], candidate.member_similarity[i]});
    }
    return validate_scores(scores, threshold, rank);
}

std::uint64_t group_seed(std::uint64_t seed, int level, std::size_t iteration, std::uint64_t digest,
                         std::uint32_t occurrence) {
    const std::uint64_t base = combine64(combine64(seed, static_cast<std::uint64_t>(level)), iteration);
    return combine64(base, combine64(digest, occurrence));
}

namespace {

// A record that is either unclustered or the head of the records it has
// accrued. Accrued scores are similarities to this unit's own record.
struct Unit {
    bool alive = true;
    std::vector<Scored> accrued;
    double mean = 0.0;
};

class LevelPass {
public:
    LevelPass(std::span<const LevelItem> items, const ClusterConfig& config)
        : items_(items), config_(config), units_(items.size()), rank_(items.size()),
          cache_(views(items), CompressorSpec(config.compressor).id()) {
        std::vector<std::uint32_t> order(items.size());
        std::iota(order.begin(), order.end(), 0u);
        std::sort(order.begin(), order.end(),
                  [&](std::uint32_t a, std::uint32_t b) { return items[a].id < items[b].id; });
        for (std::size_t i = 0; i < order.size(); ++i) {
            if (i > 0 && items[order[i]].id == items[order[i - 1]].id) {
                throw ConfigError("duplicate item id in level pass: " + items[order[i]].id);
            }
            rank_[order[i]] = static_cast<std::uint32_t>(i);
        }
        const std::size_t workers = std::max<std::size_t>(1, config.workers);
        for (std::size_t w = 0; w < workers; ++w) compressors_.push_back(make_compressor(config.compressor));
    }

    LevelResult run() {
        if (config_.max_iter < 1) throw ConfigError("max_iter must be >= 1");
        std::size_t clustered = 0;
        std::size_t iterations = 0;
        for (int iter = 1; iter <= config_.max_iter; ++iter) {
            auto groups = candidate_groups();
            if (groups.empty() && iter > 1) break;
            iterations = static_cast<std::size_t>(iter);
            if (iter == 1) prefetch_sizes(groups);

            std::vector<std::vector<std::uint32_t>> stack;
            for (auto& g : groups) {
                if (admit(g)) stack.push_back(std::move(g));
            }
            // Pop order follows the band grouping order.
            std::reverse(stack.begin(), stack.end());
            WorkStack<std::vector<std::uint32_t>> work(std::move(stack));
            work.run(compressors_.size(), [&](std::size_t worker, std::vector<std::uint32_t> group, auto& ws) {
                process(worker, static_cast<std::size_t>(iter), std::move(group), ws);
            });

            std::size_t now = 0;
            for (const Unit& u : units_) {
                if (u.alive && !u.accrued.empty()) now += u.accrued.size() + 1;
            }
            if (now == clustered) break;
            clustered = now;
        }
        return collect(iterations);
    }

private:
    static std::vector<std::string_view> views(std::span<const LevelItem> items) {
        std::vector<std::string_view> v;
        v.reserve(items.size());
        for (const auto& it : items) v.emplace_back(it.bytes);
        return v;
    }

    // Non-singleton band groups over live units, members in id order.
    std::vector<std::vector<std::uint32_t>> candidate_groups() const {
        std::vector<std::uint32_t> live;
        std::vector<BandKeySet> keys;
        for (std::uint32_t i = 0; i < units_.size(); ++i) {
            if (!units_[i].alive) continue;
            live.push_back(i);
            keys.push_back(items_[i].keys);
        }
        std::vector<std::vector<std::uint32_t>> out;
        for (auto& g : group_candidates(keys, config_.band_match)) {
            if (g.size() < 2) continue;
            for (auto& idx : g) idx = live[idx];
            sort_by_rank(g);
            out.push_back(std::move(g));
        }
        return out;
    }

    void sort_by_rank(std::vector<std::uint32_t>& g) const {
        std::sort(g.begin(), g.end(), [&](std::uint32_t a, std::uint32_t b) { return rank_[a] < rank_[b]; });
    }

    void prefetch_sizes(const std::vector<std::vector<std::uint32_t>>& groups) {
        std::vector<std::uint32_t> todo;
        for (const auto& g : groups) todo.insert(todo.end(), g.begin(), g.end());
        parallel_for(todo.size(), compressors_.size(),
                     [&](std::size_t worker, std::size_t i) { cache_.get(todo[i], *compressors_[worker]); });
    }

    std::uint64_t digest(const std::vector<std::uint32_t>& g) const {
        std::vector<std::string_view> ids;
        ids.reserve(g.size());
        for (auto i : g) ids.emplace_back(items_[i].id);
        return digest_ids(ids);
    }

    // A set already processed twice at this level is dissolved: its units
    // are left as they are.
    bool admit(const std::vector<std::uint32_t>& g) {
        std::lock_guard lock(seen_mutex_);
        auto it = processed_.find(digest(g));
        return it == processed_.end() || it->second < 2;
    }

    std::uint32_t mark_processed(std::uint64_t d) {
        std::lock_guard lock(seen_mutex_);
        return processed_[d]++;
    }

    void process(std::size_t worker, std::size_t iteration, std::vector<std::uint32_t> group,
                 WorkStack<std::vector<std::uint32_t>>& ws) {
        Compressor& comp = *compressors_[worker];
        const double threshold = config_.threshold();
        const std::uint64_t d = digest(group);
        const std::uint32_t occurrence = mark_processed(d);
        Rng rng(group_seed(config_.seed, config_.level, iteration, d, occurrence));

        const SimilarityFn sim = [&](std::uint32_t a, std::uint32_t b) { return similarity(a, b, cache_, comp); };
        const auto heads = select_heads(group, threshold, rng, sim, config_.max_heads);
        auto candidates = assign_to_heads(group, heads, sim, rank_);

        for (auto& cand : candidates) {
            if (cand.members.empty()) continue;
            Unit& head = units_[cand.head];
            std::vector<Scored> scores = head.accrued;
            for (std::size_t i = 0; i < cand.members.size(); ++i) {
                const std::uint32_t m = cand.members[i];
                scores.push_back({m, cand.member_similarity[i]});
                for (const Scored& a : units_[m].accrued) scores.push_back({a.index, sim(cand.head, a.index)});
            }
            const Validation v = validate_scores(scores, threshold, rank_);
            if (v.accepted) {
                std::sort(scores.begin(), scores.end(),
                          [&](const Scored& a, const Scored& b) { return rank_[a.index] < rank_[b.index]; });
                head.accrued = std::move(scores);
                head.mean = v.mean;
                for (std::uint32_t m : cand.members) {
                    units_[m].alive = false;
                    units_[m].accrued.clear();
                }
            } else {
                std::vector<std::uint32_t> again = cand.members;
                again.push_back(cand.head);
                sort_by_rank(again);
                if (admit(again)) ws.push(std::move(again));
            }
        }
    }

    LevelResult collect(std::size_t iterations) const {
        LevelResult result;
        result.level = config_.level;
        result.iterations_used = iterations;
        result.input_count = items_.size();
        for (std::uint32_t i = 0; i < units_.size(); ++i) {
            const Unit& u = units_[i];
            if (!u.alive) continue;
            if (u.accrued.empty()) {
                result.unclustered.push_back(items_[i].id);
                continue;
            }
            Cluster c;
            c.level = config_.level;
            c.head = items_[i].id;
            for (const Scored& s : u.accrued) c.members.push_back(items_[s.index].id);
            std::sort(c.members.begin(), c.members.end());
            c.mean_head_similarity = u.mean;
            std::vector<std::string> all = c.members;
            all.push_back(c.head);
            c.id = make_cluster_id(config_.level, std::move(all));
            result.clusters.push_back(std::move(c));
        }
        std::sort(result.clusters.begin(), result.clusters.end(),
                  [](const Cluster& a, const Cluster& b) { return a.head < b.head; });
        std::sort(result.unclustered.begin(), result.unclustered.end());
        return result;
    }

    std::span<const LevelItem> items_;
    ClusterConfig config_;
    std::vector<Unit> units_;
    std::vector<std::uint32_t> rank_;
    CompressedSizeCache cache_;
    std::vector<std::unique_ptr<Compressor>> compressors_;
    std::mutex seen_mutex_;
    std::unordered_map<std::uint64_t, std::uint32_t> processed_;
};

}  // namespace

LevelResult cluster_level(std::span<const LevelItem> items, const ClusterConfig& config) {
    if (config.max_iter < 1) throw ConfigError("max_iter must be >= 1");
    if (!is_level(config.level)) throw ConfigError("not a similarity level: " + std::to_string(config.level));
    if (config.max_heads < 1) throw ConfigError("max_heads must be >= 1");
    return LevelPass(items, config).run();
}

void check_partition(const LevelResult& result, std::span<const LevelItem> items) {
    std::vector<std::string> ids;
    ids.reserve(items.size());
    for (const auto& it : items) ids.push_back(it.id);
    check_partition(result, ids);
}

void check_partition(const LevelResult& result, std::span<const std::string> ids) {
    std::unordered_set<std::string_view> expected(ids.begin(), ids.end());
    std::unordered_set<std::string_view> seen;
    auto take = [&](const std::string& id) {
        if (!expected.count(id)) throw IntegrityError("level " + std::to_string(result.level) + ": unknown id " + id);
        if (!seen.insert(id).second) {
            throw IntegrityError("level " + std::to_string(result.level) + ": id appears twice: " + id);
        }
    };
    const double threshold = result.level / 100.0;
    for (const Cluster& c : result.clusters) {
        if (c.members.empty()) throw IntegrityError("cluster without members: " + c.id);
        if (c.mean_head_similarity < threshold) throw IntegrityError("cluster below threshold: " + c.id);
        take(c.head);
        for (const auto& m : c.members) take(m);
    }
    for (const auto& u : result.unclustered) take(u);
    if (seen.size() != expected.size()) {
        throw IntegrityError("level " + std::to_string(result.level) + ": partition misses records");
    }
}

}  // namespace metaclust
