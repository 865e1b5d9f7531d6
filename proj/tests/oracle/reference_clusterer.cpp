#include "oracle/reference_clusterer.hpp"

#include <zlib.h>

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <string>
#include <vector>

namespace oracle {
namespace {

using u64 = std::uint64_t;

u64 fnv(const std::string& s, u64 h = 14695981039346656037ULL) {
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

u64 splitmix(u64 x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

u64 combine(u64 a, u64 b) { return splitmix(a ^ splitmix(b)); }

u64 digest(const std::vector<std::string>& sorted_ids) {
    std::string joined;
    for (std::size_t i = 0; i < sorted_ids.size(); ++i) {
        if (i) joined += '\n';
        joined += sorted_ids[i];
    }
    return fnv(joined);
}

std::string hex(u64 v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

struct Gen {
    std::mt19937_64 e;
    explicit Gen(u64 s) : e(s) {}
    u64 below(u64 n) {
        const u64 max = 0xffffffffffffffffULL;
        const u64 limit = max - max % n;
        for (;;) {
            const u64 x = e();
            if (x < limit) return x % n;
        }
    }
};

std::size_t zsize(const std::string& s, int level) {
    uLongf len = compressBound(static_cast<uLong>(s.size()));
    std::vector<Bytef> buf(len);
    compress2(buf.data(), &len, reinterpret_cast<const Bytef*>(s.data()), static_cast<uLong>(s.size()), level);
    return len;
}

}  // namespace

double reference_similarity(const std::string& x, const std::string& y, int zlib_level) {
    if (x.empty() && y.empty()) return 0.0;
    if (x == y) return 1.0;
    const double cx = static_cast<double>(zsize(x, zlib_level));
    const double cy = static_cast<double>(zsize(y, zlib_level));
    const double cxy = static_cast<double>(zsize(x + '\x1c' + y, zlib_level));
    const double v = 1.0 - (cxy - std::min(cx, cy)) / std::max(cx, cy);
    return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
}

metaclust::LevelResult reference_cluster_level(std::span<const metaclust::LevelItem> items,
                                               const metaclust::ClusterConfig& config) {
    const std::size_t n = items.size();
    const double th = config.level / 100.0;
    const int zl = config.compressor.level;

    std::vector<std::size_t> by_id(n);
    std::iota(by_id.begin(), by_id.end(), std::size_t{0});
    std::sort(by_id.begin(), by_id.end(), [&](auto a, auto b) { return items[a].id < items[b].id; });
    std::vector<std::size_t> rank(n);
    for (std::size_t i = 0; i < n; ++i) rank[by_id[i]] = i;
    auto rank_less = [&](std::size_t a, std::size_t b) { return rank[a] < rank[b]; };

    auto sim = [&](std::size_t a, std::size_t b) { return reference_similarity(items[a].bytes, items[b].bytes, zl); };

    std::vector<bool> alive(n, true);
    std::vector<std::vector<std::pair<std::size_t, double>>> accrued(n);
    std::vector<double> mean(n, 0.0);
    std::map<u64, unsigned> seen;

    auto key_of = [&](const std::vector<std::size_t>& set) {
        std::vector<std::string> ids;
        for (auto i : set) ids.push_back(items[i].id);
        std::sort(ids.begin(), ids.end());
        return digest(ids);
    };
    auto admit = [&](const std::vector<std::size_t>& set) {
        auto it = seen.find(key_of(set));
        return it == seen.end() || it->second < 2;
    };

    std::size_t clustered = 0;
    std::size_t iterations = 0;
    for (int iter = 1; iter <= config.max_iter; ++iter) {
        // Components over live records, by brute force.
        std::vector<std::size_t> live;
        for (std::size_t i = 0; i < n; ++i) {
            if (alive[i]) live.push_back(i);
        }
        std::vector<std::size_t> comp(live.size());
        std::iota(comp.begin(), comp.end(), std::size_t{0});
        std::function<std::size_t(std::size_t)> root = [&](std::size_t x) {
            return comp[x] == x ? x : root(comp[x]);
        };
        for (std::size_t a = 0; a < live.size(); ++a) {
            for (std::size_t b = a + 1; b < live.size(); ++b) {
                const auto& ka = items[live[a]].keys;
                const auto& kb = items[live[b]].keys;
                if (ka.sentinel != kb.sentinel) continue;
                bool link = false;
                if (config.band_match == metaclust::BandMatch::all) {
                    link = ka.keys == kb.keys;
                } else {
                    for (std::size_t k = 0; k < 4; ++k) link = link || ka.keys[k] == kb.keys[k];
                }
                if (link) {
                    const auto ra = root(a), rb = root(b);
                    if (ra != rb) comp[std::max(ra, rb)] = std::min(ra, rb);
                }
            }
        }
        std::map<std::size_t, std::vector<std::size_t>> comps;  // keyed by smallest position
        for (std::size_t a = 0; a < live.size(); ++a) comps[root(a)].push_back(live[a]);
        std::vector<std::vector<std::size_t>> groups;
        for (auto& [r, g] : comps) {
            if (g.size() < 2) continue;
            std::sort(g.begin(), g.end(), rank_less);
            groups.push_back(g);
        }
        if (groups.empty() && iter > 1) break;
        iterations = static_cast<std::size_t>(iter);

        std::vector<std::vector<std::size_t>> stack;
        for (auto& g : groups) {
            if (admit(g)) stack.push_back(g);
        }
        std::reverse(stack.begin(), stack.end());

        while (!stack.empty()) {
            std::vector<std::size_t> g = stack.back();
            stack.pop_back();
            const u64 d = key_of(g);
            const unsigned occ = seen[d]++;
            const u64 s = combine(combine(combine(config.seed, static_cast<u64>(config.level)),
                                          static_cast<u64>(iter)),
                                  combine(d, occ));
            Gen gen(s);
            std::vector<std::size_t> order = g;
            for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[gen.below(i)]);

            std::vector<std::size_t> heads;
            for (auto c : order) {
                if (heads.size() >= config.max_heads) break;
                bool far = true;
                for (auto h : heads) {
                    if (!(sim(h, c) < th)) {
                        far = false;
                        break;
                    }
                }
                if (far) heads.push_back(c);
            }

            std::vector<std::vector<std::pair<std::size_t, double>>> assigned(heads.size());
            for (auto r : g) {
                if (std::find(heads.begin(), heads.end(), r) != heads.end()) continue;
                std::size_t best = 0;
                double bs = -1.0;
                for (std::size_t h = 0; h < heads.size(); ++h) {
                    const double v = sim(heads[h], r);
                    if (v > bs || (v == bs && rank[heads[h]] < rank[heads[best]])) {
                        best = h;
                        bs = v;
                    }
                }
                assigned[best].push_back({r, bs});
            }

            for (std::size_t h = 0; h < heads.size(); ++h) {
                if (assigned[h].empty()) continue;
                const std::size_t head = heads[h];
                auto scores = accrued[head];
                for (auto [m, v] : assigned[h]) {
                    scores.push_back({m, v});
                    for (auto [a, old] : accrued[m]) scores.push_back({a, sim(head, a)});
                }
                std::sort(scores.begin(), scores.end(),
                          [&](const auto& x, const auto& y) { return rank[x.first] < rank[y.first]; });
                double sum = 0.0;
                for (auto& sc : scores) sum += sc.second;
                const double mu = sum / static_cast<double>(scores.size());
                if (mu >= th) {
                    accrued[head] = scores;
                    mean[head] = mu;
                    for (auto [m, v] : assigned[h]) {
                        alive[m] = false;
                        accrued[m].clear();
                    }
                } else {
                    std::vector<std::size_t> again{head};
                    for (auto [m, v] : assigned[h]) again.push_back(m);
                    std::sort(again.begin(), again.end(), rank_less);
                    if (admit(again)) stack.push_back(again);
                }
            }
        }

        std::size_t now = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (alive[i] && !accrued[i].empty()) now += accrued[i].size() + 1;
        }
        if (now == clustered) break;
        clustered = now;
    }

    metaclust::LevelResult out;
    out.level = config.level;
    out.iterations_used = iterations;
    out.input_count = n;
    for (std::size_t i = 0; i < n; ++i) {
        if (!alive[i]) continue;
        if (accrued[i].empty()) {
            out.unclustered.push_back(items[i].id);
            continue;
        }
        metaclust::Cluster c;
        c.level = config.level;
        c.head = items[i].id;
        for (auto [m, v] : accrued[i]) c.members.push_back(items[m].id);
        std::sort(c.members.begin(), c.members.end());
        c.mean_head_similarity = mean[i];
        std::vector<std::string> all = c.members;
        all.push_back(c.head);
        std::sort(all.begin(), all.end());
        c.id = "L" + std::to_string(config.level) + "-" + hex(digest(all));
        out.clusters.push_back(c);
    }
    std::sort(out.clusters.begin(), out.clusters.end(), [](auto& a, auto& b) { return a.head < b.head; });
    std::sort(out.unclustered.begin(), out.unclustered.end());
    return out;
}

}  // namespace oracle
