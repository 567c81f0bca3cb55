#include "frameless/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace frameless {

uint64_t Rng::below(uint64_t bound)
{
    if (bound == 0)
        throw std::invalid_argument("Rng::below needs a positive bound");
    // Largest multiple of bound that fits; values past it would bias the modulo.
    const uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    uint64_t x;
    do {
        x = engine_();
    } while (x >= limit);
    return x % bound;
}

uint64_t derive_seed(uint64_t seed, uint64_t index)
{
    uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

ContentionGraph ContentionGraph::from_slots(int n, std::vector<std::vector<int>> slots)
{
    ContentionGraph g;
    g.n = n;
    g.m = static_cast<int>(slots.size());
    g.user_slots.resize(static_cast<size_t>(n));
    for (int j = 0; j < g.m; ++j) {
        for (int user : slots[j]) {
            if (user < 0 || user >= n)
                throw std::invalid_argument("user index out of range: " + std::to_string(user));
            g.user_slots[user].push_back(j);
        }
    }
    g.slot_users = std::move(slots);
    return g;
}

ContentionGraph generate_graph(const SystemParams& params, Rng& rng)
{
    const int n = params.n();
    const int m = params.m();
    const double p = params.p();
    std::vector<std::vector<int>> slots(static_cast<size_t>(m));
    for (int j = 0; j < m; ++j)
        for (int i = 0; i < n; ++i)
            if (rng.bernoulli(p))
                slots[j].push_back(i);
    return ContentionGraph::from_slots(n, std::move(slots));
}

namespace {

// Slots with reduced degree 1..k, bucketed by degree, with O(1) insert/remove.
class RippleBuckets
{
public:
    RippleBuckets(int k, int m) : buckets_(static_cast<size_t>(k) + 1), pos_(static_cast<size_t>(m), -1) {}

    void insert(int slot, int h)
    {
        pos_[slot] = static_cast<int>(buckets_[h].size());
        buckets_[h].push_back(slot);
    }

    void erase(int slot, int h)
    {
        auto& b = buckets_[h];
        const int i = pos_[slot];
        b[i] = b.back();
        pos_[b[i]] = i;
        b.pop_back();
        pos_[slot] = -1;
    }

    int min_nonempty() const
    {
        for (size_t h = 1; h < buckets_.size(); ++h)
            if (!buckets_[h].empty())
                return static_cast<int>(h);
        return 0;
    }

    const std::vector<int>& bucket(int h) const { return buckets_[h]; }

private:
    std::vector<std::vector<int>> buckets_;
    std::vector<int> pos_;
};

} // namespace

DecodeOutcome sic_decode(const ContentionGraph& graph, int k, Rng& rng)
{
    if (k < 1)
        throw std::invalid_argument("k must be >= 1");

    DecodeOutcome out;
    out.user_resolved.assign(static_cast<size_t>(graph.n), false);
    out.reduced_degree.resize(static_cast<size_t>(graph.m));
    std::vector<std::vector<int>> live = graph.slot_users;

    RippleBuckets ripples(k, graph.m);
    for (int j = 0; j < graph.m; ++j) {
        out.reduced_degree[j] = graph.degree(j);
        if (out.reduced_degree[j] >= 1 && out.reduced_degree[j] <= k)
            ripples.insert(j, out.reduced_degree[j]);
    }

    for (;;) {
        const int h = ripples.min_nonempty();
        if (h == 0)
            break;
        const auto& candidates = ripples.bucket(h);
        const int slot = candidates[rng.below(candidates.size())];
        const int user = live[slot][rng.below(live[slot].size())];

        out.user_resolved[user] = true;
        ++out.resolved;
        out.schedule.push_back(slot);

        for (int t : graph.user_slots[user]) {
            auto& users = live[t];
            users.erase(std::find(users.begin(), users.end(), user));
            int& red = out.reduced_degree[t];
            if (red <= k)
                ripples.erase(t, red);
            --red;
            if (red >= 1 && red <= k)
                ripples.insert(t, red);
        }
    }
    return out;
}

SimStats simulate(const SystemParams& params, long runs, uint64_t seed)
{
    if (runs < 1)
        throw std::invalid_argument("runs must be >= 1, got " + std::to_string(runs));

    const double n = params.n();
    const double scale = params.m() > 0 ? static_cast<double>(params.k()) * params.m() : 0.0;

    // Welford accumulation over runs in index order.
    double per_mean = 0.0, per_m2 = 0.0, thr_mean = 0.0, thr_m2 = 0.0;
    for (long i = 0; i < runs; ++i) {
        Rng rng(derive_seed(seed, static_cast<uint64_t>(i)));
        const auto graph = generate_graph(params, rng);
        const int resolved = sic_decode(graph, params.k(), rng).resolved;

        const double per = (n - resolved) / n;
        const double thr = scale > 0.0 ? resolved / scale : 0.0;
        const double count = static_cast<double>(i + 1);
        const double dp = per - per_mean;
        per_mean += dp / count;
        per_m2 += dp * (per - per_mean);
        const double dt = thr - thr_mean;
        thr_mean += dt / count;
        thr_m2 += dt * (thr - thr_mean);
    }

    SimStats s;
    s.runs = runs;
    s.seed = seed;
    s.per_estimate = per_mean;
    s.throughput_estimate = thr_mean;
    if (runs > 1) {
        const double r = static_cast<double>(runs);
        s.per_stderr = std::sqrt(per_m2 / (r - 1.0)) / std::sqrt(r);
        s.throughput_stderr = std::sqrt(thr_m2 / (r - 1.0)) / std::sqrt(r);
    }
    return s;
}

} // namespace frameless
