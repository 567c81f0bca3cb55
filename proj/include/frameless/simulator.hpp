#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "frameless/model.hpp"

namespace frameless {

/// Seeded generator for the simulator. The engine is std::mt19937_64, whose
/// output sequence is fixed by the C++ standard; the conversions to reals and
/// bounded integers below are spelled out here instead of going through the
/// implementation-defined std distributions, so a seed reproduces the same
/// draws on every platform.
class Rng
{
public:
    explicit Rng(uint64_t seed) : engine_(seed) {}

    uint64_t next() { return engine_(); }

    /// Uniform double in [0, 1) from the top 53 bits.
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) { return uniform01() < p; }

    /// Uniform integer in [0, bound), by rejection. bound must be positive.
    uint64_t below(uint64_t bound);

private:
    std::mt19937_64 engine_;
};

/// SplitMix64 finalizer applied to (seed, index); gives each run its own stream.
uint64_t derive_seed(uint64_t seed, uint64_t index);

/// Bipartite users-by-slots graph of one contention period.
struct ContentionGraph
{
    int n = 0;
    int m = 0;
    std::vector<std::vector<int>> slot_users;
    std::vector<std::vector<int>> user_slots;

    int degree(int slot) const { return static_cast<int>(slot_users[slot].size()); }

    /// Builds the graph from per-slot user lists (users are 0-based).
    static ContentionGraph from_slots(int n, std::vector<std::vector<int>> slots);
};

/// Every (user, slot) edge is present independently with probability p.
/// Draws are made slot by slot, users in order within a slot.
ContentionGraph generate_graph(const SystemParams& params, Rng& rng);

struct DecodeOutcome
{
    int resolved = 0;
    std::vector<bool> user_resolved;
    /// Reduced degree of every slot when decoding stopped.
    std::vector<int> reduced_degree;
    /// Slot used at each step, in order.
    std::vector<int> schedule;
};

/// SIC with a k-MUD receiver, one user per step: take a slot of minimum reduced
/// degree h <= k (ties broken uniformly), resolve one of its h users uniformly,
/// cancel that user everywhere. Stops when no slot has reduced degree in [1, k].
DecodeOutcome sic_decode(const ContentionGraph& graph, int k, Rng& rng);

struct SimStats
{
    long runs = 0;
    uint64_t seed = 0;
    double per_estimate = 0.0;
    double per_stderr = 0.0;
    double throughput_estimate = 0.0;
    double throughput_stderr = 0.0;
};

/// Independent contention periods; run i draws from Rng(derive_seed(seed, i)),
/// so results do not depend on how runs are scheduled.
/// Throws std::invalid_argument for runs < 1.
SimStats simulate(const SystemParams& params, long runs, uint64_t seed);

} // namespace frameless
