#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include <absl/container/flat_hash_map.h>

#include "frameless/model.hpp"

namespace frameless {

/// The packed state key holds 16 bits per component, so the exact analysis
/// supports k <= 3 and m <= 65535.
inline constexpr int kMaxAnalysisK = 3;
inline constexpr int kMaxAnalysisSlots = 65535;

/// Cloud and ripple cardinalities when u users are still unresolved.
/// ripple[h - 1] counts slots of reduced degree h, h = 1..k.
struct DecoderState
{
    int cloud = 0;
    std::vector<int> ripple;

    int k() const { return static_cast<int>(ripple.size()); }
    int ripple_total() const;
    /// Smallest h with a non-empty ripple, or 0 when every ripple is empty.
    int min_ripple() const;

    uint64_t key() const;
    static DecoderState from_key(uint64_t key, int k);

    bool operator==(const DecoderState&) const = default;
};

/// Slot movements in one decoding step: b slots fall from the cloud into
/// ripple k, a[h - 1] slots leave ripple h (into ripple h - 1, or out of
/// the graph for h = 1).
struct TransitionDelta
{
    int b = 0;
    std::vector<int> a;

    bool operator==(const TransitionDelta&) const = default;
};

DecoderState apply_delta(const DecoderState& state, const TransitionDelta& delta);

/// Packed state key to probability. Iterates in insertion order, so every
/// floating-point sum over it is reproducible from run to run.
class StateMap
{
public:
    using value_type = std::pair<uint64_t, double>;
    using iterator = std::vector<value_type>::iterator;
    using const_iterator = std::vector<value_type>::const_iterator;

    double& operator[](uint64_t key)
    {
        auto [it, inserted] = index_.try_emplace(key, static_cast<uint32_t>(entries_.size()));
        if (inserted)
            entries_.emplace_back(key, 0.0);
        return entries_[it->second].second;
    }

    const_iterator find(uint64_t key) const
    {
        auto it = index_.find(key);
        return it == index_.end() ? entries_.end() : entries_.begin() + it->second;
    }

    bool contains(uint64_t key) const { return index_.contains(key); }
    /// Throws std::out_of_range for an absent key.
    double at(uint64_t key) const { return entries_.at(index_.at(key)).second; }

    size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }
    void reserve(size_t n)
    {
        index_.reserve(n);
        entries_.reserve(n);
    }
    void clear()
    {
        index_.clear();
        entries_.clear();
    }

    /// Drops every entry matching pred; the rest keep their order.
    template <typename Pred>
    void erase_if(Pred pred)
    {
        std::erase_if(entries_, [&](const value_type& e) { return pred(e.first, e.second); });
        index_.clear();
        for (uint32_t i = 0; i < entries_.size(); ++i)
            index_.emplace(entries_[i].first, i);
    }

    const std::vector<value_type>& entries() const { return entries_; }
    const_iterator begin() const { return entries_.begin(); }
    const_iterator end() const { return entries_.end(); }

private:
    absl::flat_hash_map<uint64_t, uint32_t> index_;
    std::vector<value_type> entries_;
};

/// Probability mass over decoder states at stage u, plus everything that has
/// already left the active set.
struct StateDistribution
{
    int n = 0;
    int k = 0;
    int u = 0;
    StateMap mass;
    /// terminal_mass[v] is the probability that decoding halted with v users unresolved.
    std::vector<double> terminal_mass;
    double success_mass = 0.0;
    double pruned_mass = 0.0;

    double active_mass() const;
    /// active + terminal + success + pruned; equals 1 up to rounding.
    double total_mass() const;
};

struct CloudExit
{
    double q = 0.0;
    /// Value before clamping to [0, 1].
    double raw = 0.0;
    bool clamp_diagnostic() const;
};

/// Probability that a cloud slot at stage u drops into ripple k when the next
/// user is resolved. Requires 1 <= u <= n.
CloudExit cloud_exit_probability(const SystemParams& params, const DegreeDistribution& omega, int u);

/// Multinomial law of the decoder state before any user is resolved (u = n).
/// States lighter than epsilon are dropped into pruned_mass.
StateDistribution initial_state_distribution(const SystemParams& params,
                                             const DegreeDistribution& omega,
                                             double epsilon = 0.0);

/// Law of the step taken from `state` at stage u, as (delta, probability)
/// pairs. Branches whose partial probability is below epsilon are skipped.
/// Throws std::invalid_argument if every ripple is empty.
std::vector<std::pair<TransitionDelta, double>>
transition_distribution(const DecoderState& state, int u, double q_u, double epsilon = 0.0);

enum class EvolveMethod
{
    /// Applies the cloud and per-ripple binomial factors one pass at a time.
    factored,
    /// Enumerates every joint delta of the transition law per source state.
    direct,
};

struct EvolveOptions
{
    double epsilon = 1e-15;
    EvolveMethod method = EvolveMethod::factored;
};

/// Advances the distribution from stage u to u - 1. States with empty ripples
/// halt and move to terminal_mass[u]; at u = 1 every surviving state lands in
/// success_mass.
StateDistribution evolve(const StateDistribution& dist,
                         const SystemParams& params,
                         const DegreeDistribution& omega,
                         const EvolveOptions& options = {});

/// sum over v of (v / n) * terminal_mass[v].
double packet_error_rate(const StateDistribution& finished);

/// n (1 - per) / (k m). Throws std::invalid_argument for m = 0.
double throughput(double per, const SystemParams& params);

struct StageSummary
{
    int u = 0;
    size_t states = 0;
    double active = 0.0;
    double terminal = 0.0;
    double success = 0.0;
    double pruned = 0.0;
};

struct AnalysisResult
{
    double per = 1.0;
    double throughput = 0.0;
    /// Mass discarded by pruning; the exact PER lies within per +/- pruned_mass.
    double pruned_mass = 0.0;
    /// Largest |total mass - 1| seen over all stages.
    double mass_error = 0.0;
    int clamp_diagnostics = 0;
    std::vector<StageSummary> trace;
};

struct AnalysisOptions
{
    double epsilon = 1e-15;
    EvolveMethod method = EvolveMethod::factored;
    bool keep_trace = false;
};

/// Runs the state recursion from u = n down to 0 and returns the final
/// distribution (all mass terminal, successful or pruned).
StateDistribution run_decoder(const SystemParams& params,
                              const AnalysisOptions& options = {},
                              AnalysisResult* diagnostics = nullptr);

/// Full pipeline: degree law, initial state, recursion, PER and throughput.
/// Throws std::invalid_argument for k > kMaxAnalysisK, m > kMaxAnalysisSlots or m = 0.
AnalysisResult analyze(const SystemParams& params, const AnalysisOptions& options = {});

} // namespace frameless
