#include "frameless/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace frameless {

namespace {

// Key layout: component 0..k-1 holds ripple 1..k, component k holds the cloud.
constexpr int kFieldBits = 16;
constexpr uint64_t kFieldMask = (uint64_t{1} << kFieldBits) - 1;

inline int field(uint64_t key, int idx)
{
    return static_cast<int>((key >> (kFieldBits * idx)) & kFieldMask);
}

inline uint64_t unit(int idx)
{
    return uint64_t{1} << (kFieldBits * idx);
}

int min_ripple_of(uint64_t key, int k)
{
    for (int h = 1; h <= k; ++h)
        if (field(key, h - 1) > 0)
            return h;
    return 0;
}

void check_supported(const SystemParams& params)
{
    if (params.k() > kMaxAnalysisK)
        throw std::invalid_argument("exact analysis supports k <= " + std::to_string(kMaxAnalysisK));
    if (params.m() > kMaxAnalysisSlots)
        throw std::invalid_argument("exact analysis supports m <= " + std::to_string(kMaxAnalysisSlots));
}

// log-factorials 0..n, so every binomial in the cloud-exit law is three lookups.
class LogFactorials
{
public:
    explicit LogFactorials(int n) : lf_(static_cast<size_t>(n) + 1)
    {
        for (int i = 0; i <= n; ++i)
            lf_[i] = std::lgamma(static_cast<long double>(i) + 1.0L);
    }

    long double log_binom(int a, int b) const
    {
        return lf_[a] - lf_[b] - lf_[a - b];
    }

    // Probability that a degree-d slot has exactly h of its users among the u
    // unresolved ones: C(u, h) C(n - u, d - h) / C(n, d).
    double hypergeometric(int n, int u, int d, int h) const
    {
        if (h < 0 || h > u || h > d || d - h > n - u)
            return 0.0;
        return static_cast<double>(std::exp(log_binom(u, h) + log_binom(n - u, d - h) - log_binom(n, d)));
    }

private:
    std::vector<long double> lf_;
};

CloudExit cloud_exit_from(const LogFactorials& lf, int n, int k, const DegreeDistribution& omega, int u)
{
    CloudExit out;
    if (u <= k)
        return out;

    // Numerator: the slot holds the resolved user plus exactly k other
    // unresolved users. (k + 1)/u * C(u, k+1) equals C(u-1, k), and the result
    // is the (d/n) C(d-1,k) C(u-1,k)/C(n-1,k) C(n-u,d-k-1)/C(n-k-1,d-k-1) form.
    CompensatedSum num;
    for (int d = k + 1; d <= n; ++d)
        num.add(omega[d] * lf.hypergeometric(n, u, d, k + 1));
    const double numerator = num.value() * static_cast<double>(k + 1) / static_cast<double>(u);
    if (numerator <= 0.0)
        return out;

    // Denominator: probability of reduced degree > k, summed directly.
    CompensatedSum den;
    for (int h = k + 1; h <= u; ++h)
        for (int d = h; d <= n; ++d)
            den.add(omega[d] * lf.hypergeometric(n, u, d, h));
    const double denominator = den.value();
    if (denominator <= 0.0)
        return out;

    out.raw = numerator / denominator;
    out.q = std::clamp(out.raw, 0.0, 1.0);
    return out;
}

// Binomial pmf tables for one success probability, built on first use per trial count.
class PmfCache
{
public:
    explicit PmfCache(double prob) : prob_(prob) {}

    const std::vector<double>& operator()(int trials)
    {
        if (trials >= static_cast<int>(tables_.size()))
            tables_.resize(static_cast<size_t>(trials) + 1);
        auto& t = tables_[trials];
        if (t.empty())
            t = binomial_pmf_table(trials, prob_);
        return t;
    }

private:
    double prob_;
    std::vector<std::vector<double>> tables_;
};

double ripple_exit_probability(int h, int u)
{
    return std::min(1.0, static_cast<double>(h) / static_cast<double>(u));
}

// Walks the joint transition law in the order b, a[k], ..., a[1]. Calls
// emit(successor_key, delta_b, a, prob) per admissible delta and returns the
// probability of the branches dropped for falling below `threshold`.
template <typename Emit>
double enumerate_transitions(uint64_t key, int k, int u, double q_u, double threshold, Emit&& emit)
{
    const int h_min = min_ripple_of(key, k);
    if (h_min == 0)
        throw std::invalid_argument("transition requested from a state with every ripple empty");

    // One pmf table per factor: ripple h has r[h] - 1 free trials when it
    // supplies the decoded slot, r[h] otherwise.
    std::vector<std::vector<double>> ripple_pmf(static_cast<size_t>(k) + 1);
    for (int h = 1; h <= k; ++h) {
        const int trials = field(key, h - 1) - (h == h_min ? 1 : 0);
        ripple_pmf[h] = binomial_pmf_table(std::max(trials, 0), ripple_exit_probability(h, u));
    }
    const int c = field(key, k);
    const auto cloud_pmf = binomial_pmf_table(c, q_u);

    double skipped = 0.0;
    std::vector<int> a(static_cast<size_t>(k), 0);
    int b = 0;

    auto recurse = [&](auto& self, int h, uint64_t succ, double partial) -> void {
        if (h == 0) {
            emit(succ, b, a, partial);
            return;
        }
        const int shift = (h == h_min) ? 1 : 0;
        if (field(key, h - 1) == 0) {
            self(self, h - 1, succ, partial);
            return;
        }
        const auto& pmf = ripple_pmf[h];
        for (int s = 0; s < static_cast<int>(pmf.size()); ++s) {
            const double w = partial * pmf[s];
            if (w == 0.0)
                continue;
            if (w < threshold) {
                skipped += w;
                continue;
            }
            const int ah = s + shift;
            a[h - 1] = ah;
            uint64_t next = succ - static_cast<uint64_t>(ah) * unit(h - 1);
            if (h > 1)
                next += static_cast<uint64_t>(ah) * unit(h - 2);
            self(self, h - 1, next, w);
        }
        a[h - 1] = 0;
    };

    for (b = 0; b <= c; ++b) {
        const double w = cloud_pmf[b];
        if (w == 0.0)
            continue;
        if (w < threshold) {
            skipped += w;
            continue;
        }
        const uint64_t succ = key - static_cast<uint64_t>(b) * unit(k) + static_cast<uint64_t>(b) * unit(k - 1);
        recurse(recurse, k, succ, w);
    }
    return skipped;
}

void add_mass(StateMap& map, uint64_t key, double p)
{
    map[key] += p;
}

using Entries = std::vector<StateMap::value_type>;

StateDistribution next_stage_shell(const StateDistribution& dist)
{
    StateDistribution next;
    next.n = dist.n;
    next.k = dist.k;
    next.u = dist.u - 1;
    next.terminal_mass = dist.terminal_mass;
    next.success_mass = dist.success_mass;
    next.pruned_mass = dist.pruned_mass;
    return next;
}

void evolve_direct(const Entries& active, StateDistribution& next, int u, double q_u, double epsilon)
{
    const int k = next.k;
    for (const auto& [key, p] : active) {
        const double skipped = enumerate_transitions(
            key, k, u, q_u, epsilon > 0.0 ? epsilon / p : 0.0,
            [&](uint64_t succ, int, const std::vector<int>&, double w) { add_mass(next.mass, succ, p * w); });
        next.pruned_mass += p * skipped;
    }
}

// The transition law is a product of independent binomials, one per ripple
// and one for the cloud. Applying them as successive passes costs the sum of
// their supports per state rather than the product. Ripple h only reads its
// own original count, so going bottom-up (ripple 1 first, cloud last) keeps
// every pass reading unmodified input.
void evolve_factored(const Entries& active, StateDistribution& next, int u, double q_u, double epsilon)
{
    const int k = next.k;

    std::vector<Entries> groups(static_cast<size_t>(k) + 1);
    for (const auto& [key, p] : active)
        groups[min_ripple_of(key, k)].emplace_back(key, p);

    std::vector<PmfCache> ripple_pmf;
    ripple_pmf.reserve(static_cast<size_t>(k));
    for (int h = 1; h <= k; ++h)
        ripple_pmf.emplace_back(ripple_exit_probability(h, u));
    PmfCache cloud_pmf(q_u);

    StateMap scratch;
    for (int h_min = 1; h_min <= k; ++h_min) {
        auto cur = std::move(groups[h_min]);
        if (cur.empty())
            continue;

        for (int h = h_min; h <= k; ++h) {
            scratch.clear();
            scratch.reserve(cur.size() * 2);
            const int shift_h = h == h_min ? 1 : 0;
            for (const auto& [key, p] : cur) {
                const int r = field(key, h - 1);
                if (r == 0) {
                    add_mass(scratch, key, p);
                    continue;
                }
                const int trials = r - shift_h;
                const auto& pmf = ripple_pmf[h - 1](trials);
                const uint64_t step = h > 1 ? unit(h - 1) - unit(h - 2) : unit(0);
                for (int s = 0; s <= trials; ++s) {
                    const double w = p * pmf[s];
                    if (w == 0.0)
                        continue;
                    if (w < epsilon) {
                        next.pruned_mass += w;
                        continue;
                    }
                    add_mass(scratch, key - static_cast<uint64_t>(s + shift_h) * step, w);
                }
            }
            cur = scratch.entries();
        }

        const uint64_t step = unit(k) - unit(k - 1);
        for (const auto& [key, p] : cur) {
            const int c = field(key, k);
            if (c == 0) {
                add_mass(next.mass, key, p);
                continue;
            }
            const auto& pmf = cloud_pmf(c);
            for (int b = 0; b <= c; ++b) {
                const double w = p * pmf[b];
                if (w == 0.0)
                    continue;
                if (w < epsilon) {
                    next.pruned_mass += w;
                    continue;
                }
                add_mass(next.mass, key - static_cast<uint64_t>(b) * step, w);
            }
        }
    }
}

StateDistribution evolve_with(const StateDistribution& dist, double q_u, const EvolveOptions& options)
{
    if (dist.u < 1)
        throw std::invalid_argument("evolve requires u >= 1");

    StateDistribution next = next_stage_shell(dist);

    // Halted states leave the recursion here.
    Entries active;
    active.reserve(dist.mass.size());
    CompensatedSum halted;
    for (const auto& [key, p] : dist.mass) {
        if (min_ripple_of(key, dist.k) == 0)
            halted.add(p);
        else
            active.emplace_back(key, p);
    }
    next.terminal_mass[dist.u] += halted.value();

    if (options.method == EvolveMethod::direct)
        evolve_direct(active, next, dist.u, q_u, options.epsilon);
    else
        evolve_factored(active, next, dist.u, q_u, options.epsilon);

    if (options.epsilon > 0.0) {
        CompensatedSum lost;
        for (const auto& [key, p] : next.mass)
            if (p < options.epsilon)
                lost.add(p);
        if (lost.value() > 0.0)
            next.mass.erase_if([&](uint64_t, double p) { return p < options.epsilon; });
        next.pruned_mass += lost.value();
    }

    if (next.u == 0) {
        CompensatedSum done;
        for (const auto& [key, p] : next.mass)
            done.add(p);
        next.success_mass += done.value();
        next.mass.clear();
    }
    return next;
}

} // namespace

int DecoderState::ripple_total() const
{
    int total = 0;
    for (int r : ripple)
        total += r;
    return total;
}

int DecoderState::min_ripple() const
{
    for (int h = 1; h <= k(); ++h)
        if (ripple[h - 1] > 0)
            return h;
    return 0;
}

uint64_t DecoderState::key() const
{
    if (k() < 1 || k() > kMaxAnalysisK)
        throw std::invalid_argument("decoder state needs 1 <= k <= " + std::to_string(kMaxAnalysisK));
    auto checked = [](int v) {
        if (v < 0 || v > kMaxAnalysisSlots)
            throw std::invalid_argument("decoder state component out of range: " + std::to_string(v));
        return static_cast<uint64_t>(v);
    };
    uint64_t key = checked(cloud) << (kFieldBits * k());
    for (int h = 1; h <= k(); ++h)
        key |= checked(ripple[h - 1]) << (kFieldBits * (h - 1));
    return key;
}

DecoderState DecoderState::from_key(uint64_t key, int k)
{
    DecoderState s;
    s.cloud = field(key, k);
    s.ripple.resize(static_cast<size_t>(k));
    for (int h = 1; h <= k; ++h)
        s.ripple[h - 1] = field(key, h - 1);
    return s;
}

DecoderState apply_delta(const DecoderState& state, const TransitionDelta& delta)
{
    const int k = state.k();
    if (static_cast<int>(delta.a.size()) != k)
        throw std::invalid_argument("delta and state disagree on k");
    DecoderState out = state;
    out.cloud -= delta.b;
    for (int h = 1; h <= k; ++h) {
        const int incoming = h == k ? delta.b : delta.a[h];
        out.ripple[h - 1] += incoming - delta.a[h - 1];
    }
    if (out.cloud < 0
        || std::any_of(out.ripple.begin(), out.ripple.end(), [](int r) { return r < 0; }))
        throw std::invalid_argument("delta drives a component negative");
    return out;
}

double StateDistribution::active_mass() const
{
    CompensatedSum s;
    for (const auto& [key, p] : mass)
        s.add(p);
    return s.value();
}

double StateDistribution::total_mass() const
{
    CompensatedSum s;
    s.add(active_mass());
    for (double t : terminal_mass)
        s.add(t);
    s.add(success_mass);
    s.add(pruned_mass);
    return s.value();
}

bool CloudExit::clamp_diagnostic() const
{
    return std::abs(q - raw) > 1e-9;
}

CloudExit cloud_exit_probability(const SystemParams& params, const DegreeDistribution& omega, int u)
{
    if (u < 1 || u > params.n())
        throw std::invalid_argument("cloud exit probability needs 1 <= u <= n, got u = " + std::to_string(u));
    const LogFactorials lf(params.n());
    return cloud_exit_from(lf, params.n(), params.k(), omega, u);
}

StateDistribution initial_state_distribution(const SystemParams& params,
                                             const DegreeDistribution& omega,
                                             double epsilon)
{
    check_supported(params);
    const int k = params.k();
    const int m = params.m();

    StateDistribution dist;
    dist.n = params.n();
    dist.k = k;
    dist.u = params.n();
    dist.terminal_mass.assign(static_cast<size_t>(params.n()) + 1, 0.0);

    // Category probabilities: cloud first, then ripples k..1; the rest is degree 0.
    CompensatedSum cloud_p;
    for (int d = k + 1; d <= omega.max_degree(); ++d)
        cloud_p.add(omega[d]);

    // Sequential conditional binomials: cloud ~ Bin(m, P_cloud), ripple k ~
    // Bin(rest, Omega_k / (Omega_0 + ... + Omega_k)), and so on down to ripple 1.
    // Each partial product is an exact marginal, so a skipped branch drops
    // exactly its partial product.
    std::vector<double> cond(static_cast<size_t>(k) + 1);
    cond[k] = cloud_p.value();
    for (int h = k; h >= 1; --h) {
        CompensatedSum below;
        for (int i = 0; i <= h; ++i)
            below.add(omega[i]);
        cond[h - 1] = below.value() > 0.0 ? std::min(1.0, omega[h] / below.value()) : 0.0;
    }

    CompensatedSum pruned;
    auto recurse = [&](auto& self, int level, int remaining, uint64_t key, double partial) -> void {
        if (level < 0) {
            if (partial < epsilon)
                pruned.add(partial);
            else
                dist.mass[key] += partial;
            return;
        }
        const auto pmf = binomial_pmf_table(remaining, cond[level]);
        for (int j = 0; j <= remaining; ++j) {
            const double w = partial * pmf[j];
            if (w == 0.0)
                continue;
            if (w < epsilon) {
                pruned.add(w);
                continue;
            }
            self(self, level - 1, remaining - j, key + static_cast<uint64_t>(j) * unit(level), w);
        }
    };
    recurse(recurse, k, m, uint64_t{0}, 1.0);
    dist.pruned_mass = pruned.value();
    return dist;
}

std::vector<std::pair<TransitionDelta, double>>
transition_distribution(const DecoderState& state, int u, double q_u, double epsilon)
{
    if (u < 1)
        throw std::invalid_argument("transition requires u >= 1");
    const int k = state.k();
    std::vector<std::pair<TransitionDelta, double>> out;
    enumerate_transitions(state.key(), k, u, q_u, epsilon,
                          [&](uint64_t, int b, const std::vector<int>& a, double w) {
                              out.emplace_back(TransitionDelta{b, a}, w);
                          });
    return out;
}

StateDistribution evolve(const StateDistribution& dist,
                         const SystemParams& params,
                         const DegreeDistribution& omega,
                         const EvolveOptions& options)
{
    if (dist.u < 1)
        throw std::invalid_argument("evolve requires u >= 1");
    const double q_u = cloud_exit_probability(params, omega, dist.u).q;
    return evolve_with(dist, q_u, options);
}

double packet_error_rate(const StateDistribution& finished)
{
    CompensatedSum per;
    for (int v = 1; v < static_cast<int>(finished.terminal_mass.size()); ++v)
        per.add(static_cast<double>(v) / static_cast<double>(finished.n) * finished.terminal_mass[v]);
    return std::clamp(per.value(), 0.0, 1.0);
}

double throughput(double per, const SystemParams& params)
{
    if (params.m() < 1)
        throw std::invalid_argument("throughput is undefined for m = 0");
    return static_cast<double>(params.n()) * (1.0 - per)
         / (static_cast<double>(params.k()) * static_cast<double>(params.m()));
}

StateDistribution run_decoder(const SystemParams& params, const AnalysisOptions& options, AnalysisResult* diagnostics)
{
    check_supported(params);
    const auto omega = degree_distribution(params);
    const LogFactorials lf(params.n());
    const EvolveOptions step{options.epsilon, options.method};

    auto record = [&](const StateDistribution& d) {
        if (!diagnostics)
            return;
        diagnostics->mass_error = std::max(diagnostics->mass_error, std::abs(d.total_mass() - 1.0));
        if (options.keep_trace) {
            StageSummary s;
            s.u = d.u;
            s.states = d.mass.size();
            s.active = d.active_mass();
            CompensatedSum t;
            for (double x : d.terminal_mass)
                t.add(x);
            s.terminal = t.value();
            s.success = d.success_mass;
            s.pruned = d.pruned_mass;
            diagnostics->trace.push_back(s);
        }
    };

    auto dist = initial_state_distribution(params, omega, options.epsilon);
    record(dist);
    while (dist.u > 0 && !dist.mass.empty()) {
        const CloudExit q = cloud_exit_from(lf, params.n(), params.k(), omega, dist.u);
        if (diagnostics && q.clamp_diagnostic())
            ++diagnostics->clamp_diagnostics;
        dist = evolve_with(dist, q.q, step);
        record(dist);
    }
    return dist;
}

AnalysisResult analyze(const SystemParams& params, const AnalysisOptions& options)
{
    if (params.m() < 1)
        throw std::invalid_argument("analysis needs m >= 1");
    AnalysisResult result;
    const auto finished = run_decoder(params, options, &result);
    result.per = packet_error_rate(finished);
    result.throughput = throughput(result.per, params);
    result.pruned_mass = finished.pruned_mass;
    return result;
}

} // namespace frameless
