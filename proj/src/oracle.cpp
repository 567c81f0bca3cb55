#include "frameless/oracle.hpp"

#include <bit>
#include <cmath>
#include <stdexcept>
#include <string>

namespace frameless {

namespace {

void check_budget(const SystemParams& params)
{
    if (params.n() * params.m() > kOracleMaxCells)
        throw std::invalid_argument("oracle budget exceeded: n * m = "
                                    + std::to_string(params.n() * params.m()) + " > "
                                    + std::to_string(kOracleMaxCells));
}

// Weight of a pattern with e edges out of `cells`.
std::vector<double> pattern_weights(int cells, double p)
{
    std::vector<double> w(static_cast<size_t>(cells) + 1);
    for (int e = 0; e <= cells; ++e)
        w[e] = std::pow(p, e) * std::pow(1.0 - p, cells - e);
    return w;
}

std::vector<unsigned> split_slots(uint32_t pattern, int n, int m)
{
    const unsigned user_mask = (1u << n) - 1u;
    std::vector<unsigned> slots(static_cast<size_t>(m));
    for (int j = 0; j < m; ++j)
        slots[j] = (pattern >> (j * n)) & user_mask;
    return slots;
}

uint64_t state_key(const std::vector<unsigned>& slots, unsigned unresolved, int k)
{
    DecoderState s;
    s.ripple.assign(static_cast<size_t>(k), 0);
    for (unsigned slot : slots) {
        const int red = std::popcount(slot & unresolved);
        if (red > k)
            ++s.cloud;
        else if (red > 0)
            ++s.ripple[red - 1];
    }
    return s.key();
}

void walk_decoder(const std::vector<unsigned>& slots, unsigned unresolved, int k, double prob,
                  std::vector<std::map<uint64_t, double>>& occupancy)
{
    const int u = std::popcount(unresolved);
    occupancy[u][state_key(slots, unresolved, k)] += prob;
    if (u == 0)
        return;

    int h_min = 0;
    for (unsigned slot : slots) {
        const int red = std::popcount(slot & unresolved);
        if (red >= 1 && red <= k && (h_min == 0 || red < h_min))
            h_min = red;
    }
    if (h_min == 0)
        return;

    std::vector<unsigned> candidates;
    for (unsigned slot : slots)
        if (std::popcount(slot & unresolved) == h_min)
            candidates.push_back(slot & unresolved);

    const double pick = prob / static_cast<double>(candidates.size()) / static_cast<double>(h_min);
    for (unsigned slot : candidates)
        for (unsigned rest = slot; rest != 0; rest &= rest - 1)
            walk_decoder(slots, unresolved & ~(rest & -rest), k, pick, occupancy);
}

} // namespace

int peeling_closure_unresolved(const std::vector<unsigned>& slots, int n, int k)
{
    unsigned unresolved = n >= 32 ? ~0u : (1u << n) - 1u;
    bool changed = true;
    while (changed) {
        changed = false;
        for (unsigned slot : slots) {
            const unsigned live = slot & unresolved;
            const int red = std::popcount(live);
            if (red >= 1 && red <= k) {
                unresolved &= ~live;
                changed = true;
            }
        }
    }
    return std::popcount(unresolved);
}

double exact_per(const SystemParams& params)
{
    check_budget(params);
    const int n = params.n();
    const int m = params.m();
    const int cells = n * m;
    if (m == 0)
        return 1.0;

    // Unresolved-user totals are integers, bucketed by edge count, so the
    // only floating-point work is the final weighted sum.
    std::vector<uint64_t> unresolved_by_edges(static_cast<size_t>(cells) + 1, 0);
    const uint32_t patterns = uint32_t{1} << cells;
    for (uint32_t pattern = 0; pattern < patterns; ++pattern) {
        const auto slots = split_slots(pattern, n, m);
        unresolved_by_edges[std::popcount(pattern)]
            += static_cast<uint64_t>(peeling_closure_unresolved(slots, n, params.k()));
    }

    const auto w = pattern_weights(cells, params.p());
    CompensatedSum per;
    for (int e = 0; e <= cells; ++e)
        per.add(w[e] * static_cast<double>(unresolved_by_edges[e]));
    return per.value() / static_cast<double>(n);
}

std::vector<std::map<uint64_t, double>> exact_state_occupancy(const SystemParams& params)
{
    check_budget(params);
    if (params.k() > kMaxAnalysisK)
        throw std::invalid_argument("state occupancy needs k <= " + std::to_string(kMaxAnalysisK));
    const int n = params.n();
    const int m = params.m();
    const int cells = n * m;
    const auto w = pattern_weights(cells, params.p());

    std::vector<std::map<uint64_t, double>> occupancy(static_cast<size_t>(n) + 1);
    const uint32_t patterns = uint32_t{1} << cells;
    for (uint32_t pattern = 0; pattern < patterns; ++pattern) {
        const auto slots = split_slots(pattern, n, m);
        walk_decoder(slots, (1u << n) - 1u, params.k(), w[std::popcount(pattern)], occupancy);
    }
    return occupancy;
}

} // namespace frameless
