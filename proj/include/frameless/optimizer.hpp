#pragma once

#include <optional>
#include <vector>

#include "frameless/analysis.hpp"

namespace frameless {

/// Inclusive integer slot-count range.
struct SlotRange
{
    int lo = 1;
    int hi = 1;
};

/// Integer m over m/n in [0.1, 2.0].
SlotRange default_slot_range(int n);

struct PeakThroughput
{
    double t_max = 0.0;
    int m = 0;
    double per = 1.0;
    double pruned_mass = 0.0;
    int evaluations = 0;
    /// Largest per-stage |total mass - 1| over every evaluated m.
    double mass_error = 0.0;
};

/// Best throughput over every integer m in `range`; smallest m wins ties.
PeakThroughput peak_throughput(int n, int k, double beta, SlotRange range,
                               const AnalysisOptions& options = {});

enum class PeakSearch
{
    /// Every m in the range.
    exhaustive,
    /// Hill climb from a hint (or from an exponential probe upwards from the
    /// low end when there is none), continuing `patience` steps past the best
    /// point on each side.
    unimodal,
};

/// Peak search with an optional starting m. Same tie rule as peak_throughput.
PeakThroughput search_peak(int n, int k, double beta, SlotRange range, PeakSearch search,
                           std::optional<int> hint, const AnalysisOptions& options = {},
                           int patience = 2);

struct OptimizerConfig
{
    double beta_min = 0.5;
    double beta_max = 8.0;
    double coarse_step = 0.1;
    double refine_step = 0.01;
    std::optional<SlotRange> m_range;
    PeakSearch search = PeakSearch::unimodal;
    double epsilon = 1e-15;
};

struct ProfilePoint
{
    double beta = 0.0;
    double t_max = 0.0;
    int m = 0;
};

struct Optimum
{
    int n = 0;
    int k = 0;
    double beta_opt = 0.0;
    double t_max = 0.0;
    int m_at_peak = 0;
    double m_over_n_at_peak = 0.0;
    double per_at_peak = 1.0;
    double pruned_mass = 0.0;
    /// Largest per-stage mass error over every analysis the search ran.
    double mass_error = 0.0;
    OptimizerConfig grid;
    SlotRange m_range;
    std::vector<ProfilePoint> coarse_profile;
    std::vector<ProfilePoint> refine_profile;
};

/// Coarse beta grid over [beta_min, beta_max], then a fine grid within one
/// coarse step of the incumbent. Smallest beta wins exact ties.
/// Throws std::invalid_argument unless 0 < beta_min <= beta_max <= n and both steps are positive.
Optimum optimize_beta(int n, int k, const OptimizerConfig& config);

} // namespace frameless
