#include "frameless/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>

namespace frameless {

namespace {

struct Evaluated
{
    double t = 0.0;
    double per = 1.0;
    double pruned = 0.0;
};

class PeakEvaluator
{
public:
    PeakEvaluator(int n, int k, double beta, const AnalysisOptions& options)
      : n_(n), k_(k), beta_(beta), options_(options)
    {
    }

    const Evaluated& operator()(int m)
    {
        auto it = cache_.find(m);
        if (it != cache_.end())
            return it->second;
        const auto r = analyze(SystemParams(n_, m, k_, beta_), options_);
        mass_error_ = std::max(mass_error_, r.mass_error);
        return cache_.emplace(m, Evaluated{r.throughput, r.per, r.pruned_mass}).first->second;
    }

    // Strictly better, or equal and smaller m.
    bool better(int a, int b)
    {
        const double ta = (*this)(a).t;
        const double tb = (*this)(b).t;
        return ta > tb || (ta == tb && a < b);
    }

    PeakThroughput result(int m)
    {
        const auto& e = (*this)(m);
        return {e.t, m, e.per, e.pruned, static_cast<int>(cache_.size()), mass_error_};
    }

private:
    int n_;
    int k_;
    double beta_;
    AnalysisOptions options_;
    std::map<int, Evaluated> cache_;
    double mass_error_ = 0.0;
};

void check_range(SlotRange range)
{
    if (range.lo < 1 || range.hi < range.lo)
        throw std::invalid_argument("slot range must satisfy 1 <= lo <= hi, got [" + std::to_string(range.lo)
                                    + ", " + std::to_string(range.hi) + "]");
}

// Grid values are snapped to 1e-9 so accumulated steps print cleanly.
double grid_value(double start, double step, int i)
{
    return std::round((start + step * i) * 1e9) / 1e9;
}

std::vector<double> beta_grid(double lo, double hi, double step)
{
    std::vector<double> out;
    for (int i = 0;; ++i) {
        const double b = grid_value(lo, step, i);
        if (b > hi + 1e-9)
            break;
        out.push_back(std::min(b, hi));
    }
    return out;
}

} // namespace

SlotRange default_slot_range(int n)
{
    return {std::max(1, static_cast<int>(std::ceil(0.1 * n - 1e-9))), std::max(1, 2 * n)};
}

PeakThroughput peak_throughput(int n, int k, double beta, SlotRange range, const AnalysisOptions& options)
{
    return search_peak(n, k, beta, range, PeakSearch::exhaustive, std::nullopt, options);
}

PeakThroughput search_peak(int n, int k, double beta, SlotRange range, PeakSearch search,
                           std::optional<int> hint, const AnalysisOptions& options, int patience)
{
    check_range(range);
    PeakEvaluator eval(n, k, beta, options);

    if (search == PeakSearch::exhaustive) {
        int best = range.lo;
        for (int m = range.lo; m <= range.hi; ++m)
            if (eval.better(m, best))
                best = m;
        return eval.result(best);
    }

    int best;
    if (hint) {
        best = std::clamp(*hint, range.lo, range.hi);
    } else {
        // Gallop upwards from the low end until throughput starts to drop;
        // probing far past the peak is what makes large k expensive.
        best = range.lo;
        for (int prev = range.lo, step = 1; prev < range.hi; step *= 2) {
            const int next = std::min(range.hi, prev + step);
            if (eval.better(next, best))
                best = next;
            else if (eval(next).t < eval(best).t)
                break;
            prev = next;
        }
    }

    for (int dir : {-1, +1}) {
        int misses = 0;
        for (int m = best + dir; m >= range.lo && m <= range.hi && misses < patience; m += dir) {
            if (eval.better(m, best)) {
                best = m;
                misses = 0;
            } else {
                ++misses;
            }
        }
    }
    return eval.result(best);
}

Optimum optimize_beta(int n, int k, const OptimizerConfig& config)
{
    if (!(config.beta_min > 0.0) || config.beta_max < config.beta_min || config.beta_max > n)
        throw std::invalid_argument("beta range must satisfy 0 < beta_min <= beta_max <= n");
    if (!(config.coarse_step > 0.0) || !(config.refine_step > 0.0))
        throw std::invalid_argument("beta steps must be positive");

    Optimum opt;
    opt.n = n;
    opt.k = k;
    opt.grid = config;
    opt.m_range = config.m_range.value_or(default_slot_range(n));
    check_range(opt.m_range);

    AnalysisOptions options;
    options.epsilon = config.epsilon;

    std::optional<int> hint;
    PeakThroughput best_peak;
    bool have_best = false;

    auto visit = [&](double beta, std::vector<ProfilePoint>& profile) {
        const auto peak = search_peak(n, k, beta, opt.m_range, config.search, hint, options);
        hint = peak.m;
        opt.mass_error = std::max(opt.mass_error, peak.mass_error);
        profile.push_back({beta, peak.t_max, peak.m});
        if (!have_best || peak.t_max > best_peak.t_max
            || (peak.t_max == best_peak.t_max && beta < opt.beta_opt)) {
            best_peak = peak;
            opt.beta_opt = beta;
            have_best = true;
        }
    };

    for (double beta : beta_grid(config.beta_min, config.beta_max, config.coarse_step))
        visit(beta, opt.coarse_profile);

    const double centre = opt.beta_opt;
    hint = best_peak.m;
    const double lo = std::max(config.beta_min, centre - config.coarse_step);
    const double hi = std::min(config.beta_max, centre + config.coarse_step);
    for (double beta : beta_grid(lo, hi, config.refine_step))
        visit(beta, opt.refine_profile);

    opt.t_max = best_peak.t_max;
    opt.m_at_peak = best_peak.m;
    opt.m_over_n_at_peak = static_cast<double>(best_peak.m) / n;
    opt.per_at_peak = best_peak.per;
    opt.pruned_mass = best_peak.pruned_mass;
    return opt;
}

} // namespace frameless
