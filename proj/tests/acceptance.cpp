// Acceptance gate: one PASS/FAIL line per criterion, exit status 1 if any fails.
// Table rows for n = 200 take tens of minutes and run only with --full.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "frameless/analysis.hpp"
#include "frameless/cli.hpp"
#include "frameless/optimizer.hpp"
#include "frameless/oracle.hpp"
#include "frameless/simulator.hpp"
#include "oracles.hpp"

using namespace frameless;

namespace {

struct TableRow
{
    int n;
    int k;
    double beta;
    double t_max;
    double m_over_n;
};

const TableRow kTable[] = {
    {50, 1, 2.47, 0.67, 1.32},  {50, 2, 3.56, 0.67, 0.62},  {50, 3, 4.47, 0.67, 0.38},
    {100, 1, 2.62, 0.72, 1.26}, {100, 2, 3.81, 0.72, 0.58}, {100, 3, 4.86, 0.72, 0.36},
    {200, 1, 2.71, 0.76, 1.2},  {200, 2, 4.04, 0.76, 0.56}, {200, 3, 5.22, 0.76, 0.35},
};

int failures = 0;
double worst_mass_error = 0.0;

void verdict(bool ok, const std::string& label)
{
    std::printf("%s  %s\n", ok ? "PASS" : "FAIL", label.c_str());
    std::fflush(stdout);
    if (!ok)
        ++failures;
}

void detail(const char* fmt, auto... args)
{
    std::printf("      ");
    std::printf(fmt, args...);
    std::printf("\n");
    std::fflush(stdout);
}

double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

AnalysisResult tracked(const SystemParams& p, const AnalysisOptions& o = {})
{
    auto r = analyze(p, o);
    worst_mass_error = std::max(worst_mass_error, r.mass_error);
    return r;
}

std::vector<Optimum> table_reproduction(bool full)
{
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<Optimum> found;
    bool ok = true;
    int rows = 0;
    for (const auto& row : kTable) {
        if (row.n > 100 && !full)
            continue;
        const auto t1 = std::chrono::steady_clock::now();
        OptimizerConfig c;
        c.beta_min = row.k + 0.5;
        c.beta_max = row.k + 3.0;
        const auto o = optimize_beta(row.n, row.k, c);
        worst_mass_error = std::max(worst_mass_error, o.mass_error);
        const bool b_ok = std::abs(o.beta_opt - row.beta) <= 0.05 + 1e-9;
        const bool t_ok = std::abs(o.t_max - row.t_max) <= 0.005 + 1e-9;
        const bool r_ok = std::abs(o.m_over_n_at_peak - row.m_over_n) <= 0.05 + 1e-9;
        detail("n=%-3d k=%d  beta %.2f (%.2f)%s  T %.4f (%.2f)%s  m/n %.3f (%.2f)%s  [%.0f s]", row.n, row.k,
               o.beta_opt, row.beta, b_ok ? "" : " !", o.t_max, row.t_max, t_ok ? "" : " !",
               o.m_over_n_at_peak, row.m_over_n, r_ok ? "" : " !", seconds_since(t1));
        ok = ok && b_ok && t_ok && r_ok;
        found.push_back(o);
        ++rows;
    }
    verdict(ok, "1 table reproduction (" + std::to_string(rows) + " of 9 rows" + (full ? "" : ", n = 200 needs --full")
                    + ", " + std::to_string(static_cast<int>(seconds_since(t0))) + " s)");
    return found;
}

void invariance_in_k(const std::vector<Optimum>& found)
{
    bool ok = true;
    for (int n : {50, 100}) {
        double lo = 1.0, hi = 0.0;
        int seen = 0;
        for (const auto& o : found)
            if (o.n == n) {
                lo = std::min(lo, o.t_max);
                hi = std::max(hi, o.t_max);
                ++seen;
            }
        detail("n=%d  max - min T_max over k = %.5f", n, hi - lo);
        ok = ok && seen == 3 && hi - lo <= 0.005;
    }
    verdict(ok, "2 peak throughput invariant in k");
}

void optimizer_trends(const std::vector<Optimum>& found)
{
    bool grows = true, shrinks = true;
    for (const auto& a : found)
        for (const auto& b : found) {
            if (a.k == b.k && a.n < b.n && a.t_max > b.t_max)
                grows = false;
            if (a.n == b.n && a.k < b.k && a.m_over_n_at_peak <= b.m_over_n_at_peak)
                shrinks = false;
        }
    verdict(grows, "   T_max non-decreasing in n");
    verdict(shrinks, "   m/n at peak decreasing in k");
}

void simulation_cross_validation()
{
    const auto t0 = std::chrono::steady_clock::now();
    bool ok = true;
    for (int m : {40, 50, 58, 70, 90}) {
        const SystemParams p(100, m, 2, 3.7);
        const auto a = tracked(p);
        const auto s = simulate(p, 10000, 7);
        const double z_per = s.per_stderr > 0.0 ? (s.per_estimate - a.per) / s.per_stderr : 0.0;
        const double z_t = s.throughput_stderr > 0.0 ? (s.throughput_estimate - a.throughput) / s.throughput_stderr : 0.0;
        const bool point_ok = std::abs(s.per_estimate - a.per) <= 4.0 * s.per_stderr
                           && std::abs(s.throughput_estimate - a.throughput) <= 4.0 * s.throughput_stderr;
        detail("m/n=%.2f  PER %.5f vs %.5f (z=%+.2f)  T %.5f vs %.5f (z=%+.2f)", m / 100.0, s.per_estimate, a.per,
               z_per, s.throughput_estimate, a.throughput, z_t);
        ok = ok && point_ok;
    }
    verdict(ok, "3 simulation within 4 standard errors of analysis (" + std::to_string(static_cast<int>(seconds_since(t0)))
                    + " s)");
}

void oracle_equivalence()
{
    const auto t0 = std::chrono::steady_clock::now();
    AnalysisOptions exact;
    exact.epsilon = 0.0;
    double worst = 0.0;
    int cases = 0;
    for (int k = 1; k <= 2; ++k)
        for (int n = 1; n <= 16; ++n)
            for (int m = 1; n * m <= 16; ++m)
                for (double beta : {0.5, 1.0, 2.0, double(n)}) {
                    if (beta > n)
                        continue;
                    const SystemParams p(n, m, k, beta);
                    worst = std::max(worst, std::abs(tracked(p, exact).per - exact_per(p)));
                    ++cases;
                }
    const double secs = seconds_since(t0);
    detail("%d cases, worst |difference| %.3g, %.1f s", cases, worst, secs);
    verdict(worst <= 1e-10 && secs <= 60.0, "4 exact analysis equals the exhaustive oracle");
}

bool transition_rows()
{
    Rng rng(2718);
    double worst = 0.0;
    for (int i = 0; i < 2000; ++i) {
        const int k = 1 + static_cast<int>(rng.below(3));
        DecoderState s;
        s.cloud = static_cast<int>(rng.below(40));
        for (int h = 0; h < k; ++h)
            s.ripple.push_back(static_cast<int>(rng.below(15)));
        if (s.ripple_total() == 0)
            s.ripple[rng.below(k)] = 1;
        const int u = k + static_cast<int>(rng.below(200));
        CompensatedSum total;
        for (const auto& [d, w] : transition_distribution(s, u, rng.uniform01()))
            total.add(w);
        worst = std::max(worst, std::abs(total.value() - 1.0));
    }
    detail("transition rows: 2000 random states, worst |sum - 1| %.3g", worst);
    return worst <= 1e-12;
}

bool cloud_exit_bounds()
{
    long checked = 0;
    bool ok = true;
    for (int n : {1, 2, 3, 5, 10, 25, 50, 100, 200})
        for (int k = 1; k <= 3; ++k)
            for (double beta = 0.25; beta <= std::min<double>(n, 12.0) + 1e-9; beta += 0.25) {
                const SystemParams p(n, 1, k, beta);
                const auto omega = degree_distribution(p);
                for (int u = 1; u <= n; ++u) {
                    const auto q = cloud_exit_probability(p, omega, u);
                    ok = ok && q.q >= 0.0 && q.q <= 1.0 && !q.clamp_diagnostic();
                    ++checked;
                }
            }
    detail("cloud exit probability: %ld (n, k, beta, u) points in [0, 1]", checked);
    return ok;
}

bool collision_channel()
{
    AnalysisOptions exact;
    exact.epsilon = 0.0;
    double worst = 0.0;
    for (int n : {2, 5, 10, 20, 30})
        for (double ratio : {0.5, 1.0, 1.5})
            for (double beta : {1.0, 2.5, 4.0}) {
                if (beta > n)
                    continue;
                const int m = std::max(1, static_cast<int>(ratio * n));
                const double a = tracked(SystemParams(n, m, 1, beta), exact).per;
                worst = std::max(worst, std::abs(a - oracles::collision_channel_per(n, m, beta)));
            }
    detail("k = 1 against the collision-channel recursion: worst |difference| %.3g", worst);
    return worst <= 1e-12;
}

bool tie_break_independence()
{
    Rng pick(4242);
    int mismatches = 0;
    for (int trial = 0; trial < 10000; ++trial) {
        const int n = 1 + static_cast<int>(pick.below(30));
        const int m = 1 + static_cast<int>(pick.below(30));
        const int k = 1 + static_cast<int>(pick.below(3));
        const double beta = std::min<double>(n, 0.5 + 5.0 * pick.uniform01());
        const auto g = generate_graph(SystemParams(n, m, k, beta), pick);
        Rng a(derive_seed(trial, 0)), b(derive_seed(trial, 1));
        if (sic_decode(g, k, a).resolved != sic_decode(g, k, b).resolved)
            ++mismatches;
    }
    detail("tie-break independence: %d mismatches over 10000 graphs", mismatches);
    return mismatches == 0;
}

bool simulation_determinism()
{
    const char* args[] = {"frameless", "simulate", "--n", "100", "--k", "2", "--beta", "3.7", "--runs", "2000",
                          "--seed", "7", "--m-min", "40", "--m-max", "90", "--m-step", "25"};
    std::ostringstream first, second, err;
    const int argc = static_cast<int>(std::size(args));
    const bool ran = cli::run(argc, args, first, err) == 0 && cli::run(argc, args, second, err) == 0;
    detail("seeded simulation: %zu bytes, identical: %s", first.str().size(),
           first.str() == second.str() ? "yes" : "no");
    return ran && !first.str().empty() && first.str() == second.str();
}

void property_suite()
{
    const bool rows = transition_rows();
    const bool bounds = cloud_exit_bounds();
    const bool specialization = collision_channel();
    const bool ties = tie_break_independence();
    const bool determinism = simulation_determinism();
    detail("per-stage mass conservation: worst error %.3g over every analysis run above", worst_mass_error);
    const bool mass = worst_mass_error <= 1e-9;
    verdict(rows && bounds && specialization && ties && determinism && mass, "5 property suite");
}

void pruning_audit()
{
    const SystemParams p(100, 58, 2, 3.7);
    const auto fine = tracked(p);
    AnalysisOptions coarse_options;
    coarse_options.epsilon = 1e-12;
    const auto coarse = tracked(p, coarse_options);
    const double drift = std::abs(fine.per - coarse.per);
    detail("pruned mass %.3g at default epsilon, |PER(1e-15) - PER(1e-12)| = %.3g", fine.pruned_mass, drift);
    verdict(fine.pruned_mass <= 1e-9 && drift <= 1e-6, "6 pruning audit");
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"acceptance criteria"};
    bool full = false;
    app.add_flag("--full", full, "include the n = 200 table rows");
    CLI11_PARSE(app, argc, argv);

    const auto found = table_reproduction(full);
    invariance_in_k(found);
    optimizer_trends(found);
    simulation_cross_validation();
    oracle_equivalence();
    pruning_audit();
    property_suite();

    std::printf("%d failing\n", failures);
    return failures == 0 ? 0 : 1;
}
