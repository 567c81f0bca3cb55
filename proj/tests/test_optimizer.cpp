#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "frameless/optimizer.hpp"

using namespace frameless;

TEST_CASE("default slot range")
{
    CHECK(default_slot_range(100).lo == 10);
    CHECK(default_slot_range(100).hi == 200);
    CHECK(default_slot_range(55).lo == 6);
    CHECK(default_slot_range(55).hi == 110);
    CHECK(default_slot_range(1).lo == 1);
}

TEST_CASE("peak throughput examples")
{
    SUBCASE("n=50 k=1")
    {
        const auto pk = peak_throughput(50, 1, 2.47, {40, 100});
        // The table prints 0.67 for 0.6770, truncated to two decimals.
        CHECK(std::floor(pk.t_max * 100.0) / 100.0 == doctest::Approx(0.67));
        CHECK(pk.t_max == doctest::Approx(0.677005672384).epsilon(1e-9));
        CHECK(pk.m / 50.0 == doctest::Approx(1.32).epsilon(0.05 / 1.32));
        CHECK(pk.evaluations == 61);
        CHECK(pk.t_max == analyze(SystemParams(50, pk.m, 1, 2.47)).throughput);
    }
    SUBCASE("n=50 k=3")
    {
        const auto pk = peak_throughput(50, 3, 4.47, {10, 40});
        CHECK(pk.t_max == doctest::Approx(0.67).epsilon(0.005 / 0.67));
        CHECK(pk.m / 50.0 == doctest::Approx(0.38).epsilon(0.05 / 0.38));
    }
    SUBCASE("almost no transmissions")
    {
        const auto pk = peak_throughput(50, 1, 0.01, default_slot_range(50));
        CHECK(pk.t_max < 0.01);
    }
    SUBCASE("errors")
    {
        CHECK_THROWS_AS(peak_throughput(50, 1, 2.0, {20, 10}), std::invalid_argument);
        CHECK_THROWS_AS(peak_throughput(50, 1, 2.0, {0, 10}), std::invalid_argument);
    }
}

TEST_CASE("unimodal search finds the exhaustive peak")
{
    for (int k = 1; k <= 3; ++k)
        for (double beta : {k + 0.2, k + 1.5, k + 3.0}) {
            const SlotRange range{2, 36};
            const auto full = peak_throughput(24, k, beta, range);
            const auto climb = search_peak(24, k, beta, range, PeakSearch::unimodal, std::nullopt);
            CHECK_MESSAGE(climb.m == full.m, "k=" << k << " beta=" << beta);
            CHECK(climb.t_max == full.t_max);
            CHECK(climb.evaluations < full.evaluations);
            const auto hinted = search_peak(24, k, beta, range, PeakSearch::unimodal, range.hi);
            CHECK(hinted.m == full.m);
        }
}

TEST_CASE("search respects the range edges")
{
    const auto low = search_peak(30, 1, 2.5, {5, 12}, PeakSearch::unimodal, std::nullopt);
    CHECK(low.m == 12);
    const auto high = search_peak(30, 1, 2.5, {50, 60}, PeakSearch::unimodal, 55);
    CHECK(high.m == 50);
    const auto single = search_peak(30, 1, 2.5, {33, 33}, PeakSearch::unimodal, 99);
    CHECK(single.m == 33);
}

TEST_CASE("beta optimization on a small population")
{
    OptimizerConfig c;
    c.beta_min = 1.0;
    c.beta_max = 4.0;
    const auto a = optimize_beta(20, 1, c);
    const auto b = optimize_beta(20, 1, c);

    CHECK(a.beta_opt == b.beta_opt);
    CHECK(a.t_max == b.t_max);
    CHECK(a.m_at_peak == b.m_at_peak);
    CHECK(a.coarse_profile.size() == 31);
    REQUIRE(b.coarse_profile.size() == a.coarse_profile.size());
    for (size_t i = 0; i < a.coarse_profile.size(); ++i)
        CHECK(a.coarse_profile[i].t_max == b.coarse_profile[i].t_max);

    CHECK(a.beta_opt >= 1.0);
    CHECK(a.beta_opt <= 4.0);
    const auto check = analyze(SystemParams(20, a.m_at_peak, 1, a.beta_opt));
    CHECK(std::abs(check.throughput - a.t_max) <= 1e-9);
    CHECK(a.m_over_n_at_peak == doctest::Approx(a.m_at_peak / 20.0));
    for (const auto& pt : a.coarse_profile)
        CHECK(pt.t_max <= a.t_max);
    ProfilePoint incumbent = a.coarse_profile.front();
    for (const auto& pt : a.coarse_profile)
        if (pt.t_max > incumbent.t_max)
            incumbent = pt;
    for (const auto& pt : a.refine_profile) {
        CHECK(pt.t_max <= a.t_max);
        CHECK(std::abs(pt.beta - incumbent.beta) <= 0.1 + 1e-9);
    }

    OptimizerConfig ex = c;
    ex.search = PeakSearch::exhaustive;
    ex.refine_step = 0.05;
    const auto e = optimize_beta(20, 1, ex);
    CHECK(e.t_max >= a.t_max - 1e-3);
}

TEST_CASE("beta optimization rejects bad grids")
{
    OptimizerConfig c;
    c.beta_min = 5.0;
    c.beta_max = 4.0;
    CHECK_THROWS_AS(optimize_beta(20, 1, c), std::invalid_argument);
    c.beta_min = 1.0;
    c.beta_max = 30.0;
    CHECK_THROWS_AS(optimize_beta(20, 1, c), std::invalid_argument);
    c.beta_max = 3.0;
    c.coarse_step = 0.0;
    CHECK_THROWS_AS(optimize_beta(20, 1, c), std::invalid_argument);
    c.coarse_step = 0.1;
    c.beta_min = 0.0;
    CHECK_THROWS_AS(optimize_beta(20, 1, c), std::invalid_argument);
}
