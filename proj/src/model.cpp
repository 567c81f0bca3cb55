#include "frameless/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace frameless {

SystemParams::SystemParams(int n, int m, int k, double beta)
  : n_(n), m_(m), k_(k), beta_(beta)
{
    if (n < 1)
        throw std::invalid_argument("n must be >= 1, got " + std::to_string(n));
    if (m < 0)
        throw std::invalid_argument("m must be >= 0, got " + std::to_string(m));
    if (k < 1)
        throw std::invalid_argument("k must be >= 1, got " + std::to_string(k));
    if (!(beta > 0.0) || beta > static_cast<double>(n))
        throw std::invalid_argument("beta must lie in (0, n], got " + std::to_string(beta));
}

namespace {

// Exact C(a, b) for a <= 64; the largest value, C(64, 32), fits in 64 bits and
// every intermediate product fits in 128.
uint64_t binom_exact(int64_t a, int64_t b)
{
    if (b > a - b)
        b = a - b;
    unsigned __int128 r = 1;
    for (int64_t i = 1; i <= b; ++i)
        r = r * static_cast<unsigned __int128>(a - b + i) / static_cast<unsigned __int128>(i);
    return static_cast<uint64_t>(r);
}

long double log_binom_ld(int64_t a, int64_t b)
{
    if (a <= 64)
        return std::log(static_cast<long double>(binom_exact(a, b)));
    return std::lgamma(static_cast<long double>(a) + 1.0L)
         - std::lgamma(static_cast<long double>(b) + 1.0L)
         - std::lgamma(static_cast<long double>(a - b) + 1.0L);
}

} // namespace

double binom(int64_t a, int64_t b)
{
    if (a < 0 || b < 0 || b > a)
        return 0.0;
    if (a <= 64)
        return static_cast<double>(binom_exact(a, b));
    return static_cast<double>(std::exp(log_binom_ld(a, b)));
}

double log_binom(int64_t a, int64_t b)
{
    if (a < 0 || b < 0 || b > a)
        return -std::numeric_limits<double>::infinity();
    return static_cast<double>(log_binom_ld(a, b));
}

double binomial_pmf(int trials, int successes, double prob)
{
    if (successes < 0 || successes > trials)
        return 0.0;
    if (prob <= 0.0)
        return successes == 0 ? 1.0 : 0.0;
    if (prob >= 1.0)
        return successes == trials ? 1.0 : 0.0;
    const long double lp = std::log(static_cast<long double>(prob));
    const long double lq = std::log1p(-static_cast<long double>(prob));
    const long double l = log_binom_ld(trials, successes)
                        + successes * lp + (trials - successes) * lq;
    return static_cast<double>(std::exp(l));
}

std::vector<double> binomial_pmf_table(int trials, double prob)
{
    std::vector<double> pmf(static_cast<size_t>(trials) + 1, 0.0);
    if (prob <= 0.0) {
        pmf.front() = 1.0;
        return pmf;
    }
    if (prob >= 1.0) {
        pmf.back() = 1.0;
        return pmf;
    }
    // Anchor at the mode in log space, then walk outwards with the ratio
    // recurrence so no term underflows before its neighbours do.
    const long double p = prob;
    const long double odds = p / (1.0L - p);
    const int mode = std::min(trials, static_cast<int>(std::floor((trials + 1) * p)));
    const long double at_mode = std::exp(log_binom_ld(trials, mode) + mode * std::log(p)
                                         + (trials - mode) * std::log1p(-p));
    long double v = at_mode;
    pmf[mode] = static_cast<double>(v);
    for (int j = mode; j < trials; ++j) {
        v *= odds * static_cast<long double>(trials - j) / static_cast<long double>(j + 1);
        pmf[j + 1] = static_cast<double>(v);
    }
    v = at_mode;
    for (int j = mode; j > 0; --j) {
        v *= static_cast<long double>(j) / (odds * static_cast<long double>(trials - j + 1));
        pmf[j - 1] = static_cast<double>(v);
    }
    return pmf;
}

DegreeDistribution degree_distribution(const SystemParams& params)
{
    DegreeDistribution d;
    d.omega = binomial_pmf_table(params.n(), params.p());
    return d;
}

void CompensatedSum::add(double x)
{
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
        comp_ += (sum_ - t) + x;
    else
        comp_ += (x - t) + sum_;
    sum_ = t;
}

} // namespace frameless
