#pragma once

#include <cstdint>
#include <vector>

namespace frameless {

/// Contention parameters: n users, m slots, k-MUD receiver, access scale beta.
/// Every user transmits in every slot independently with probability p = beta / n.
class SystemParams
{
public:
    /// Throws std::invalid_argument unless n >= 1, m >= 0, k >= 1 and 0 < beta <= n.
    SystemParams(int n, int m, int k, double beta);

    int n() const { return n_; }
    int m() const { return m_; }
    int k() const { return k_; }
    double beta() const { return beta_; }
    double p() const { return beta_ / static_cast<double>(n_); }

    SystemParams with_m(int m) const { return SystemParams(n_, m, k_, beta_); }
    SystemParams with_k(int k) const { return SystemParams(n_, m_, k, beta_); }
    SystemParams with_beta(double beta) const { return SystemParams(n_, m_, k_, beta); }

private:
    int n_;
    int m_;
    int k_;
    double beta_;
};

/// Slot-degree law: omega[i] is the probability that exactly i users transmit in a slot.
struct DegreeDistribution
{
    std::vector<double> omega;

    double operator[](int i) const
    {
        return (i < 0 || i >= static_cast<int>(omega.size())) ? 0.0 : omega[i];
    }
    int max_degree() const { return static_cast<int>(omega.size()) - 1; }
};

/// Binomial(n, p) pmf over slot degrees 0..n.
DegreeDistribution degree_distribution(const SystemParams& params);

/// C(a, b), zero outside 0 <= b <= a. Exact for a <= 64.
double binom(int64_t a, int64_t b);

/// log C(a, b); -infinity outside the support.
double log_binom(int64_t a, int64_t b);

/// Binomial(trials, prob) pmf evaluated at successes.
double binomial_pmf(int trials, int successes, double prob);

/// Full Binomial(trials, prob) pmf, entries 0..trials.
std::vector<double> binomial_pmf_table(int trials, double prob);

/// Neumaier-compensated running sum.
class CompensatedSum
{
public:
    void add(double x);
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

} // namespace frameless
