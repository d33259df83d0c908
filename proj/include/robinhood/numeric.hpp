#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "robinhood/rng.hpp"

namespace robinhood {

namespace detail {

inline double gamma_p_series(double a, double x) {
    double sum = 1.0 / a;
    double term = sum;
    double ap = a;
    for (int i = 0; i < 2000; ++i) {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if (std::abs(term) < std::abs(sum) * 1e-16) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

inline double gamma_q_cf(double a, double x) {
    const double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= 2000; ++i) {
        const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < 1e-16) break;
    }
    return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

}  // namespace detail

// Upper regularized incomplete gamma Q(a, x) = Gamma(a, x) / Gamma(a).
inline double regularized_gamma_q(double a, double x) {
    if (!(a > 0.0) || x < 0.0) throw std::domain_error("regularized_gamma_q requires a > 0, x >= 0");
    if (x == 0.0) return 1.0;
    if (x < a + 1.0) return 1.0 - detail::gamma_p_series(a, x);
    return detail::gamma_q_cf(a, x);
}

// Survival function of the chi-square distribution with df degrees of freedom.
inline double chi_square_pvalue(double stat, double df) {
    if (stat <= 0.0) return 1.0;
    return regularized_gamma_q(df / 2.0, stat / 2.0);
}

inline double poisson_pmf(int k, double lambda) {
    if (k < 0) return 0.0;
    if (lambda == 0.0) return k == 0 ? 1.0 : 0.0;
    return std::exp(-lambda + k * std::log(lambda) - std::lgamma(static_cast<double>(k) + 1.0));
}

// pmf values 0..kmax.
inline std::vector<double> poisson_pmf_table(double lambda, int kmax) {
    std::vector<double> p(static_cast<std::size_t>(kmax) + 1);
    for (int k = 0; k <= kmax; ++k) p[static_cast<std::size_t>(k)] = poisson_pmf(k, lambda);
    return p;
}

// Poisson sample by inversion; suitable for the moderate means used here.
inline int poisson_sample(double lambda, Rng& rng) {
    const double u = rng.unit();
    double p = std::exp(-lambda);
    double cdf = p;
    int k = 0;
    const int cap = static_cast<int>(lambda + 20.0 * std::sqrt(lambda + 1.0) + 30.0);
    while (u > cdf && k < cap) {
        ++k;
        p *= lambda / k;
        cdf += p;
    }
    return k;
}

struct ChiSquareResult {
    double stat = 0;
    int df = 0;
    double p_value = 1;
    int bins = 0;
};

// Goodness-of-fit chi-square of observed counts against reference
// probabilities (same length; probs should cover all observations, any
// remaining reference mass is appended as an implicit final cell). Adjacent
// cells are pooled until each expected count reaches min_expected.
inline ChiSquareResult chi_square_gof(const std::vector<std::uint64_t>& observed,
                                      const std::vector<double>& probs,
                                      double min_expected = 5.0) {
    if (observed.size() != probs.size()) throw std::invalid_argument("length mismatch");
    std::uint64_t total = 0;
    double mass = 0;
    for (auto c : observed) total += c;
    for (auto p : probs) mass += p;
    if (total == 0) throw std::invalid_argument("no observations");

    std::vector<double> exp_counts;
    std::vector<double> obs_counts;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        exp_counts.push_back(probs[i] * static_cast<double>(total));
        obs_counts.push_back(static_cast<double>(observed[i]));
    }
    if (mass < 1.0 - 1e-12) {
        exp_counts.push_back((1.0 - mass) * static_cast<double>(total));
        obs_counts.push_back(0.0);
    }

    // Pool adjacent cells until each group expectation clears the threshold;
    // a trailing underfull group is merged into its predecessor.
    std::vector<double> ge, go;
    double ce = 0, co = 0;
    for (std::size_t i = 0; i < exp_counts.size(); ++i) {
        ce += exp_counts[i];
        co += obs_counts[i];
        if (ce >= min_expected) {
            ge.push_back(ce);
            go.push_back(co);
            ce = co = 0;
        }
    }
    if (ce > 0 || co > 0) {
        if (!ge.empty()) {
            ge.back() += ce;
            go.back() += co;
        } else {
            ge.push_back(ce);
            go.push_back(co);
        }
    }

    ChiSquareResult r;
    r.bins = static_cast<int>(ge.size());
    for (std::size_t g = 0; g < ge.size(); ++g) {
        if (ge[g] <= 0) continue;
        const double d = go[g] - ge[g];
        r.stat += d * d / ge[g];
    }
    r.df = std::max(1, r.bins - 1);
    r.p_value = chi_square_pvalue(r.stat, static_cast<double>(r.df));
    return r;
}

// Two-sample chi-square: tests whether two histograms come from the same
// distribution. Cells are pooled until each combined expected count clears
// the threshold.
inline ChiSquareResult chi_square_two_sample(const std::vector<std::uint64_t>& h1,
                                             const std::vector<std::uint64_t>& h2,
                                             double min_expected = 5.0) {
    const std::size_t len = std::max(h1.size(), h2.size());
    double n1 = 0, n2 = 0;
    for (auto c : h1) n1 += static_cast<double>(c);
    for (auto c : h2) n2 += static_cast<double>(c);
    if (n1 == 0 || n2 == 0) throw std::invalid_argument("empty histogram");
    const double k1 = std::sqrt(n2 / n1);
    const double k2 = std::sqrt(n1 / n2);

    ChiSquareResult r;
    double c1 = 0, c2 = 0;
    int groups = 0;
    auto flush = [&](bool force) {
        const double combined = c1 + c2;
        if (combined >= min_expected || (force && combined > 0)) {
            const double d = k1 * c1 - k2 * c2;
            r.stat += d * d / combined;
            ++groups;
            c1 = c2 = 0;
        }
    };
    for (std::size_t i = 0; i < len; ++i) {
        c1 += (i < h1.size()) ? static_cast<double>(h1[i]) : 0.0;
        c2 += (i < h2.size()) ? static_cast<double>(h2[i]) : 0.0;
        flush(false);
    }
    flush(true);

    r.bins = groups;
    r.df = std::max(1, groups - 1);
    r.p_value = chi_square_pvalue(r.stat, static_cast<double>(r.df));
    return r;
}

// Standard error of the mean of a Bernoulli estimate.
inline double binomial_se(double p_hat, std::uint64_t n) {
    if (n == 0) return 0;
    return std::sqrt(std::max(0.0, p_hat * (1.0 - p_hat)) / static_cast<double>(n));
}

// Multinomial bootstrap over a histogram: resamples the same number of draws
// from the empirical distribution B times and returns the standard deviation
// of the statistic across replicates. Deterministic given the Rng stream.
template <class Stat>
double bootstrap_se(const std::vector<std::uint64_t>& hist, int B, Rng& rng, Stat&& stat) {
    std::uint64_t total = 0;
    for (auto c : hist) total += c;
    if (total == 0 || B < 2) return 0.0;

    std::vector<std::uint64_t> cum(hist.size());
    std::uint64_t acc = 0;
    for (std::size_t i = 0; i < hist.size(); ++i) {
        acc += hist[i];
        cum[i] = acc;
    }

    std::vector<std::uint64_t> repl(hist.size());
    std::vector<double> values;
    values.reserve(static_cast<std::size_t>(B));
    for (int b = 0; b < B; ++b) {
        std::fill(repl.begin(), repl.end(), 0);
        for (std::uint64_t t = 0; t < total; ++t) {
            const std::uint64_t u = rng.below(total);
            const auto it = std::upper_bound(cum.begin(), cum.end(), u);
            ++repl[static_cast<std::size_t>(it - cum.begin())];
        }
        values.push_back(stat(repl));
    }
    double mean = 0;
    for (double v : values) mean += v;
    mean /= values.size();
    double var = 0;
    for (double v : values) var += (v - mean) * (v - mean);
    var /= (values.size() - 1);
    return std::sqrt(var);
}

}  // namespace robinhood
