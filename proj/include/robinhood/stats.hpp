#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "robinhood/chain.hpp"
#include "robinhood/exact.hpp"
#include "robinhood/numeric.hpp"
#include "robinhood/parallel.hpp"
#include "robinhood/pruning.hpp"
#include "robinhood/rng.hpp"

namespace robinhood {

// Estimate with its sampling error and full provenance; the reference/pass
// fields are set when the caller supplies a target value and tolerance.
struct StatReport {
    double estimate = 0;
    double std_error = 0;
    std::uint64_t trials = 0;
    std::uint64_t seed = 0;
    std::optional<double> reference;
    std::optional<double> tolerance;
    std::optional<bool> pass;

    StatReport& check_against(double ref, double tol) {
        reference = ref;
        tolerance = tol;
        pass = std::abs(estimate - ref) <= tol;
        return *this;
    }
};

inline int z_count(const RootedTree& t, int m) {
    if (m <= 0) return t.size();
    const auto deg = degree_sequence(t);
    int z = 0;
    for (int v = 1; v <= t.size(); ++v)
        if (deg[static_cast<std::size_t>(v)] >= m) ++z;
    return z;
}

inline int max_degree(const RootedTree& t) {
    const auto deg = degree_sequence(t);
    int d = 0;
    for (int v = 1; v <= t.size(); ++v) d = std::max(d, deg[static_cast<std::size_t>(v)]);
    return d;
}

// Degree summary of one tree: the high-degree count z, the maximum, and the
// per-degree histogram (z > 0 iff max_degree >= m).
struct DegreeStats {
    int n = 0;
    int m = 0;
    int z = 0;
    int max_deg = 0;
    std::vector<std::uint64_t> count_by_degree;
};

inline DegreeStats degree_stats(const RootedTree& t, int m) {
    DegreeStats s;
    s.n = t.size();
    s.m = m;
    const auto deg = degree_sequence(t);
    s.max_deg = 0;
    for (int v = 1; v <= t.size(); ++v) s.max_deg = std::max(s.max_deg, deg[static_cast<std::size_t>(v)]);
    s.count_by_degree.assign(static_cast<std::size_t>(s.max_deg) + 1, 0);
    for (int v = 1; v <= t.size(); ++v) {
        const int d = deg[static_cast<std::size_t>(v)];
        ++s.count_by_degree[static_cast<std::size_t>(d)];
        if (m > 0 && d >= m) ++s.z;
    }
    if (m <= 0) s.z = s.n;
    return s;
}

namespace detail {

struct HistAcc {
    std::vector<std::uint64_t> hist;
    std::uint64_t total = 0;

    void add(std::size_t k, std::size_t cap) {
        if (hist.size() < cap) hist.resize(cap, 0);
        ++hist[std::min(k, cap - 1)];
        ++total;
    }
    void merge(const HistAcc& o) {
        if (hist.size() < o.hist.size()) hist.resize(o.hist.size(), 0);
        for (std::size_t i = 0; i < o.hist.size(); ++i) hist[i] += o.hist[i];
        total += o.total;
    }
};

}  // namespace detail

enum class TreeSampler {
    kCoalescent,  // O(n) per trial through the merge representation
    kGrowth,      // the pruning process itself; O(n^2) per trial
};

// Histogram of Z_m over independent uniform decorated trees of size n.
inline std::vector<std::uint64_t> sample_z_histogram(int n, int m, std::uint64_t trials,
                                                     std::uint64_t seed, unsigned threads = 0,
                                                     TreeSampler sampler = TreeSampler::kCoalescent,
                                                     std::size_t cap = 1024) {
    auto acc = run_trials<detail::HistAcc>(
        trials, threads, 8192, [&](std::uint64_t t0, std::uint64_t t1, detail::HistAcc& a) {
            if (sampler == TreeSampler::kCoalescent) {
                KingmanDegreeSampler ks(n);
                for (std::uint64_t t = t0; t < t1; ++t) {
                    Rng rng = Rng::stream(seed, t);
                    a.add(static_cast<std::size_t>(ks.run(rng, m).z), cap);
                }
            } else {
                for (std::uint64_t t = t0; t < t1; ++t) {
                    Rng rng = Rng::stream(seed, t);
                    a.add(static_cast<std::size_t>(z_count(grow_final(n, rng).tree(), m)), cap);
                }
            }
        });
    acc.hist.resize(cap, 0);
    return acc.hist;
}

// Histogram of the maximum degree over independent trials.
inline std::vector<std::uint64_t> sample_max_degree_histogram(int n, std::uint64_t trials,
                                                              std::uint64_t seed,
                                                              unsigned threads = 0,
                                                              std::size_t cap = 256) {
    auto acc = run_trials<detail::HistAcc>(
        trials, threads, 8192, [&](std::uint64_t t0, std::uint64_t t1, detail::HistAcc& a) {
            KingmanDegreeSampler ks(n);
            for (std::uint64_t t = t0; t < t1; ++t) {
                Rng rng = Rng::stream(seed, t);
                a.add(static_cast<std::size_t>(ks.run(rng, 0).max_degree), cap);
            }
        });
    acc.hist.resize(cap, 0);
    return acc.hist;
}

// Plug-in total-variation distance between an empirical histogram and
// Poisson(lambda), truncated at k ~ lambda + 12 sqrt(lambda); the Poisson
// mass beyond the truncation is reported separately as a bias bound, and the
// standard error comes from a multinomial bootstrap.
struct DtvEstimate {
    double dtv = 0;
    double boot_se = 0;
    double tail_mass = 0;
    int k_max = 0;
};

inline DtvEstimate empirical_dtv(const std::vector<std::uint64_t>& hist, double lambda,
                                 Rng& boot_rng, int boot_replicates = 100) {
    std::uint64_t total = 0;
    std::size_t hist_max = 0;
    for (std::size_t k = 0; k < hist.size(); ++k) {
        total += hist[k];
        if (hist[k] > 0) hist_max = k;
    }
    if (total == 0) throw std::invalid_argument("empty sample set");
    if (lambda < 0) throw std::invalid_argument("lambda must be >= 0");

    const int k_trunc = static_cast<int>(std::ceil(lambda + 12.0 * std::sqrt(lambda))) + 1;
    const int k_max = std::max<int>(k_trunc, static_cast<int>(hist_max));
    const std::vector<double> pois = poisson_pmf_table(lambda, k_max);

    auto dtv_of = [&](const std::vector<std::uint64_t>& h) {
        double s = 0;
        const double n = static_cast<double>(total);
        for (int k = 0; k <= k_max; ++k) {
            const double emp = (static_cast<std::size_t>(k) < h.size())
                                   ? static_cast<double>(h[static_cast<std::size_t>(k)]) / n
                                   : 0.0;
            s += std::abs(emp - pois[static_cast<std::size_t>(k)]);
        }
        return 0.5 * s;
    };

    DtvEstimate e;
    e.k_max = k_max;
    e.dtv = dtv_of(hist);
    double covered = 0;
    for (double p : pois) covered += p;
    e.tail_mass = 0.5 * std::max(0.0, 1.0 - covered);
    e.boot_se = bootstrap_se(hist, boot_replicates, boot_rng, dtv_of);
    return e;
}

// One row of the d_TV sweep.
struct DtvPoint {
    int n = 0;
    int m = 0;
    double lambda = 0;
    double dtv = 0;
    double boot_se = 0;
    std::uint64_t trials = 0;
};

// d_TV(Z_m, Poi(lambda_exact)) across sizes at threshold rate m = ceil(c ln n).
inline std::vector<DtvPoint> dtv_sweep(const std::vector<int>& n_list, double c,
                                       std::uint64_t trials, std::uint64_t seed,
                                       unsigned threads = 0,
                                       TreeSampler sampler = TreeSampler::kCoalescent,
                                       int boot_replicates = 100) {
    std::vector<DtvPoint> out;
    std::uint64_t point_index = 0;
    for (int n : n_list) {
        const int m = static_cast<int>(std::ceil(c * std::log(static_cast<double>(n))));
        const auto lam = lambda_exact<double>(n, m);
        const std::uint64_t point_seed = seed + 0x517cc1b727220a95ULL * point_index++;
        const auto hist = sample_z_histogram(n, m, trials, point_seed, threads, sampler);
        Rng boot = Rng::stream(point_seed, trials + 1);
        const auto est = empirical_dtv(hist, lam.lambda, boot, boot_replicates);
        out.push_back({n, m, lam.lambda, est.dtv, est.boot_se, trials});
    }
    return out;
}

// Pairwise degree-tail correlation: empirical excess
// P(d(v) >= m, d(w) >= m) - P(d >= m)^2 for the fixed exchangeable pair
// (1, 2), against the analytic envelope 2^{-2m} n^{-alpha_sup}.
struct CorrelationReport {
    int n = 0;
    int m = 0;
    StatReport excess;      // reference = envelope; pass: estimate <= envelope + 3 se
    double envelope = 0;
    double exact_tail = 0;  // single-vertex reference from the exact DP
    StatReport tail_v;
    StatReport tail_w;

    bool pass() const {
        return excess.pass.value_or(false) && tail_v.pass.value_or(false) &&
               tail_w.pass.value_or(false);
    }
};

inline CorrelationReport correlation_check(int n, int m, std::uint64_t trials, std::uint64_t seed,
                                           unsigned threads = 0) {
    struct Acc {
        std::uint64_t joint = 0, cv = 0, cw = 0, total = 0;
        void merge(const Acc& o) {
            joint += o.joint;
            cv += o.cv;
            cw += o.cw;
            total += o.total;
        }
    };
    auto acc = run_trials<Acc>(trials, threads, 8192,
                               [&](std::uint64_t t0, std::uint64_t t1, Acc& a) {
                                   KingmanDegreeSampler ks(n);
                                   for (std::uint64_t t = t0; t < t1; ++t) {
                                       Rng rng = Rng::stream(seed, t);
                                       ks.run(rng, 0);
                                       const bool v = ks.degree(1) >= m;
                                       const bool w = ks.degree(2) >= m;
                                       a.joint += (v && w) ? 1 : 0;
                                       a.cv += v ? 1 : 0;
                                       a.cw += w ? 1 : 0;
                                       ++a.total;
                                   }
                               });

    CorrelationReport rep;
    rep.n = n;
    rep.m = m;
    rep.exact_tail = degree_tail_tn<double>(n, m);
    if (m >= 1) {
        const double c_rate =
            std::min(2.0, static_cast<double>(m) / std::log(static_cast<double>(n)));
        const double alpha_sup = bound_constants(c_rate, std::min(2.0, std::max(1.5, c_rate))).alpha_sup;
        rep.envelope = std::ldexp(1.0, -2 * m) * std::pow(static_cast<double>(n), -alpha_sup);
    } else {
        rep.envelope = 1.0;  // vacuous threshold: both tails are 1 and the excess is 0
    }

    const double pj = static_cast<double>(acc.joint) / static_cast<double>(acc.total);
    const double se_j = binomial_se(pj, acc.total);
    rep.excess.estimate = pj - rep.exact_tail * rep.exact_tail;
    rep.excess.std_error = se_j;
    rep.excess.trials = acc.total;
    rep.excess.seed = seed;
    rep.excess.reference = rep.envelope;
    rep.excess.tolerance = rep.envelope + 3 * se_j;
    rep.excess.pass = rep.excess.estimate <= rep.envelope + 3 * se_j;

    auto tail_report = [&](std::uint64_t count) {
        StatReport r;
        r.estimate = static_cast<double>(count) / static_cast<double>(acc.total);
        r.std_error = binomial_se(r.estimate, acc.total);
        r.trials = acc.total;
        r.seed = seed;
        r.check_against(rep.exact_tail, 3 * r.std_error);
        return r;
    };
    rep.tail_v = tail_report(acc.cv);
    rep.tail_w = tail_report(acc.cw);
    return rep;
}

inline int ilog2(int n) {
    int k = 0;
    while ((1 << (k + 1)) <= n) ++k;
    return k;
}

// Lower tail of the maximum degree: P(max degree < floor(log2 n) - i),
// referenced against exp(-lambda_exact) and the double-exponential form
// exp(-2^{i + eps_n}).
struct MaxDegreeReport {
    int n = 0;
    int i = 0;
    int m_star = 0;
    double lambda = 0;
    double envelope_ratio = 0;  // lambda / 2^{i+eps_n}; in (0, 1]
    double ref_exact = 0;       // exp(-lambda)
    double ref_gumbel = 0;      // exp(-2^{i+eps_n})
    bool refs_consistent = false;
    StatReport prob;
};

inline MaxDegreeReport report_max_degree_tail(const std::vector<std::uint64_t>& max_deg_hist,
                                              int n, int i, std::uint64_t seed) {
    MaxDegreeReport rep;
    rep.n = n;
    rep.i = i;
    rep.m_star = ilog2(n) - i;
    const auto lam = lambda_exact<double>(n, std::max(rep.m_star, 0));
    rep.lambda = lam.lambda;
    const double eps_n = std::log2(static_cast<double>(n)) - ilog2(n);
    const double gumbel_rate = std::ldexp(std::exp2(eps_n), i);  // 2^{i+eps_n}
    rep.ref_exact = std::exp(-rep.lambda);
    rep.ref_gumbel = std::exp(-gumbel_rate);
    rep.envelope_ratio = rep.m_star >= 0 ? lam.ratio : 0.0;
    rep.refs_consistent = rep.lambda <= gumbel_rate * (1.0 + 1e-12);

    std::uint64_t total = 0, below = 0;
    for (std::size_t d = 0; d < max_deg_hist.size(); ++d) {
        total += max_deg_hist[d];
        if (static_cast<int>(d) < rep.m_star) below += max_deg_hist[d];
    }
    rep.prob.estimate = total ? static_cast<double>(below) / static_cast<double>(total) : 0.0;
    rep.prob.std_error = binomial_se(rep.prob.estimate, total);
    rep.prob.trials = total;
    rep.prob.seed = seed;
    rep.prob.check_against(rep.ref_exact, 3 * rep.prob.std_error);
    return rep;
}

inline MaxDegreeReport max_degree_tail(int n, int i, std::uint64_t trials, std::uint64_t seed,
                                       unsigned threads = 0) {
    const auto hist = sample_max_degree_histogram(n, trials, seed, threads);
    return report_max_degree_tail(hist, n, i, seed);
}

// Degree profile of the newly added vertex: mean against 1 - 1/n, leaf
// probability against 1/2, and the full law against the exact
// min{Geo(1/2), |S_n|} DP. The degree of the new vertex equals the number of
// set H-set bits in [K, n-1], so for large n only the H-set is sampled; for
// small n the tree pair is built and the bookkeeping identity is re-checked
// against a from-scratch degree count on every draw.
struct NewVertexReport {
    int n = 0;
    StatReport mean;
    StatReport leaf;
    ChiSquareResult law;
    std::vector<std::uint64_t> degree_hist;
};

inline NewVertexReport new_vertex_profile(int n, std::uint64_t trials, std::uint64_t seed,
                                          unsigned threads = 0, bool force_tree_path = false) {
    if (n < 2) throw std::invalid_argument("requires n >= 2");
    constexpr std::size_t kCap = 64;
    const bool tree_path = force_tree_path || n <= 512;

    struct Acc {
        detail::HistAcc hist;
        double sum = 0, sum_sq = 0;
        std::uint64_t bookkeeping_mismatches = 0;
        void merge(const Acc& o) {
            hist.merge(o.hist);
            sum += o.sum;
            sum_sq += o.sum_sq;
            bookkeeping_mismatches += o.bookkeeping_mismatches;
        }
    };

    auto acc = run_trials<Acc>(trials, threads, tree_path ? 2048 : 65536,
                               [&](std::uint64_t t0, std::uint64_t t1, Acc& a) {
                                   for (std::uint64_t t = t0; t < t1; ++t) {
                                       Rng rng = Rng::stream(seed, t);
                                       int d = 0;
                                       if (tree_path) {
                                           const DecoratedTree base = grow_final(n - 1, rng);
                                           auto [next, h] = robin_hood_step(base, rng);
                                           d = h.yield();
                                           if (degree(next.tree(), n) != d) ++a.bookkeeping_mismatches;
                                       } else {
                                           const int k = rng.uniform_int(1, n);
                                           if (k == 1) ++d;
                                           detail::skip_set_bits(std::max(1, k - 1), n - 1, rng,
                                                                 [&](int) { ++d; });
                                       }
                                       a.hist.add(static_cast<std::size_t>(d), kCap);
                                       a.sum += d;
                                       a.sum_sq += static_cast<double>(d) * d;
                                   }
                               });
    if (acc.bookkeeping_mismatches > 0)
        throw std::logic_error("degree bookkeeping mismatch in new-vertex sampling");
    acc.hist.hist.resize(kCap, 0);

    NewVertexReport rep;
    rep.n = n;
    rep.degree_hist = acc.hist.hist;
    const double t = static_cast<double>(trials);
    const double mean = acc.sum / t;
    const double var = std::max(0.0, acc.sum_sq / t - mean * mean) * t / std::max(1.0, t - 1);
    rep.mean.estimate = mean;
    rep.mean.std_error = std::sqrt(var / t);
    rep.mean.trials = trials;
    rep.mean.seed = seed;
    rep.mean.check_against(1.0 - 1.0 / n, 3 * rep.mean.std_error);

    rep.leaf.estimate = static_cast<double>(rep.degree_hist[0]) / t;
    rep.leaf.std_error = binomial_se(rep.leaf.estimate, trials);
    rep.leaf.trials = trials;
    rep.leaf.seed = seed;
    rep.leaf.check_against(0.5, std::max(0.01, 3 * rep.leaf.std_error));

    std::vector<double> law(kCap);
    {
        const auto pmf = min_geo_selection_pmf<double>(n, static_cast<int>(kCap) - 1);
        for (std::size_t d = 0; d < kCap; ++d) law[d] = pmf[d];
    }
    rep.law = chi_square_gof(rep.degree_hist, law);
    return rep;
}

// Moment diagnostics of Z_m: standardized skewness and excess kurtosis with
// bootstrap errors. Skewness and kurtosis are invariant under the
// (Z - lambda)/sqrt(lambda) standardization, and lambda is always taken from
// the exact DP. Degenerate thresholds (lambda = 0) produce a defined report.
struct NormalityReport {
    int n = 0;
    int m = 0;
    double lambda = 0;
    bool degenerate = false;
    StatReport skewness;
    StatReport excess_kurtosis;
    double poisson_skew_reference = 0;  // lambda^{-1/2}, the Poisson value
};

inline double histogram_skewness(const std::vector<std::uint64_t>& hist) {
    double n = 0, s1 = 0;
    for (std::size_t k = 0; k < hist.size(); ++k) {
        n += static_cast<double>(hist[k]);
        s1 += static_cast<double>(hist[k]) * static_cast<double>(k);
    }
    if (n == 0) return 0;
    const double mean = s1 / n;
    double m2 = 0, m3 = 0;
    for (std::size_t k = 0; k < hist.size(); ++k) {
        const double d = static_cast<double>(k) - mean;
        m2 += static_cast<double>(hist[k]) * d * d;
        m3 += static_cast<double>(hist[k]) * d * d * d;
    }
    m2 /= n;
    m3 /= n;
    return m2 > 0 ? m3 / std::pow(m2, 1.5) : 0.0;
}

inline double histogram_excess_kurtosis(const std::vector<std::uint64_t>& hist) {
    double n = 0, s1 = 0;
    for (std::size_t k = 0; k < hist.size(); ++k) {
        n += static_cast<double>(hist[k]);
        s1 += static_cast<double>(hist[k]) * static_cast<double>(k);
    }
    if (n == 0) return 0;
    const double mean = s1 / n;
    double m2 = 0, m4 = 0;
    for (std::size_t k = 0; k < hist.size(); ++k) {
        const double d = static_cast<double>(k) - mean;
        m2 += static_cast<double>(hist[k]) * d * d;
        m4 += static_cast<double>(hist[k]) * d * d * d * d;
    }
    m2 /= n;
    m4 /= n;
    return m2 > 0 ? m4 / (m2 * m2) - 3.0 : 0.0;
}

inline NormalityReport normality_diagnostics(int n, int m, std::uint64_t trials,
                                             std::uint64_t seed, unsigned threads = 0,
                                             int boot_replicates = 100) {
    NormalityReport rep;
    rep.n = n;
    rep.m = m;
    rep.lambda = lambda_exact<double>(n, std::max(m, 0)).lambda;
    rep.poisson_skew_reference = rep.lambda > 0 ? 1.0 / std::sqrt(rep.lambda) : 0.0;

    const auto hist = sample_z_histogram(n, m, trials, seed, threads);
    rep.skewness.estimate = histogram_skewness(hist);
    rep.excess_kurtosis.estimate = histogram_excess_kurtosis(hist);
    rep.skewness.trials = rep.excess_kurtosis.trials = trials;
    rep.skewness.seed = rep.excess_kurtosis.seed = seed;

    double var_check = 0;
    for (std::size_t k = 0; k < hist.size(); ++k) var_check += static_cast<double>(hist[k]) * k;
    rep.degenerate = (rep.lambda == 0.0) || (var_check == 0.0);
    if (!rep.degenerate) {
        Rng boot1 = Rng::stream(seed, trials + 1);
        rep.skewness.std_error = bootstrap_se(hist, boot_replicates, boot1,
                                              [](const std::vector<std::uint64_t>& h) {
                                                  return histogram_skewness(h);
                                              });
        Rng boot2 = Rng::stream(seed, trials + 2);
        rep.excess_kurtosis.std_error = bootstrap_se(hist, boot_replicates, boot2,
                                                     [](const std::vector<std::uint64_t>& h) {
                                                         return histogram_excess_kurtosis(h);
                                                     });
    }
    return rep;
}

}  // namespace robinhood
