#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "robinhood/exact.hpp"
#include "robinhood/numeric.hpp"
#include "robinhood/parallel.hpp"
#include "robinhood/pbtail.hpp"
#include "robinhood/pruning.hpp"
#include "robinhood/rng.hpp"
#include "robinhood/tree.hpp"

namespace robinhood {

// Coordinatewise-dominated pair: x has independent Ber(1/i) marginals and
// x_cond is distributed as x conditioned on sum_{i=k}^{n-1} x_i >= m, with
// x <= x_cond surely.
struct ConditionedX {
    std::vector<std::uint8_t> x;       // index 0 unused
    std::vector<std::uint8_t> x_cond;  // index 0 unused
};

// Joint draw of a plain H-set and its conditioned counterpart, together with
// the shared uniforms that drive (K, L) and (K', L'). Invariants (checked by
// callers and the acceptance suite): K' <= K, L' <= L, X <= X' coordinatewise,
// and the conditioned yield sum_{i=K'}^{n-1} X'_i >= m.
struct CoupledHSets {
    HSet plain;
    HSet conditioned;
    double u1 = 0;
    double u2 = 0;
};

namespace detail {

// Forward tail table over H-set coordinates: head(i, r) = P(sum_{j=k}^{i} X_j >= r)
// for a fixed window start k, built in O((n-k) m). Flattened into a scratch
// vector so a sampler can rebuild it per draw without allocating.
class HeadTable {
public:
    void build(int k, int n, int m) {
        k_ = k;
        n_ = n;
        rows_ = m + 1;
        table_.assign(static_cast<std::size_t>(n - k + 1) * static_cast<std::size_t>(rows_), 0.0);
        // i = k-1 base row: P(empty >= r) = 1{r <= 0}.
        at(k - 1, 0) = 1.0;
        for (int i = k; i <= n - 1; ++i) {
            const double p = 1.0 / i;
            at(i, 0) = 1.0;
            for (int r = 1; r <= m; ++r) at(i, r) = p * at(i - 1, r - 1) + (1.0 - p) * at(i - 1, r);
        }
    }

    double head(int i, int r) const {
        if (r <= 0) return 1.0;
        if (r > i - k_ + 1) return 0.0;
        return at_c(i, r);
    }

private:
    double& at(int i, int r) {
        return table_[static_cast<std::size_t>(i - (k_ - 1)) * static_cast<std::size_t>(rows_) +
                      static_cast<std::size_t>(r)];
    }
    double at_c(int i, int r) const {
        return table_[static_cast<std::size_t>(i - (k_ - 1)) * static_cast<std::size_t>(rows_) +
                      static_cast<std::size_t>(r)];
    }
    int k_ = 1, n_ = 2, rows_ = 1;
    std::vector<double> table_;
};

}  // namespace detail

// Sequential monotone coupling of X and X | {sum_{i=k}^{n-1} X_i >= m}.
// Coordinates are processed i = n-1 down to k with the residual requirement
// r; the conditional success probability is
//   q_i = p_i * P(sum_{j=k}^{i-1} >= r-1) / P(sum_{j=k}^{i} >= r),
// which always satisfies q_i >= p_i, so drawing both bits from one uniform
// (x = {u < p_i}, x' = {u < q_i}) gives sure coordinatewise domination.
// Coordinates below k are shared between the two vectors. Counts any
// numerical q_i < p_i occurrence into *q_violations (never expected).
inline ConditionedX conditioned_x(int n, int k, int m, Rng& rng, std::uint64_t* q_violations = nullptr) {
    if (n < 2 || k < 1 || k > n) throw std::invalid_argument("bad window");
    if (m < 0) throw std::invalid_argument("threshold must be >= 0");
    if (m > n - k) throw std::invalid_argument("impossible conditioning: m exceeds the window length");

    detail::HeadTable heads;
    heads.build(k, n, m);

    ConditionedX out;
    out.x.assign(static_cast<std::size_t>(n), 0);
    out.x_cond.assign(static_cast<std::size_t>(n), 0);
    int r = m;
    for (int i = n - 1; i >= 1; --i) {
        const double p = 1.0 / i;
        if (i >= k) {
            double q;
            if (r <= 0) {
                q = p;
            } else if (r >= i - k + 1) {
                q = 1.0;  // every remaining coordinate must be set
            } else {
                q = p * heads.head(i - 1, r - 1) / heads.head(i, r);
                if (q < p) {
                    if (q_violations && q < p - 1e-12) ++(*q_violations);
                    q = p;
                }
                if (q > 1.0) q = 1.0;
            }
            const double u = rng.unit();
            const bool xb = u < p;
            const bool xc = u < q;
            out.x[static_cast<std::size_t>(i)] = xb ? 1 : 0;
            out.x_cond[static_cast<std::size_t>(i)] = xc ? 1 : 0;
            if (xc) --r;
        } else {
            const bool xb = rng.unit() < p;
            out.x[static_cast<std::size_t>(i)] = xb ? 1 : 0;
            out.x_cond[static_cast<std::size_t>(i)] = xb ? 1 : 0;
        }
    }
    return out;
}

// Joint sampler for ((K,L), (K',L')) and the dominated X pair at k = K';
// shares one tail table and the normalized weights p_k across draws.
// Construction: K = ceil(n U1), K' = max{k : U1 > sum_{j<k} p_k},
// L = ceil((K-1) U2), L' = ceil((K'-1) U2), with p_k proportional to
// P(sum_{i=k}^{n-1} X_i >= m). The weights are computed in floating point and
// validated once against the rational backend.
class CoupledHSetSampler {
public:
    CoupledHSetSampler(int n, int m, bool validate_weights = true) : n_(n), m_(m) {
        if (n_ < 2) throw std::invalid_argument("requires n >= 2");
        if (m_ < 0) throw std::invalid_argument("threshold must be >= 0");
        if (m_ > n_ - 2) throw std::invalid_argument("degenerate threshold: m must be <= n-2");

        PBTail<double> tails(attachment_probs<double>(n_), m_);
        double z = 0;
        tail_.assign(static_cast<std::size_t>(n_) + 1, 0.0);
        for (int k = 1; k <= n_; ++k) {
            tail_[static_cast<std::size_t>(k)] = tails.tail(k, m_);
            z += tail_[static_cast<std::size_t>(k)];
        }
        p_.assign(static_cast<std::size_t>(n_) + 1, 0.0);
        prefix_.assign(static_cast<std::size_t>(n_) + 1, 0.0);
        double acc = 0;
        for (int k = 1; k <= n_; ++k) {
            p_[static_cast<std::size_t>(k)] = tail_[static_cast<std::size_t>(k)] / z;
            // p_k is nonincreasing in k; a violation would break K' <= K.
            if (k > 1 && p_[static_cast<std::size_t>(k)] > p_[static_cast<std::size_t>(k - 1)] + 1e-15)
                throw std::logic_error("k-weights are not nonincreasing");
            acc += p_[static_cast<std::size_t>(k)];
            prefix_[static_cast<std::size_t>(k)] = acc;
        }

        if (validate_weights) {
            PBTail<Rational> exact(attachment_probs<Rational>(n_), m_);
            Rational zr(0);
            for (int k = 1; k <= n_; ++k) zr += exact.tail(k, m_);
            for (int k = 1; k <= n_; ++k) {
                const Rational pk = exact.tail(k, m_) / zr;
                if (std::abs(to_double(pk) - p_[static_cast<std::size_t>(k)]) > 1e-12)
                    throw std::logic_error("float k-weights deviate from the rational backend");
            }
        }
    }

    int n() const { return n_; }
    int m() const { return m_; }
    const std::vector<double>& k_weights() const { return p_; }
    std::uint64_t q_violations() const { return q_violations_; }
    std::uint64_t k_order_violations() const { return k_order_violations_; }

    struct KlPair {
        int k = 0, l = 0;    // plain (K, L)
        int kp = 0, lp = 0;  // conditioned (K', L'); kp <= k and lp <= l surely
    };

    // Inversion of both (K, L) and (K', L') from two explicit uniforms:
    // K = ceil(n u1), K' = max{k : u1 > sum_{j<k} p_j}, and both L values
    // share u2 through L = ceil((K-1) u2).
    KlPair kl_from_uniforms(double u1, double u2) {
        KlPair r;
        r.k = static_cast<int>(std::floor(n_ * u1)) + 1;
        // prefix is strictly increasing while the weights stay positive, so
        // the max is a binary search.
        int lo = 1, hi = n_;
        while (lo < hi) {
            const int mid = (lo + hi + 1) / 2;
            if (u1 > prefix_[static_cast<std::size_t>(mid - 1)])
                lo = mid;
            else
                hi = mid - 1;
        }
        r.kp = lo;
        if (r.kp > r.k) {
            ++k_order_violations_;
            r.kp = r.k;  // measure-zero float collision; resolve toward the smaller value
        }
        // Rounded prefix sums may fall a few ulps short of 1; never select a
        // window start whose conditioning event is impossible.
        while (r.kp > 1 && !(tail_[static_cast<std::size_t>(r.kp)] > 0.0)) --r.kp;
        r.l = (r.k == 1) ? 0 : static_cast<int>(std::floor((r.k - 1) * u2)) + 1;
        r.lp = (r.kp == 1) ? 0 : static_cast<int>(std::floor((r.kp - 1) * u2)) + 1;
        return r;
    }

    CoupledHSets draw(Rng& rng) {
        const double u1 = rng.unit();
        const double u2 = rng.unit();
        const KlPair kl = kl_from_uniforms(u1, u2);

        // X' is conditioned at window start K' and uses uniforms independent
        // of (u1, u2), so it is conditionally independent of (K', L').
        ConditionedX xs = conditioned_x(n_, kl.kp, m_, rng, &q_violations_);

        return CoupledHSets{HSet(n_, kl.k, kl.l, std::move(xs.x)),
                            HSet(n_, kl.kp, kl.lp, std::move(xs.x_cond)), u1, u2};
    }

private:
    int n_;
    int m_;
    std::vector<double> tail_;
    std::vector<double> p_;
    std::vector<double> prefix_;
    std::uint64_t q_violations_ = 0;
    std::uint64_t k_order_violations_ = 0;
};

// One coupled draw of the tree pair: a common base tree of size n-1 grown by
// the random pruning, pruned once with the plain H-set and once with the
// conditioned one. The conditioned tree's new vertex always has degree >= m.
struct CoupledTreePair {
    DecoratedTree base;
    DecoratedTree plain_tree;
    DecoratedTree cond_tree;
    CoupledHSets hs;
};

class CoupledTreeSampler {
public:
    CoupledTreeSampler(int n, int m, bool validate_weights = true)
        : n_(n), hsets_(n, m, validate_weights) {
        if (n_ < 3) throw std::invalid_argument("requires n >= 3");
    }

    CoupledTreePair draw(Rng& rng) {
        DecoratedTree base = grow_final(n_ - 1, rng);
        CoupledHSets hs = hsets_.draw(rng);
        DecoratedTree plain = prune_deterministic(base, hs.plain);
        DecoratedTree cond = prune_deterministic(base, hs.conditioned);
        return CoupledTreePair{std::move(base), std::move(plain), std::move(cond), std::move(hs)};
    }

    const CoupledHSetSampler& hset_sampler() const { return hsets_; }
    std::uint64_t q_violations() const { return hsets_.q_violations(); }
    std::uint64_t k_order_violations() const { return hsets_.k_order_violations(); }

private:
    int n_;
    CoupledHSetSampler hsets_;
};

// Per-draw verification of the sure statements of the coupling.
struct CouplingChecks {
    bool k_dominated = false;       // K' <= K
    bool l_dominated = false;       // L' <= L
    bool x_dominated = false;       // X <= X' coordinatewise
    bool cond_yield_ok = false;     // conditioned new-vertex degree >= m
    bool containment_ok = false;    // {I_v < J_v} within {L' = s(v)} ∩ {deg(v) >= m-1}
    bool diff_bound_ok = false;     // d_cond(v) - d_plain(v) <= 1{L' = s(v)}
    int upcrossing_vertices = 0;    // #v with I_v < J_v

    bool all() const {
        return k_dominated && l_dominated && x_dominated && cond_yield_ok && containment_ok &&
               diff_bound_ok;
    }
};

// Monte Carlo estimate of the per-vertex upcrossing rate P(I_v < J_v) under
// the coupling, with the analytic envelope n^{-1-beta}. All sure statements
// are asserted on every draw and their violation counts reported.
struct ViolationReport {
    int n = 0;
    int m = 0;
    std::uint64_t trials = 0;
    std::uint64_t seed = 0;
    double max_rate = 0;        // max over v of the empirical upcrossing rate
    double max_rate_se = 0;
    int argmax_vertex = 0;
    double mean_upcrossings = 0;  // E[#v with I_v < J_v] per draw
    double envelope = 0;          // n^{-1-beta}
    std::uint64_t domination_violations = 0;
    std::uint64_t containment_violations = 0;
    std::uint64_t q_violations = 0;

    bool sure_statements_hold() const {
        return domination_violations == 0 && containment_violations == 0 && q_violations == 0;
    }
};

inline CouplingChecks check_coupling(const CoupledTreePair& pair, int m);

inline ViolationReport estimate_violation(int n, int m, std::uint64_t trials, std::uint64_t seed,
                                          unsigned threads = 0);

inline CouplingChecks check_coupling(const CoupledTreePair& pair, int m) {
    const int n = pair.plain_tree.size();
    CouplingChecks c;
    c.k_dominated = pair.hs.conditioned.k() <= pair.hs.plain.k();
    c.l_dominated = pair.hs.conditioned.l() <= pair.hs.plain.l();
    c.x_dominated = true;
    for (int i = 1; i <= n - 1; ++i)
        if (pair.hs.plain.bit(i) && !pair.hs.conditioned.bit(i)) c.x_dominated = false;
    c.cond_yield_ok = pair.hs.conditioned.yield() >= m;

    const auto deg_base = degree_sequence(pair.base.tree());
    const auto deg_plain = degree_sequence(pair.plain_tree.tree());
    const auto deg_cond = degree_sequence(pair.cond_tree.tree());
    c.containment_ok = true;
    c.diff_bound_ok = true;
    for (int v = 1; v <= n - 1; ++v) {
        const bool attach_here = pair.hs.conditioned.l() == pair.base.stamp().of(v);
        if (deg_cond[static_cast<std::size_t>(v)] - deg_plain[static_cast<std::size_t>(v)] >
            (attach_here ? 1 : 0))
            c.diff_bound_ok = false;
        const bool iv = deg_plain[static_cast<std::size_t>(v)] >= m;
        const bool jv = deg_cond[static_cast<std::size_t>(v)] >= m;
        if (!iv && jv) {
            ++c.upcrossing_vertices;
            if (!(attach_here && deg_base[static_cast<std::size_t>(v)] >= m - 1))
                c.containment_ok = false;
        }
    }
    return c;
}

inline ViolationReport estimate_violation(int n, int m, std::uint64_t trials, std::uint64_t seed,
                                          unsigned threads) {
    struct Acc {
        std::vector<std::uint64_t> upcross;
        std::uint64_t domination = 0, containment = 0, qviol = 0, total_up = 0;
        void merge(const Acc& o) {
            if (upcross.size() < o.upcross.size()) upcross.resize(o.upcross.size(), 0);
            for (std::size_t i = 0; i < o.upcross.size(); ++i) upcross[i] += o.upcross[i];
            domination += o.domination;
            containment += o.containment;
            qviol += o.qviol;
            total_up += o.total_up;
        }
    };

    auto acc = run_trials<Acc>(
        trials, threads, 2048, [&](std::uint64_t t0, std::uint64_t t1, Acc& a) {
            a.upcross.assign(static_cast<std::size_t>(n) + 1, 0);
            CoupledTreeSampler sampler(n, m, /*validate_weights=*/false);
            for (std::uint64_t t = t0; t < t1; ++t) {
                Rng rng = Rng::stream(seed, t);
                const CoupledTreePair pair = sampler.draw(rng);
                const auto checks = check_coupling(pair, m);
                if (!checks.k_dominated || !checks.l_dominated || !checks.x_dominated ||
                    !checks.cond_yield_ok)
                    ++a.domination;
                if (!checks.containment_ok || !checks.diff_bound_ok) ++a.containment;
                if (checks.upcrossing_vertices > 0) {
                    a.total_up += static_cast<std::uint64_t>(checks.upcrossing_vertices);
                    const auto deg_plain = degree_sequence(pair.plain_tree.tree());
                    const auto deg_cond = degree_sequence(pair.cond_tree.tree());
                    for (int v = 1; v <= n - 1; ++v)
                        if (deg_plain[static_cast<std::size_t>(v)] < m &&
                            deg_cond[static_cast<std::size_t>(v)] >= m)
                            ++a.upcross[static_cast<std::size_t>(v)];
                }
            }
            a.qviol += sampler.q_violations();
        });

    ViolationReport rep;
    rep.n = n;
    rep.m = m;
    rep.trials = trials;
    rep.seed = seed;
    std::uint64_t best = 0;
    for (int v = 1; v <= n; ++v) {
        if (static_cast<std::size_t>(v) < acc.upcross.size() &&
            acc.upcross[static_cast<std::size_t>(v)] > best) {
            best = acc.upcross[static_cast<std::size_t>(v)];
            rep.argmax_vertex = v;
        }
    }
    rep.max_rate = static_cast<double>(best) / static_cast<double>(trials);
    rep.max_rate_se = binomial_se(rep.max_rate, trials);
    rep.mean_upcrossings = static_cast<double>(acc.total_up) / static_cast<double>(trials);
    rep.domination_violations = acc.domination;
    rep.containment_violations = acc.containment;
    rep.q_violations = acc.qviol;
    const double c_rate = static_cast<double>(m) / std::log(static_cast<double>(n));
    const double beta = (c_rate > 1.0 && c_rate <= 2.0) ? bound_constants(c_rate, c_rate).beta : 0.0;
    rep.envelope = std::pow(static_cast<double>(n), -1.0 - beta);
    return rep;
}

}  // namespace robinhood
