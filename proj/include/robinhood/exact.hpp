#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "robinhood/pbtail.hpp"
#include "robinhood/pruning.hpp"
#include "robinhood/rational.hpp"
#include "robinhood/tree.hpp"

namespace robinhood {

inline mpz_class factorial_z(int n) {
    mpz_class f;
    mpz_fac_ui(f.get_mpz_t(), static_cast<unsigned long>(n));
    return f;
}

// Exact 1/(n!(n-1)!), the uniform mass on decorated trees of size n.
inline Rational uniform_decorated_mass(int n) {
    Rational r(mpz_class(1), factorial_z(n) * factorial_z(n - 1));
    r.canonicalize();
    return r;
}

// Exact one-step transition law of the random pruning out of dt: probabilities
// of each decorated tree of size n = |dt|+1, keyed by canonical text form.
// Cases run over (k, l) and only the x-coordinates the pruning reads
// (the window [k, n-1], plus the forced x_1 = 1 when k = 1); unread
// coordinates are marginalized algebraically, which shrinks the case count
// from 2^{n-1} to 2^{n-k} per (k, l). Every row sums to exactly 1.
inline std::map<std::string, Rational> transition_distribution(const DecoratedTree& dt) {
    const int n = dt.size() + 1;
    std::map<std::string, Rational> row;
    std::vector<std::uint8_t> x(static_cast<std::size_t>(n), 0);
    for (int k = 1; k <= n; ++k) {
        const int first_free = std::max(k, 2);
        const int free_bits = (n - 1 >= first_free) ? (n - first_free) : 0;
        const Rational kl_weight =
            (k == 1) ? rational(1, n) : rational(1, n) * rational(1, k - 1);
        const int l_lo = (k == 1) ? 0 : 1;
        const int l_hi = (k == 1) ? 0 : k - 1;
        for (int l = l_lo; l <= l_hi; ++l) {
            for (std::uint32_t mask = 0; mask < (1u << free_bits); ++mask) {
                std::fill(x.begin(), x.end(), 0);
                if (k == 1) x[1] = 1;
                Rational w = kl_weight;
                for (int b = 0; b < free_bits; ++b) {
                    const int i = first_free + b;
                    if (mask & (1u << b)) {
                        x[static_cast<std::size_t>(i)] = 1;
                        w *= rational(1, i);
                    } else {
                        w *= rational(i - 1, i);
                    }
                }
                const DecoratedTree out = prune_deterministic(dt, HSet(n, k, l, x));
                row[format_decorated(out)] += w;
            }
        }
    }
    return row;
}

// Exact certificate that one pruning step preserves the uniform law:
// averaging the transition rows over all decorated trees of size n-1 must
// reproduce the uniform vector on size n, with exact rational equality.
struct UniformCertificate {
    int n = 0;
    std::uint64_t cardinality = 0;
    Rational uniform_mass;
    Rational max_abs_deviation;
    bool pass = false;
};

inline UniformCertificate verify_uniform_preservation(int n, int bound = 5) {
    if (n < 2) throw std::invalid_argument("requires n >= 2");
    if (n > bound) throw std::invalid_argument("verification bound exceeded (raise the bound explicitly)");

    std::map<std::string, Rational> total;
    std::uint64_t sources = 0;
    enumerate_decorated(n - 1, [&](const DecoratedTree& dt) {
        ++sources;
        for (auto& [key, mass] : transition_distribution(dt)) total[key] += mass;
    }, n);

    const Rational uniform = uniform_decorated_mass(n);
    const Rational src_count(static_cast<unsigned long>(sources));

    UniformCertificate cert;
    cert.n = n;
    cert.uniform_mass = uniform;
    cert.max_abs_deviation = rational(0);
    std::uint64_t targets = 0;
    enumerate_decorated(n, [&](const DecoratedTree& out) {
        ++targets;
        const auto it = total.find(format_decorated(out));
        Rational mass = (it == total.end()) ? rational(0) : it->second / src_count;
        Rational dev = mass - uniform;
        if (dev < 0) dev = -dev;
        if (dev > cert.max_abs_deviation) cert.max_abs_deviation = dev;
    }, n);
    cert.cardinality = targets;
    cert.pass = (cert.max_abs_deviation == 0) && (total.size() == targets) &&
                (targets == decorated_cardinality(n));
    return cert;
}

// Exhaustive check of the three defining properties of the uniform law on
// decorated trees: (i) the stamp history is a uniform permutation, (ii)
// conditionally on the stamps, parents are independent, (iii) the joint
// parent/stamp law P(p(v)=w, s(v)=j, s(w)=i) equals 1{j>i}/(n(n-1)(j-1)).
struct CharacterizationReport {
    int n = 0;
    bool sigma_uniform = false;
    bool parents_conditionally_independent = false;
    bool joint_parent_stamp_law = false;
    bool pass() const { return sigma_uniform && parents_conditionally_independent && joint_parent_stamp_law; }
};

inline CharacterizationReport characterization_check(int n, int bound = 5) {
    if (n < 1) throw std::invalid_argument("requires n >= 1");
    if (n > bound) throw std::invalid_argument("verification bound exceeded (raise the bound explicitly)");

    std::map<std::string, std::uint64_t> per_sigma;
    std::map<std::string, std::uint64_t> per_sigma_parents;
    const std::size_t dim = static_cast<std::size_t>(n) + 1;
    std::vector<std::uint64_t> joint(dim * dim * dim * dim, 0);
    auto jidx = [dim](int v, int w, int i, int j) {
        return ((static_cast<std::size_t>(v) * dim + static_cast<std::size_t>(w)) * dim +
                static_cast<std::size_t>(i)) * dim + static_cast<std::size_t>(j);
    };

    std::uint64_t items = 0;
    enumerate_decorated(n, [&](const DecoratedTree& dt) {
        ++items;
        std::string sig_key;
        for (int v = 1; v <= n; ++v) sig_key += std::to_string(dt.stamp().of(v)) + ",";
        ++per_sigma[sig_key];

        // Parent list of the relabeled (increasing) tree, by stamp.
        std::string parents_key = sig_key + "|";
        const RootedTree inc = relabel(dt.tree(), dt.stamp());
        for (int j = 2; j <= n; ++j) parents_key += std::to_string(inc.parent(j)) + ",";
        ++per_sigma_parents[parents_key];

        for (int v = 1; v <= n; ++v) {
            if (v == dt.tree().root()) continue;
            const int w = dt.tree().parent(v);
            ++joint[jidx(v, w, dt.stamp().of(w), dt.stamp().of(v))];
        }
    }, n);

    CharacterizationReport rep;
    rep.n = n;

    std::uint64_t inc_count = 1;  // (n-1)!
    for (int i = 2; i <= n - 1; ++i) inc_count *= static_cast<std::uint64_t>(i);
    rep.sigma_uniform = per_sigma.size() == items / std::max<std::uint64_t>(inc_count, 1);
    for (auto& [key, cnt] : per_sigma)
        if (cnt != inc_count) rep.sigma_uniform = false;

    // Every (stamp history, parent vector) combination appears exactly once,
    // which is precisely conditional independence with uniform marginals
    // P(parent of stamp j = i) = 1/(j-1).
    rep.parents_conditionally_independent = (per_sigma_parents.size() == items);
    for (auto& [key, cnt] : per_sigma_parents)
        if (cnt != 1) rep.parents_conditionally_independent = false;

    rep.joint_parent_stamp_law = true;
    for (int v = 1; v <= n; ++v)
        for (int w = 1; w <= n; ++w)
            for (int i = 1; i <= n; ++i)
                for (int j = 1; j <= n; ++j) {
                    if (v == w || i == j) continue;
                    const std::uint64_t cnt = joint[jidx(v, w, i, j)];
                    if (j > i) {
                        const std::uint64_t denom = static_cast<std::uint64_t>(n) *
                                                    static_cast<std::uint64_t>(n - 1) *
                                                    static_cast<std::uint64_t>(j - 1);
                        if (cnt * denom != items) rep.joint_parent_stamp_law = false;
                    } else if (cnt != 0) {
                        rep.joint_parent_stamp_law = false;
                    }
                }
    return rep;
}

// P(d_{R_n}(i) >= m): vertex i of a recursive tree gains a child at each
// attachment step k = i+1..n independently with probability 1/(k-1), so the
// window carries probabilities 1/j for j = i..n-1.
template <class Num>
Num degree_tail_rn(int n, int i, int m) {
    if (i < 1 || i > n) throw std::out_of_range("vertex out of range");
    if (m < 0) throw std::invalid_argument("threshold must be >= 0");
    PBTail<Num> t(attachment_probs<Num>(n), m);
    return t.tail(i, m);
}

// All vertex tails at once from one table.
template <class Num>
std::vector<Num> degree_tail_rn_all(int n, int m) {
    PBTail<Num> t(attachment_probs<Num>(n), m);
    std::vector<Num> out(static_cast<std::size_t>(n) + 1, Num(0));
    for (int i = 1; i <= n; ++i) out[static_cast<std::size_t>(i)] = t.tail(i, m);
    return out;
}

// P(d_{T_n}(v) >= m), identical for every v by exchangeability:
// 2^{-m} * P(|S_n| >= m) with |S_n| a Poisson-binomial sum of Ber(2/j),
// j = 2..n. The geometric factor uses the convention P(D >= m) = 2^{-m}.
template <class Num>
Num degree_tail_tn(int n, int m) {
    if (m < 0) throw std::invalid_argument("threshold must be >= 0");
    if (m == 0) return Num(1);
    PBTail<Num> t(selection_probs<Num>(n), m);
    return pow2_inv<Num>(m) * t.tail(1, m);
}

// lambda_{n,m} = E[#vertices of degree >= m] = sum_i P(d_{R_n}(i) >= m),
// with the upper envelope n * 2^{-m} (the value of 2^{-m + log n}).
template <class Num>
struct LambdaResult {
    Num lambda;
    Num envelope;
    Num ratio;  // lambda / envelope, in (0, 1] whenever lambda > 0
};

template <class Num>
LambdaResult<Num> lambda_exact(int n, int m) {
    if (n < 1 || m < 0) throw std::invalid_argument("bad arguments");
    PBTail<Num> t(attachment_probs<Num>(n), m);
    Num lambda(0);
    for (int i = 1; i <= n; ++i) lambda += t.tail(i, m);
    Num envelope = Num(n) * pow2_inv<Num>(m);
    return {lambda, envelope, lambda / envelope};
}

// P(tau <= k) = prod_{j=k+1}^{n} (1 - 2/(j(j-1))): at each forest size j > k
// the merging pair avoids the specific pair of trees containing the two
// tracked vertices.
template <class Num>
Num tau_tail(int n, int k) {
    if (k < 2 || k > n) throw std::out_of_range("cutoff must satisfy 2 <= k <= n");
    Num prod(1);
    for (int j = k + 1; j <= n; ++j)
        prod *= Num(1) - make_frac<Num>(2, static_cast<long>(j) * (j - 1));
    return prod;
}

// P(tau > ceil(n^a)) <= 4 n^{-a}.
struct TauBoundCheck {
    int n = 0;
    int k = 0;
    double exceed_prob = 0;
    double bound = 0;
    bool ok = false;
};

inline TauBoundCheck tau_bound_check(int n, double a) {
    if (!(a > 0.0 && a < 1.0)) throw std::domain_error("a must lie in (0,1)");
    TauBoundCheck c;
    c.n = n;
    c.k = std::max(2, static_cast<int>(std::ceil(std::pow(static_cast<double>(n), a))));
    c.exceed_prob = 1.0 - tau_tail<double>(n, std::min(c.k, n));
    c.bound = 4.0 * std::pow(static_cast<double>(n), -a);
    c.ok = c.exceed_prob <= c.bound;
    return c;
}

// Closed-form constants of the degree-tail analysis:
//   alpha_sup = gamma_sup = (1 - c + sqrt(1 + 2c - c^2)) / 4  (strict upper bounds),
//   beta      = 3 eps^2 / (2 (3 + eps)) with eps = c' - 1 (Bernstein exponent),
//   epsilon   = (2 - c)^2 / 4.
struct BoundConstants {
    double alpha_sup = 0;
    double beta = 0;
    double gamma_sup = 0;
    double epsilon = 0;
};

inline BoundConstants bound_constants(double c, double c_prime) {
    if (!(c > 0.0 && c <= 2.0)) throw std::domain_error("c must lie in (0, 2]");
    if (!(c_prime > 1.0 && c_prime <= 2.0)) throw std::domain_error("c' must lie in (1, 2]");
    BoundConstants b;
    b.alpha_sup = (1.0 - c + std::sqrt(1.0 + 2.0 * c - c * c)) / 4.0;
    b.gamma_sup = b.alpha_sup;
    const double eps = c_prime - 1.0;
    b.beta = 3.0 * eps * eps / (2.0 * (3.0 + eps));
    b.epsilon = (2.0 - c) * (2.0 - c) / 4.0;
    return b;
}

// Law of the degree of the newly added vertex of a uniform decorated tree,
// dmax entries 0..dmax, computed two independent ways:
//  - as the H-set yield: sum over k of (1/n) P(sum_{i=k}^{n-1} X_i = d);
//  - as min{Geo(1/2), |S_n|}: 2^{-d-1} (P(|S_n| >= d) + P(|S_n| = d)).
// The two agree exactly; tests pin this identity down in rationals.
template <class Num>
std::vector<Num> hset_yield_pmf(int n, int dmax) {
    PBTail<Num> t(attachment_probs<Num>(n), dmax);
    std::vector<Num> pmf(static_cast<std::size_t>(dmax) + 1, Num(0));
    const Num inv_n = make_frac<Num>(1, n);
    for (int d = 0; d <= dmax; ++d) {
        Num s(0);
        for (int k = 1; k <= n; ++k) s += t.pmf(k, d);
        pmf[static_cast<std::size_t>(d)] = inv_n * s;
    }
    return pmf;
}

template <class Num>
std::vector<Num> min_geo_selection_pmf(int n, int dmax) {
    PBTail<Num> t(selection_probs<Num>(n), dmax);
    std::vector<Num> pmf(static_cast<std::size_t>(dmax) + 1, Num(0));
    for (int d = 0; d <= dmax; ++d)
        pmf[static_cast<std::size_t>(d)] =
            pow2_inv<Num>(d + 1) * (t.tail(1, d) + t.pmf(1, d));
    return pmf;
}

}  // namespace robinhood
