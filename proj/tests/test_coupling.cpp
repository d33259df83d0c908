#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "robinhood/coupling.hpp"
#include "robinhood/exact.hpp"
#include "robinhood/numeric.hpp"
#include "robinhood/pbtail.hpp"
#include "robinhood/rng.hpp"

using namespace robinhood;

namespace {

// Rejection oracle for the conditioned coordinate vector: resample plain X
// until the window sum clears the threshold.
std::vector<std::uint8_t> rejection_conditioned_x(int n, int k, int m, Rng& rng) {
    for (;;) {
        std::vector<std::uint8_t> x(static_cast<std::size_t>(n), 0);
        x[1] = 1;
        for (int i = 2; i <= n - 1; ++i) x[static_cast<std::size_t>(i)] = rng.bernoulli(1.0 / i) ? 1 : 0;
        int s = 0;
        for (int i = k; i <= n - 1; ++i) s += x[static_cast<std::size_t>(i)];
        if (s >= m) return x;
    }
}

// Rejection oracle for the conditioned H-set: resample whole H-sets until the
// yield clears the threshold.
HSet rejection_conditioned_hset(int n, int m, Rng& rng) {
    for (;;) {
        HSet h = sample_hset_full(n, rng);
        if (h.yield() >= m) return h;
    }
}

}  // namespace

TEST_CASE("vacuous conditioning leaves the vector untouched") {
    Rng rng(1);
    for (int rep = 0; rep < 200; ++rep) {
        const auto cx = conditioned_x(12, 4, 0, rng);
        CHECK(cx.x == cx.x_cond);
    }
}

TEST_CASE("forced conditioning sets the only available coordinate") {
    // n=3, window {2}, threshold 1: the conditioned bit is surely set while
    // the plain bit stays Ber(1/2).
    Rng rng(2);
    int plain_ones = 0;
    const int trials = 20000;
    for (int t = 0; t < trials; ++t) {
        const auto cx = conditioned_x(3, 2, 1, rng);
        CHECK(cx.x_cond[2] == 1);
        CHECK(cx.x[2] <= cx.x_cond[2]);
        plain_ones += cx.x[2];
    }
    CHECK(std::abs(plain_ones - trials / 2.0) <= 3 * std::sqrt(trials * 0.25));
}

TEST_CASE("conditioning beyond the window is rejected") {
    Rng rng(3);
    CHECK_THROWS_AS(conditioned_x(10, 8, 3, rng), std::invalid_argument);  // window holds 2
    CHECK_NOTHROW(conditioned_x(10, 8, 2, rng));
}

TEST_CASE("conditioned vector marginals match the rejection oracle") {
    const int n = 20, k = 10, m = 3;
    const int trials = 100000;
    Rng rng(54321);
    std::vector<std::uint64_t> ours_per_coord(static_cast<std::size_t>(n), 0);
    std::vector<std::uint64_t> oracle_per_coord(static_cast<std::size_t>(n), 0);
    std::vector<std::uint64_t> ours_sum(16, 0), oracle_sum(16, 0);
    std::uint64_t qv = 0;
    for (int t = 0; t < trials; ++t) {
        const auto cx = conditioned_x(n, k, m, rng, &qv);
        const auto ox = rejection_conditioned_x(n, k, m, rng);
        int s1 = 0, s2 = 0;
        for (int i = 1; i <= n - 1; ++i) {
            ours_per_coord[static_cast<std::size_t>(i)] += cx.x_cond[static_cast<std::size_t>(i)];
            oracle_per_coord[static_cast<std::size_t>(i)] += ox[static_cast<std::size_t>(i)];
            if (i >= k) {
                s1 += cx.x_cond[static_cast<std::size_t>(i)];
                s2 += ox[static_cast<std::size_t>(i)];
            }
        }
        CHECK(s1 >= m);
        ++ours_sum[static_cast<std::size_t>(std::min(s1, 15))];
        ++oracle_sum[static_cast<std::size_t>(std::min(s2, 15))];
    }
    CHECK(qv == 0);
    for (int i = 1; i <= n - 1; ++i) {
        const double p1 = static_cast<double>(ours_per_coord[static_cast<std::size_t>(i)]) / trials;
        const double p2 = static_cast<double>(oracle_per_coord[static_cast<std::size_t>(i)]) / trials;
        const double se = std::sqrt(p1 * (1 - p1) / trials + p2 * (1 - p2) / trials) + 1e-9;
        INFO("i=" << i << " ours=" << p1 << " oracle=" << p2);
        CHECK(std::abs(p1 - p2) <= 3.5 * se);
    }
    const auto chi = chi_square_two_sample(ours_sum, oracle_sum);
    INFO("window-sum chi-square p=" << chi.p_value);
    CHECK(chi.p_value >= 1e-3);
}

TEST_CASE("plain marginal of the coupled vector is untouched by the coupling") {
    const int n = 20, k = 10, m = 3;
    const int trials = 200000;
    Rng rng(8888);
    std::vector<std::uint64_t> ones(static_cast<std::size_t>(n), 0);
    for (int t = 0; t < trials; ++t) {
        const auto cx = conditioned_x(n, k, m, rng);
        for (int i = 1; i <= n - 1; ++i) ones[static_cast<std::size_t>(i)] += cx.x[static_cast<std::size_t>(i)];
    }
    for (int i = 1; i <= n - 1; ++i) {
        const double p = static_cast<double>(ones[static_cast<std::size_t>(i)]) / trials;
        const double ref = 1.0 / i;
        INFO("i=" << i);
        CHECK(std::abs(p - ref) <= 3.5 * binomial_se(ref, trials) + 1e-9);
    }
}

TEST_CASE("k-weights are a nonincreasing probability vector, exactly") {
    const int n = 24, m = 3;
    PBTail<Rational> tails(attachment_probs<Rational>(n), m);
    Rational z = rational(0);
    for (int k = 1; k <= n; ++k) z += tails.tail(k, m);
    Rational prev = rational(1), total = rational(0);
    for (int k = 1; k <= n; ++k) {
        const Rational pk = tails.tail(k, m) / z;
        CHECK(pk <= prev);
        total += pk;
        prev = pk;
    }
    CHECK(total == 1);
}

TEST_CASE("worked coupled (K, L) example") {
    // n=3, m=1: window tails are (1, 1/2, 0), so the weights are (2/3, 1/3, 0);
    // u1 = 0.5 yields K = 2 and K' = 1.
    CoupledHSetSampler sampler(3, 1);
    const auto& p = sampler.k_weights();
    CHECK(p[1] == Catch::Approx(2.0 / 3));
    CHECK(p[2] == Catch::Approx(1.0 / 3));
    CHECK(p[3] == Catch::Approx(0.0).margin(1e-15));

    const auto kl = sampler.kl_from_uniforms(0.5, 0.25);
    CHECK(kl.k == 2);
    CHECK(kl.kp == 1);
    CHECK(kl.l == 1);   // ceil((K-1) u2) = ceil(0.25)
    CHECK(kl.lp == 0);  // K' = 1 forces L' = 0

    // Dominations hold for any explicit pair of uniforms.
    Rng rng(606060);
    for (int rep = 0; rep < 5000; ++rep) {
        const auto r = sampler.kl_from_uniforms(rng.unit(), rng.unit());
        CHECK(r.kp <= r.k);
        CHECK(r.lp <= r.l);
    }
}

TEST_CASE("vacuous threshold makes the coupled pair identical") {
    CoupledHSetSampler sampler(12, 0);
    Rng rng(5);
    for (int t = 0; t < 2000; ++t) {
        const CoupledHSets hs = sampler.draw(rng);
        CHECK(hs.plain.k() == hs.conditioned.k());
        CHECK(hs.plain.l() == hs.conditioned.l());
        CHECK(hs.plain == hs.conditioned);
    }
}

TEST_CASE("dominations hold on every coupled draw") {
    const int n = 32, m = 4;
    CoupledHSetSampler sampler(n, m);
    Rng rng(99);
    for (int t = 0; t < 100000; ++t) {
        const CoupledHSets hs = sampler.draw(rng);
        CHECK(hs.conditioned.k() <= hs.plain.k());
        CHECK(hs.conditioned.l() <= hs.plain.l());
        for (int i = 1; i <= n - 1; ++i)
            CHECK(hs.plain.bit(i) <= hs.conditioned.bit(i));
        CHECK(hs.conditioned.yield() >= m);
    }
    CHECK(sampler.q_violations() == 0);
    CHECK(sampler.k_order_violations() == 0);
}

TEST_CASE("conditioned K' marginal matches the tail weights") {
    const int n = 10, m = 2;
    CoupledHSetSampler sampler(n, m);
    Rng rng(1234);
    const int trials = 200000;
    std::vector<std::uint64_t> counts(static_cast<std::size_t>(n) + 1, 0);
    for (int t = 0; t < trials; ++t) ++counts[static_cast<std::size_t>(sampler.draw(rng).conditioned.k())];
    const auto& p = sampler.k_weights();
    for (int k = 1; k <= n; ++k) {
        const double emp = static_cast<double>(counts[static_cast<std::size_t>(k)]) / trials;
        INFO("k=" << k);
        CHECK(std::abs(emp - p[static_cast<std::size_t>(k)]) <=
              3.5 * binomial_se(std::max(p[static_cast<std::size_t>(k)], 1e-12), trials) + 1e-9);
    }
}

TEST_CASE("conditioned H-set law matches the rejection oracle") {
    // Joint law of (K', window sum) at n=12, m=3 against wholesale rejection.
    const int n = 12, m = 3;
    const int trials = 150000;
    CoupledHSetSampler sampler(n, m);
    Rng rng(31415);
    auto cell = [&](int k, int yield) {
        return static_cast<std::size_t>((k - 1) * (n + 1) + std::min(yield, n));
    };
    std::vector<std::uint64_t> ours(static_cast<std::size_t>(n) * (n + 1), 0);
    std::vector<std::uint64_t> oracle(static_cast<std::size_t>(n) * (n + 1), 0);
    for (int t = 0; t < trials; ++t) {
        const CoupledHSets hs = sampler.draw(rng);
        ++ours[cell(hs.conditioned.k(), hs.conditioned.yield())];
        const HSet o = rejection_conditioned_hset(n, m, rng);
        ++oracle[cell(o.k(), o.yield())];
    }
    const auto chi = chi_square_two_sample(ours, oracle);
    INFO("p=" << chi.p_value << " stat=" << chi.stat << " df=" << chi.df);
    CHECK(chi.p_value >= 1e-3);

    // L' | K' must be uniform on [1, K'-1]: check at a fixed K'.
    std::vector<std::uint64_t> l_counts(static_cast<std::size_t>(n), 0);
    std::uint64_t l_total = 0;
    Rng rng2(602214);
    for (int t = 0; t < 200000; ++t) {
        const CoupledHSets hs = sampler.draw(rng2);
        if (hs.conditioned.k() == 4) {
            ++l_counts[static_cast<std::size_t>(hs.conditioned.l())];
            ++l_total;
        }
    }
    REQUIRE(l_total > 1000);
    for (int l = 1; l <= 3; ++l) {
        const double emp = static_cast<double>(l_counts[static_cast<std::size_t>(l)]) / static_cast<double>(l_total);
        INFO("l=" << l);
        CHECK(std::abs(emp - 1.0 / 3) <= 4 * binomial_se(1.0 / 3, l_total));
    }
}

TEST_CASE("coupled trees satisfy the sure statements") {
    const int n = 64;
    const int m = static_cast<int>(std::ceil(1.3 * std::log(n)));
    CoupledTreeSampler sampler(n, m);
    Rng rng(777);
    for (int t = 0; t < 20000; ++t) {
        const CoupledTreePair pair = sampler.draw(rng);
        const auto checks = check_coupling(pair, m);
        CHECK(checks.k_dominated);
        CHECK(checks.l_dominated);
        CHECK(checks.x_dominated);
        CHECK(checks.cond_yield_ok);
        CHECK(checks.containment_ok);
        CHECK(checks.diff_bound_ok);
        CHECK(degree(pair.cond_tree.tree(), n) >= m);  // the conditioned new vertex is high-degree
    }
    CHECK(sampler.q_violations() == 0);
}

TEST_CASE("per-vertex upcrossing rate decays with size at fixed rate c") {
    // The crossing probability is per-vertex O(n^{-1-beta}), so the maximal
    // per-vertex rate must drop clearly between n = 128 and n = 1024.
    auto rate = [](int n, std::uint64_t seed) {
        const int m = static_cast<int>(std::ceil(1.3 * std::log(n)));
        return estimate_violation(n, m, 30000, seed, 0);
    };
    const auto small_n = rate(128, 11);
    const auto large_n = rate(1024, 12);
    INFO("max rate(128)=" << small_n.max_rate << " max rate(1024)=" << large_n.max_rate);
    CHECK(small_n.sure_statements_hold());
    CHECK(large_n.sure_statements_hold());
    CHECK(large_n.max_rate < small_n.max_rate);
    CHECK(large_n.mean_upcrossings < small_n.mean_upcrossings);
}

TEST_CASE("violation report with vacuous threshold") {
    const auto rep = estimate_violation(16, 0, 2000, 3, 0);
    CHECK(rep.max_rate == 0.0);
    CHECK(rep.mean_upcrossings == 0.0);
    CHECK(rep.sure_statements_hold());
}

TEST_CASE("m = 0 never upcrosses") {
    CoupledTreeSampler sampler(16, 0);
    Rng rng(4);
    for (int t = 0; t < 3000; ++t) {
        const CoupledTreePair pair = sampler.draw(rng);
        CHECK(pair.plain_tree == pair.cond_tree);
    }
}
