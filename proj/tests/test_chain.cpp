#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <map>
#include <set>

#include "robinhood/chain.hpp"
#include "robinhood/exact.hpp"
#include "robinhood/numeric.hpp"
#include "robinhood/pbtail.hpp"
#include "robinhood/pruning.hpp"
#include "robinhood/rng.hpp"
#include "robinhood/tree.hpp"

using namespace robinhood;

TEST_CASE("trace validation") {
    CHECK_NOTHROW(CoalescentTrace(1, {}));
    CHECK_THROWS_AS(CoalescentTrace(2, {}), std::invalid_argument);
    CHECK_THROWS_AS(CoalescentTrace(2, {{1, 3, false}}), std::invalid_argument);  // b > i
    CHECK_THROWS_AS(CoalescentTrace(2, {{2, 1, false}}), std::invalid_argument);  // a >= b
    CHECK_NOTHROW(CoalescentTrace(2, {{1, 2, true}}));
}

TEST_CASE("two-element chain maps to the two decorated trees") {
    const DecoratedTree heads = chain_to_decorated(CoalescentTrace(2, {{1, 2, true}}));
    CHECK(format_decorated(heads) == "2;0,1;1,2");  // edge 2->1, stamps (1,2)

    const DecoratedTree tails = chain_to_decorated(CoalescentTrace(2, {{1, 2, false}}));
    CHECK(format_decorated(tails) == "2;2,0;2,1");  // edge 1->2, stamps (2,1)

    CHECK(decorated_to_chain(heads) == CoalescentTrace(2, {{1, 2, true}}));
    CHECK(decorated_to_chain(tails) == CoalescentTrace(2, {{1, 2, false}}));
}

TEST_CASE("single vertex round trip") {
    const CoalescentTrace t(1, {});
    CHECK(chain_to_decorated(t) == DecoratedTree::single());
    CHECK(decorated_to_chain(DecoratedTree::single()) == t);
}

TEST_CASE("round trip over all decorated trees of size 4") {
    int count = 0;
    enumerate_decorated(4, [&](const DecoratedTree& dt) {
        ++count;
        CHECK(chain_to_decorated(decorated_to_chain(dt)) == dt);
    });
    CHECK(count == 144);
}

TEST_CASE("round trip on random traces") {
    Rng rng(2024);
    for (int rep = 0; rep < 2000; ++rep) {
        const int n = rng.uniform_int(1, 40);
        const CoalescentTrace trace = sample_kingman(n, rng);
        const DecoratedTree dt = chain_to_decorated(trace);
        CHECK(decorated_to_chain(dt) == trace);
    }
}

TEST_CASE("edge clock values are a permutation and decrease rootward") {
    Rng rng(7);
    for (int rep = 0; rep < 200; ++rep) {
        const int n = rng.uniform_int(2, 32);
        const DecoratedTree dt = chain_to_decorated(sample_kingman(n, rng));
        const EdgeClock ec = edge_clock(dt);
        std::set<int> values;
        for (int v = 1; v <= n; ++v) {
            if (v == dt.tree().root()) continue;
            values.insert(ec.rho[static_cast<std::size_t>(v)]);
            const int w = dt.tree().parent(v);
            if (w != dt.tree().root())
                CHECK(ec.rho[static_cast<std::size_t>(v)] > ec.rho[static_cast<std::size_t>(w)]);
        }
        CHECK(values.size() == static_cast<std::size_t>(n - 1));
        CHECK(*values.begin() == 1);
        CHECK(*values.rbegin() == n - 1);
    }
}

TEST_CASE("first merge step of three elements is uniform over six outcomes") {
    Rng rng(31337);
    const int trials = 100000;
    std::map<std::string, int> counts;
    for (int t = 0; t < trials; ++t) {
        const CoalescentTrace tr = sample_kingman(3, rng);
        const MergeEvent& e = tr.at_size(3);
        counts[std::to_string(e.a) + std::to_string(e.b) + (e.xi ? "1" : "0")]++;
    }
    CHECK(counts.size() == 6);
    const double expect = trials / 6.0;
    const double sigma = std::sqrt(trials * (1.0 / 6) * (5.0 / 6));
    for (auto& [key, c] : counts) CHECK(std::abs(c - expect) <= 3 * sigma);
}

TEST_CASE("selection sets") {
    Rng rng(5);
    const CoalescentTrace t2 = sample_kingman(2, rng);
    CHECK(selection_set(t2, 1) == std::vector<int>{2});
    CHECK_THROWS_AS(selection_set(t2, 3), std::out_of_range);

    for (int rep = 0; rep < 200; ++rep) {
        const int n = rng.uniform_int(2, 24);
        const CoalescentTrace tr = sample_kingman(n, rng);
        const int v = rng.uniform_int(1, n);
        const auto sel = selection_set(tr, v);
        CHECK(!sel.empty());
        CHECK(sel.back() == 2);  // the final merge involves every tree
        for (int j : sel) {
            CHECK(j >= 2);
            CHECK(j <= n);
        }
    }
}

TEST_CASE("selection set size follows the Bernoulli(2/j) profile") {
    // |S_n(v)| is a Poisson-binomial sum with success probabilities 2/j; the
    // exact DP provides the reference tail per threshold.
    const int n = 100;
    const int trials = 100000;
    Rng rng(424242);
    std::vector<int> size_count(static_cast<std::size_t>(n) + 2, 0);
    for (int t = 0; t < trials; ++t) {
        const CoalescentTrace tr = sample_kingman(n, rng);
        const auto sel = selection_set(tr, 1);
        ++size_count[sel.size()];
    }
    PBTail<double> tails(selection_probs<double>(n), 30);
    for (int m = 1; m <= 25; ++m) {
        double emp = 0;
        for (std::size_t s = static_cast<std::size_t>(m); s < size_count.size(); ++s)
            emp += size_count[s];
        emp /= trials;
        const double ref = tails.tail(1, m);
        const double sigma = std::max(1e-9, binomial_se(ref, trials));
        INFO("m=" << m << " emp=" << emp << " ref=" << ref);
        CHECK(std::abs(emp - ref) <= 3.5 * sigma);
    }
}

TEST_CASE("tau basics and tail") {
    Rng rng(99);
    const CoalescentTrace t2 = sample_kingman(2, rng);
    CHECK(tau(t2, 1, 2) == 2);
    CHECK_THROWS_AS(tau(t2, 1, 1), std::invalid_argument);

    for (int rep = 0; rep < 100; ++rep) {
        const int n = rng.uniform_int(2, 20);
        const CoalescentTrace tr = sample_kingman(n, rng);
        const int t = tau(tr, 1, 2);
        CHECK(t >= 2);
        CHECK(t <= n);
    }

    // Empirical P(tau <= k) against the exact product formula.
    const int n = 50, k = 10, trials = 50000;
    int hits = 0;
    for (int t = 0; t < trials; ++t) {
        const CoalescentTrace tr = sample_kingman(n, rng);
        if (tau(tr, 1, 2) <= k) ++hits;
    }
    const double ref = tau_tail<double>(n, k);
    const double emp = static_cast<double>(hits) / trials;
    CHECK(std::abs(emp - ref) <= 3 * binomial_se(ref, trials));
}

TEST_CASE("a growth history induces a coalescent for every size") {
    // Converting each prefix of the growth process gives a family of valid
    // merge traces coupled across sizes.
    Rng rng(2027);
    const GrowthTrace g = grow_process(12, rng);
    for (const DecoratedTree& dt : g.trees) {
        const CoalescentTrace tr = decorated_to_chain(dt);
        CHECK(tr.size() == dt.size());
        CHECK(chain_to_decorated(tr) == dt);
    }
}

TEST_CASE("trace text round trip") {
    Rng rng(8);
    for (int rep = 0; rep < 100; ++rep) {
        const int n = rng.uniform_int(1, 20);
        const CoalescentTrace tr = sample_kingman(n, rng);
        CHECK(parse_trace(format_trace(tr)) == tr);
    }
    CHECK_THROWS_AS(parse_trace("2\n2:2,1,0\n"), std::invalid_argument);
    CHECK_THROWS_AS(parse_trace("2\n3:1,2,0\n"), std::invalid_argument);
    CHECK_THROWS_AS(parse_trace("2\n2:1,2,7\n"), std::invalid_argument);
}

TEST_CASE("degree sampler agrees with trace replay in law") {
    // Max-degree histograms from the fast degree sampler and from full trace
    // replay must be statistically indistinguishable.
    const int n = 32, trials = 40000;
    std::vector<std::uint64_t> h1(16, 0), h2(16, 0);
    KingmanDegreeSampler ks(n);
    Rng r1(777), r2(888);
    for (int t = 0; t < trials; ++t) {
        const auto res = ks.run(r1, 0);
        ++h1[std::min<std::size_t>(static_cast<std::size_t>(res.max_degree), 15)];
        const DecoratedTree dt = chain_to_decorated(sample_kingman(n, r2));
        const auto deg = degree_sequence(dt.tree());
        int maxd = 0;
        for (int v = 1; v <= n; ++v) maxd = std::max(maxd, deg[static_cast<std::size_t>(v)]);
        ++h2[std::min<std::size_t>(static_cast<std::size_t>(maxd), 15)];
    }
    const auto chi = chi_square_two_sample(h1, h2);
    INFO("stat=" << chi.stat << " df=" << chi.df << " p=" << chi.p_value);
    CHECK(chi.p_value >= 1e-3);
}

TEST_CASE("degree sampler degree sum is n-1 and z matches threshold") {
    KingmanDegreeSampler ks(64);
    Rng rng(3);
    for (int rep = 0; rep < 200; ++rep) {
        const auto res = ks.run(rng, 3);
        int sum = 0, z = 0, maxd = 0;
        for (int v = 1; v <= 64; ++v) {
            sum += ks.degree(v);
            if (ks.degree(v) >= 3) ++z;
            maxd = std::max(maxd, ks.degree(v));
        }
        CHECK(sum == 63);
        CHECK(z == res.z);
        CHECK(maxd == res.max_degree);
        CHECK((res.z > 0) == (res.max_degree >= 3));
    }
}
