#pragma once

#include <cmath>
#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "robinhood/rng.hpp"
#include "robinhood/tree.hpp"

namespace robinhood {

// Pruning parameters (k, l, x) for building a decorated tree of size n from
// one of size n-1: k is the stamp of the new vertex, l the stamp it attaches
// to (0 exactly when k = 1), and x flags by stamp which vertices are rewired
// toward the new vertex. Membership in the parameter set is checked at
// construction: either 1 <= l < k <= n, or (k, l) = (1, 0) with x_1 = 1.
class HSet {
public:
    HSet(int n, int k, int l, std::vector<std::uint8_t> x)
        : n_(n), k_(k), l_(l), x_(std::move(x)) {
        if (n_ < 2) throw std::invalid_argument("HSet target size must be >= 2");
        if (x_.size() != static_cast<std::size_t>(n_))
            throw std::invalid_argument("x must have n-1 entries (index 0 unused)");
        const bool attach_case = (1 <= l_ && l_ < k_ && k_ <= n_);
        const bool root_case = (k_ == 1 && l_ == 0 && x_[1] == 1);
        if (!attach_case && !root_case)
            throw std::invalid_argument("(k,l,x) is not a valid pruning parameter");
    }

    int target_size() const { return n_; }
    int k() const { return k_; }
    int l() const { return l_; }
    // x_i for stamps i in [1, n-1].
    bool bit(int i) const { return x_[static_cast<std::size_t>(i)] != 0; }

    // Number of set bits in [k, n-1]: the degree of the new vertex after the
    // pruning (and, for a sampled H-set, its yield).
    int yield() const {
        int s = 0;
        for (int i = k_; i <= n_ - 1; ++i) s += bit(i) ? 1 : 0;
        return s;
    }

    bool operator==(const HSet&) const = default;

private:
    int n_;
    int k_;
    int l_;
    std::vector<std::uint8_t> x_;  // index 0 unused
};

namespace detail {

// Positions i in (from, limit] with an independent Ber(1/i) bit set, visited
// by inverse-transform skips: given the current position i, the next set
// position j has P(next > j) = i/j, so j = ceil(i/U). Expected cost is the
// number of set bits, not the window length.
template <class F>
void skip_set_bits(int from, int limit, Rng& rng, F&& f) {
    std::int64_t i = from;
    while (i < limit) {
        const double u = rng.unit();
        if (u <= 0.0) continue;
        const double next = std::ceil(static_cast<double>(i) / u);
        if (!(next <= static_cast<double>(limit))) break;
        i = static_cast<std::int64_t>(next);
        f(static_cast<int>(i));
    }
}

}  // namespace detail

// Samples an H-set: K uniform on [1, n], L uniform on [1, K-1] (0 when K = 1),
// X_i independent Ber(1/i). Only the coordinates the pruning reads are drawn:
// the window [k, n-1], plus x_1 = 1 when k = 1 (Ber(1/1) is surely 1).
// Unread coordinates are left 0; they never influence the pruned tree.
inline HSet sample_hset(int n, Rng& rng) {
    if (n < 2) throw std::invalid_argument("H-set requires n >= 2");
    const int k = rng.uniform_int(1, n);
    const int l = (k == 1) ? 0 : rng.uniform_int(1, k - 1);
    std::vector<std::uint8_t> x(static_cast<std::size_t>(n), 0);
    if (k == 1) x[1] = 1;
    detail::skip_set_bits(std::max(1, k - 1), n - 1, rng, [&](int i) { x[static_cast<std::size_t>(i)] = 1; });
    return HSet(n, k, l, std::move(x));
}

// Samples an H-set with every coordinate materialized; required when all of X
// matters (e.g. for coordinatewise-coupled constructions). Produces the same
// law of pruned trees as sample_hset given identical relevant bits.
inline HSet sample_hset_full(int n, Rng& rng) {
    if (n < 2) throw std::invalid_argument("H-set requires n >= 2");
    const int k = rng.uniform_int(1, n);
    const int l = (k == 1) ? 0 : rng.uniform_int(1, k - 1);
    std::vector<std::uint8_t> x(static_cast<std::size_t>(n), 0);
    x[1] = 1;
    for (int i = 2; i <= n - 1; ++i) x[static_cast<std::size_t>(i)] = rng.bernoulli(1.0 / i) ? 1 : 0;
    return HSet(n, k, l, std::move(x));
}

// Vertices to be rewired: {v in [n-1] : x_{sigma(v)} = 1 and sigma(v) >= k}.
// Contains sigma^{-1}(1) exactly when k = 1.
inline std::vector<int> prune_set(const DecoratedTree& dt, const HSet& h) {
    if (dt.size() != h.target_size() - 1) throw std::invalid_argument("size mismatch between tree and H-set");
    std::vector<int> v;
    for (int u = 1; u <= dt.size(); ++u) {
        const int s = dt.stamp().of(u);
        if (s >= h.k() && h.bit(s)) v.push_back(u);
    }
    return v;
}

// The deterministic pruning: rewires the selected vertices toward a new
// vertex n, attaches n at stamp l (or makes it the new root when k = 1), and
// shifts stamps >= k up by one so the new vertex carries stamp k. The result
// is always a valid decorated tree.
inline DecoratedTree prune_deterministic(const DecoratedTree& dt, const HSet& h) {
    const int n = h.target_size();
    if (dt.size() != n - 1) throw std::invalid_argument("size mismatch between tree and H-set");
    const RootedTree& t = dt.tree();
    const Permutation& sig = dt.stamp();

    std::vector<int> parent(static_cast<std::size_t>(n) + 1, 0);
    std::vector<int> stamp(static_cast<std::size_t>(n) + 1, 0);
    int attach_to = 0;
    for (int v = 1; v <= n - 1; ++v) {
        const int s = sig.of(v);
        parent[static_cast<std::size_t>(v)] = (v == t.root()) ? 0 : t.parent(v);
        if (s >= h.k() && h.bit(s)) parent[static_cast<std::size_t>(v)] = n;
        if (s == h.l()) attach_to = v;
        stamp[static_cast<std::size_t>(v)] = s + (s >= h.k() ? 1 : 0);
    }
    parent[static_cast<std::size_t>(n)] = (h.k() == 1) ? 0 : attach_to;
    stamp[static_cast<std::size_t>(n)] = h.k();
    return DecoratedTree(RootedTree(n, std::move(parent)), Permutation(std::move(stamp)));
}

// One step of the random pruning: a fresh H-set applied to dt. Both the new
// tree and the H-set are returned so traces can be replayed.
inline std::pair<DecoratedTree, HSet> robin_hood_step(const DecoratedTree& dt, Rng& rng) {
    HSet h = sample_hset(dt.size() + 1, rng);
    DecoratedTree next = prune_deterministic(dt, h);
    return {std::move(next), std::move(h)};
}

// Full growth history from the one-vertex tree: trees[i] has size i+1, and
// hsets[i-1] produced trees[i] from trees[i-1].
struct GrowthTrace {
    std::vector<DecoratedTree> trees;
    std::vector<HSet> hsets;

    const DecoratedTree& final_tree() const { return trees.back(); }
};

inline GrowthTrace grow_process(int n, Rng& rng) {
    if (n < 1) throw std::invalid_argument("size must be >= 1");
    GrowthTrace g;
    g.trees.reserve(static_cast<std::size_t>(n));
    g.hsets.reserve(static_cast<std::size_t>(n - 1));
    g.trees.push_back(DecoratedTree::single());
    for (int t = 2; t <= n; ++t) {
        auto [next, h] = robin_hood_step(g.trees.back(), rng);
        g.trees.push_back(std::move(next));
        g.hsets.push_back(std::move(h));
    }
    return g;
}

// Final tree of the growth process without storing the history. Consumes the
// RNG stream exactly like grow_process (per step: k, then l, then the set
// bits), so grow_final(n, rng) == grow_process(n, rng).final_tree() stream
// for stream.
inline DecoratedTree grow_final(int n, Rng& rng) {
    if (n < 1) throw std::invalid_argument("size must be >= 1");
    std::vector<int> parent(static_cast<std::size_t>(n) + 1, 0);
    std::vector<int> by_stamp;  // by_stamp[pos-1] = vertex with stamp pos
    by_stamp.reserve(static_cast<std::size_t>(n));
    by_stamp.push_back(1);
    for (int t = 2; t <= n; ++t) {
        const int k = rng.uniform_int(1, t);
        if (k == 1) {
            parent[static_cast<std::size_t>(t)] = 0;
            parent[static_cast<std::size_t>(by_stamp[0])] = t;  // x_1 = 1: the old root moves under t
        } else {
            const int l = rng.uniform_int(1, k - 1);
            parent[static_cast<std::size_t>(t)] = by_stamp[static_cast<std::size_t>(l - 1)];
        }
        detail::skip_set_bits(std::max(1, k - 1), t - 1, rng, [&](int i) {
            parent[static_cast<std::size_t>(by_stamp[static_cast<std::size_t>(i - 1)])] = t;
        });
        by_stamp.insert(by_stamp.begin() + (k - 1), t);
    }
    std::vector<int> stamp(static_cast<std::size_t>(n) + 1, 0);
    for (int pos = 1; pos <= n; ++pos) stamp[static_cast<std::size_t>(by_stamp[static_cast<std::size_t>(pos - 1)])] = pos;
    return DecoratedTree(RootedTree(n, std::move(parent)), Permutation(std::move(stamp)));
}

// H-set text form "k;l;i1,i2,..." listing the set bits.
inline std::string format_hset(const HSet& h) {
    std::ostringstream os;
    os << h.k() << ';' << h.l() << ';';
    bool first = true;
    for (int i = 1; i <= h.target_size() - 1; ++i) {
        if (!h.bit(i)) continue;
        if (!first) os << ',';
        os << i;
        first = false;
    }
    return os.str();
}

inline HSet parse_hset(int n, const std::string& line) {
    const auto semi1 = line.find(';');
    const auto semi2 = line.find(';', semi1 == std::string::npos ? semi1 : semi1 + 1);
    if (semi1 == std::string::npos || semi2 == std::string::npos)
        throw std::invalid_argument("expected 'k;l;bits'");
    const int k = std::stoi(line.substr(0, semi1));
    const int l = std::stoi(line.substr(semi1 + 1, semi2 - semi1 - 1));
    std::vector<std::uint8_t> x(static_cast<std::size_t>(n), 0);
    std::istringstream is(line.substr(semi2 + 1));
    std::string tok;
    while (std::getline(is, tok, ',')) {
        if (tok.empty()) continue;
        const int i = std::stoi(tok);
        if (i < 1 || i > n - 1) throw std::invalid_argument("set-bit index out of range");
        x[static_cast<std::size_t>(i)] = 1;
    }
    return HSet(n, k, l, std::move(x));
}

// Growth-trace text: for each size, the decorated tree line, preceded by the
// H-set line that produced it (sizes >= 2).
inline std::string format_growth_trace(const GrowthTrace& g) {
    std::ostringstream os;
    for (std::size_t i = 0; i < g.trees.size(); ++i) {
        if (i > 0) os << format_hset(g.hsets[i - 1]) << '\n';
        os << format_decorated(g.trees[i]) << '\n';
    }
    return os.str();
}

}  // namespace robinhood
