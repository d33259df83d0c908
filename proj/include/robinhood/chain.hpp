#pragma once

#include <algorithm>
#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "robinhood/rng.hpp"
#include "robinhood/tree.hpp"

namespace robinhood {

// One merge event at forest size i: the a-th and b-th trees (indices into the
// forest listed in increasing order of smallest-labeled vertex) merge, and
// the new edge is directed toward the root of the a-th tree when xi is set.
struct MergeEvent {
    int a = 0;
    int b = 0;
    bool xi = false;
    bool operator==(const MergeEvent&) const = default;
};

// Ordered record of the n-1 merge events of an n-chain. Event index j
// corresponds to forest size i = n - j, so events run i = n, n-1, ..., 2.
class CoalescentTrace {
public:
    CoalescentTrace(int n, std::vector<MergeEvent> merges) : n_(n), merges_(std::move(merges)) {
        if (n_ < 1) throw std::invalid_argument("trace size must be >= 1");
        if (merges_.size() != static_cast<std::size_t>(n_ - 1))
            throw std::invalid_argument("trace must have exactly n-1 merge events");
        for (int j = 0; j < n_ - 1; ++j) {
            const int i = n_ - j;
            const auto& e = merges_[static_cast<std::size_t>(j)];
            if (!(1 <= e.a && e.a < e.b && e.b <= i))
                throw std::invalid_argument("merge event indices must satisfy 1 <= a < b <= i");
        }
    }

    int size() const { return n_; }
    // Event applied at forest size i (i = n..2).
    const MergeEvent& at_size(int i) const { return merges_[static_cast<std::size_t>(n_ - i)]; }
    const std::vector<MergeEvent>& merges() const { return merges_; }

    bool operator==(const CoalescentTrace&) const = default;

private:
    int n_;
    std::vector<MergeEvent> merges_;
};

// Kingman's n-coalescent: the merging pair is uniform over tree pairs and the
// orientation is a fair coin, independently at every step. Each fixed trace
// has probability 1/(n!(n-1)!).
inline CoalescentTrace sample_kingman(int n, Rng& rng) {
    std::vector<MergeEvent> merges;
    merges.reserve(static_cast<std::size_t>(n > 1 ? n - 1 : 0));
    for (int i = n; i >= 2; --i) {
        auto [a, b] = rng.unordered_pair(i);
        merges.push_back({a, b, rng.coin()});
    }
    return CoalescentTrace(n, std::move(merges));
}

// Edge clock of a decorated tree: rho(v) is the largest forest size whose
// forest still contains the edge v -> parent(v), recovered as stamp(v) - 1.
// The n-1 values are exactly {1,...,n-1} and strictly decrease toward the
// root; both facts follow from the stamp-history property.
struct EdgeClock {
    std::vector<int> rho;  // indexed by child vertex; 0 at the root and at index 0
};

inline EdgeClock edge_clock(const DecoratedTree& dt) {
    EdgeClock ec;
    ec.rho.assign(static_cast<std::size_t>(dt.size()) + 1, 0);
    for (int v = 1; v <= dt.size(); ++v)
        if (v != dt.tree().root()) ec.rho[static_cast<std::size_t>(v)] = dt.stamp().of(v) - 1;
    return ec;
}

namespace detail {

// Forest bookkeeping for replaying traces: a union-find over vertices plus a
// list of components kept sorted by smallest label, each carrying its current
// root vertex. Merges always link the larger minimum under the smaller one,
// so the union-find representative of a component is exactly its smallest
// label.
class ForestReplay {
public:
    explicit ForestReplay(int n) : uf_(static_cast<std::size_t>(n) + 1), comps_() {
        comps_.reserve(static_cast<std::size_t>(n));
        for (int v = 1; v <= n; ++v) {
            uf_[static_cast<std::size_t>(v)] = v;
            comps_.push_back({v, v});
        }
    }

    int find(int v) {
        int r = v;
        while (uf_[static_cast<std::size_t>(r)] != r) r = uf_[static_cast<std::size_t>(r)];
        while (uf_[static_cast<std::size_t>(v)] != r) {
            const int nxt = uf_[static_cast<std::size_t>(v)];
            uf_[static_cast<std::size_t>(v)] = r;
            v = nxt;
        }
        return r;
    }

    int component_count() const { return static_cast<int>(comps_.size()); }
    // Accessors take 1-based positions in smallest-label order.
    int root_at(int pos) const { return comps_[static_cast<std::size_t>(pos - 1)].root; }
    int min_at(int pos) const { return comps_[static_cast<std::size_t>(pos - 1)].min_label; }

    // Position of the component containing v.
    int position_of(int v) {
        const int key = find(v);
        int lo = 0, hi = static_cast<int>(comps_.size()) - 1;
        while (lo < hi) {
            const int mid = (lo + hi) / 2;
            if (comps_[static_cast<std::size_t>(mid)].min_label < key)
                lo = mid + 1;
            else
                hi = mid;
        }
        return lo + 1;
    }

    // Merge the components at sorted positions a < b; the merged component
    // keeps the a-side minimum and takes `new_root` as its root.
    void merge(int a, int b, int new_root) {
        auto& ca = comps_[static_cast<std::size_t>(a - 1)];
        auto& cb = comps_[static_cast<std::size_t>(b - 1)];
        uf_[static_cast<std::size_t>(cb.min_label)] = ca.min_label;
        ca.root = new_root;
        comps_.erase(comps_.begin() + (b - 1));
    }

private:
    struct Comp {
        int min_label;
        int root;
    };
    std::vector<int> uf_;
    std::vector<Comp> comps_;
};

}  // namespace detail

// Replays a trace and produces its decorated tree: the vertex that becomes a
// child at forest size i receives stamp i, and the final root receives stamp
// 1. The result always passes the decorated-tree validation.
inline DecoratedTree chain_to_decorated(const CoalescentTrace& trace) {
    const int n = trace.size();
    std::vector<int> parent(static_cast<std::size_t>(n) + 1, 0);
    std::vector<int> stamp(static_cast<std::size_t>(n) + 1, 0);
    detail::ForestReplay forest(n);
    for (int i = n; i >= 2; --i) {
        const MergeEvent& e = trace.at_size(i);
        const int ra = forest.root_at(e.a);
        const int rb = forest.root_at(e.b);
        const int winner = e.xi ? ra : rb;
        const int loser = e.xi ? rb : ra;
        parent[static_cast<std::size_t>(loser)] = winner;
        stamp[static_cast<std::size_t>(loser)] = i;
        forest.merge(e.a, e.b, winner);
    }
    const int final_root = forest.root_at(1);
    stamp[static_cast<std::size_t>(final_root)] = 1;
    return DecoratedTree(RootedTree(n, std::move(parent)), Permutation(std::move(stamp)));
}

// Inverts the replay: edges are re-added in decreasing edge-clock order, and
// each step records which component positions merged and which side kept the
// root. Round-trips with chain_to_decorated are exact.
inline CoalescentTrace decorated_to_chain(const DecoratedTree& dt) {
    const int n = dt.size();
    std::vector<int> child_with_stamp(static_cast<std::size_t>(n) + 1, 0);
    for (int v = 1; v <= n; ++v)
        if (v != dt.tree().root()) child_with_stamp[static_cast<std::size_t>(dt.stamp().of(v))] = v;

    detail::ForestReplay forest(n);
    std::vector<MergeEvent> merges;
    merges.reserve(static_cast<std::size_t>(n - 1));
    for (int i = n; i >= 2; --i) {
        const int child = child_with_stamp[static_cast<std::size_t>(i)];
        const int head = dt.tree().parent(child);
        const int pos_child = forest.position_of(child);
        const int pos_head = forest.position_of(head);
        if (forest.root_at(pos_child) != child || forest.root_at(pos_head) != head)
            throw std::logic_error("edge clocks do not decrease toward the root");
        const int a = std::min(pos_child, pos_head);
        const int b = std::max(pos_child, pos_head);
        const bool xi = (pos_head == a);
        merges.push_back({a, b, xi});
        forest.merge(a, b, head);
    }
    return CoalescentTrace(n, std::move(merges));
}

// Forest sizes at which the tree containing v takes part in a merge, in
// decreasing order. Always contains 2 when n >= 2.
inline std::vector<int> selection_set(const CoalescentTrace& trace, int v) {
    const int n = trace.size();
    if (v < 1 || v > n) throw std::out_of_range("vertex label out of range");
    std::vector<int> sel;
    detail::ForestReplay forest(n);
    for (int i = n; i >= 2; --i) {
        const MergeEvent& e = trace.at_size(i);
        const int rep_v = forest.find(v);
        if (rep_v == forest.min_at(e.a) || rep_v == forest.min_at(e.b)) sel.push_back(i);
        forest.merge(e.a, e.b, e.xi ? forest.root_at(e.a) : forest.root_at(e.b));
    }
    return sel;
}

// Largest forest size at which the trees containing v and w are both part of
// the merging pair, i.e. the step at which their trees first interact.
inline int tau(const CoalescentTrace& trace, int v, int w) {
    const int n = trace.size();
    if (v == w) throw std::invalid_argument("tau requires two distinct vertices");
    if (v < 1 || v > n || w < 1 || w > n) throw std::out_of_range("vertex label out of range");
    detail::ForestReplay forest(n);
    for (int i = n; i >= 2; --i) {
        const MergeEvent& e = trace.at_size(i);
        const int ra = forest.min_at(e.a);
        const int rb = forest.min_at(e.b);
        const int rv = forest.find(v);
        const int rw = forest.find(w);
        const bool v_in = (rv == ra || rv == rb);
        const bool w_in = (rw == ra || rw == rb);
        if (v_in && w_in) return i;
        forest.merge(e.a, e.b, e.xi ? forest.root_at(e.a) : forest.root_at(e.b));
    }
    throw std::logic_error("trees never interacted; invalid trace");
}

// Trace text format: a line "n", then n-1 lines "i:a,b,xi" for i = n..2.
inline std::string format_trace(const CoalescentTrace& trace) {
    std::ostringstream os;
    os << trace.size() << '\n';
    for (int i = trace.size(); i >= 2; --i) {
        const MergeEvent& e = trace.at_size(i);
        os << i << ':' << e.a << ',' << e.b << ',' << (e.xi ? 1 : 0) << '\n';
    }
    return os.str();
}

inline CoalescentTrace parse_trace(std::istream& in) {
    int n = 0;
    if (!(in >> n) || n < 1) throw std::invalid_argument("expected trace size");
    std::vector<MergeEvent> merges;
    merges.reserve(static_cast<std::size_t>(n > 1 ? n - 1 : 0));
    for (int i = n; i >= 2; --i) {
        int isz = 0, a = 0, b = 0, xi = 0;
        char c1 = 0, c2 = 0, c3 = 0;
        if (!(in >> isz >> c1 >> a >> c2 >> b >> c3 >> xi) || c1 != ':' || c2 != ',' || c3 != ',')
            throw std::invalid_argument("malformed trace event line");
        if (isz != i) throw std::invalid_argument("trace events out of order");
        if (xi != 0 && xi != 1) throw std::invalid_argument("xi must be 0 or 1");
        merges.push_back({a, b, xi == 1});
    }
    return CoalescentTrace(n, std::move(merges));
}

inline CoalescentTrace parse_trace(const std::string& text) {
    std::istringstream is(text);
    return parse_trace(is);
}

// Degree profile of a uniform decorated tree, sampled through the coalescent
// representation in O(n) per trial. Only roots ever gain degree and the
// merging pair is uniform regardless of how components are listed, so
// components live in swap-remove order instead of smallest-label order.
// Buffers are reused across trials.
class KingmanDegreeSampler {
public:
    explicit KingmanDegreeSampler(int n) : n_(n), comps_(), deg_() {
        if (n_ < 1) throw std::invalid_argument("size must be >= 1");
        comps_.resize(static_cast<std::size_t>(n_));
        deg_.resize(static_cast<std::size_t>(n_) + 1);
    }

    struct Result {
        int z = 0;          // #vertices with degree >= m
        int max_degree = 0;
    };

    // One trial; z is counted against the threshold m (m <= 0 counts all n).
    Result run(Rng& rng, int m) {
        for (int v = 1; v <= n_; ++v) comps_[static_cast<std::size_t>(v - 1)] = v;
        std::fill(deg_.begin(), deg_.end(), 0);
        Result r;
        if (m <= 0) r.z = n_;
        for (int i = n_; i >= 2; --i) {
            auto [a, b] = rng.unordered_pair(i);
            const int ra = comps_[static_cast<std::size_t>(a - 1)];
            const int rb = comps_[static_cast<std::size_t>(b - 1)];
            const bool xi = rng.coin();
            const int winner = xi ? ra : rb;
            const int d = ++deg_[static_cast<std::size_t>(winner)];
            if (d > r.max_degree) r.max_degree = d;
            if (m > 0 && d == m) ++r.z;
            comps_[static_cast<std::size_t>(a - 1)] = winner;
            comps_[static_cast<std::size_t>(b - 1)] = comps_[static_cast<std::size_t>(i - 1)];
        }
        return r;
    }

    int size() const { return n_; }
    // Degree of vertex v in the most recent trial.
    int degree(int v) const { return deg_[static_cast<std::size_t>(v)]; }

private:
    int n_;
    std::vector<std::int32_t> comps_;
    std::vector<std::int32_t> deg_;
};

}  // namespace robinhood
