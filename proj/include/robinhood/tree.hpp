#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace robinhood {

// Rooted labeled tree on {1,...,n} with all edges directed toward the root.
// Stored as a parent array: parent(v) is the head of v's unique out-edge and
// 0 marks the root. Index 0 of the backing vector is unused so that vertex
// labels index directly.
class RootedTree {
public:
    RootedTree(int n, std::vector<int> parent) : n_(n), parent_(std::move(parent)) {
        if (n_ < 1) throw std::invalid_argument("tree size must be >= 1");
        if (parent_.size() != static_cast<std::size_t>(n_ + 1))
            throw std::invalid_argument("parent array must have n+1 entries (index 0 unused)");
        parent_[0] = 0;
        root_ = 0;
        for (int v = 1; v <= n_; ++v) {
            const int p = parent_[v];
            if (p < 0 || p > n_) throw std::invalid_argument("parent label out of range");
            if (p == 0) {
                if (root_ != 0) throw std::invalid_argument("more than one root");
                root_ = v;
            }
        }
        if (root_ == 0) throw std::invalid_argument("no root");
        // Every vertex must reach the root; walk parent chains with
        // memoization so the check is O(n) overall.
        std::vector<char> reaches(static_cast<std::size_t>(n_) + 1, 0);
        reaches[static_cast<std::size_t>(root_)] = 1;
        std::vector<int> path;
        for (int v = 1; v <= n_; ++v) {
            if (reaches[static_cast<std::size_t>(v)]) continue;
            path.clear();
            int u = v;
            while (!reaches[static_cast<std::size_t>(u)]) {
                path.push_back(u);
                if (path.size() > static_cast<std::size_t>(n_))
                    throw std::invalid_argument("parent links contain a cycle");
                u = parent_[static_cast<std::size_t>(u)];
            }
            for (int w : path) reaches[static_cast<std::size_t>(w)] = 1;
        }
    }

    static RootedTree single() { return RootedTree(1, {0, 0}); }

    int size() const { return n_; }
    int root() const { return root_; }
    int parent(int v) const {
        check_label(v);
        return parent_[v];
    }

    bool operator==(const RootedTree& o) const = default;

    void check_label(int v) const {
        if (v < 1 || v > n_) throw std::out_of_range("vertex label out of range");
    }

private:
    int n_;
    int root_;
    std::vector<int> parent_;
};

// Number of edges directed toward v (its child count).
inline int degree(const RootedTree& t, int v) {
    t.check_label(v);
    int d = 0;
    for (int u = 1; u <= t.size(); ++u)
        if (u != t.root() && t.parent(u) == v) ++d;
    return d;
}

// Degrees of all vertices; entry 0 unused. The entries sum to n-1.
inline std::vector<int> degree_sequence(const RootedTree& t) {
    std::vector<int> d(t.size() + 1, 0);
    for (int u = 1; u <= t.size(); ++u)
        if (u != t.root()) ++d[t.parent(u)];
    return d;
}

inline bool is_increasing(const RootedTree& t) {
    for (int v = 1; v <= t.size(); ++v)
        if (v != t.root() && !(t.parent(v) < v)) return false;
    return true;
}

// Permutation of {1,...,n}; image[v] = sigma(v), index 0 unused.
class Permutation {
public:
    explicit Permutation(std::vector<int> image) : image_(std::move(image)) {
        if (image_.empty()) throw std::invalid_argument("permutation image must not be empty");
        const int n = static_cast<int>(image_.size()) - 1;
        if (n < 1) throw std::invalid_argument("permutation size must be >= 1");
        image_[0] = 0;
        std::vector<char> seen(static_cast<std::size_t>(n) + 1, 0);
        for (int v = 1; v <= n; ++v) {
            const int s = image_[v];
            if (s < 1 || s > n || seen[s]) throw std::invalid_argument("image is not a bijection on [n]");
            seen[s] = 1;
        }
    }

    static Permutation identity(int n) {
        std::vector<int> img(static_cast<std::size_t>(n) + 1);
        for (int v = 0; v <= n; ++v) img[static_cast<std::size_t>(v)] = v;
        return Permutation(std::move(img));
    }

    int size() const { return static_cast<int>(image_.size()) - 1; }
    int of(int v) const {
        if (v < 1 || v > size()) throw std::out_of_range("permutation argument out of range");
        return image_[v];
    }

    Permutation inverse() const {
        std::vector<int> inv(image_.size());
        for (int v = 1; v <= size(); ++v) inv[image_[v]] = v;
        return Permutation(std::move(inv));
    }

    // Composition (this ∘ other): v -> this(other(v)).
    Permutation compose(const Permutation& other) const {
        if (other.size() != size()) throw std::invalid_argument("size mismatch in composition");
        std::vector<int> img(image_.size());
        for (int v = 1; v <= size(); ++v) img[v] = image_[other.image_[v]];
        return Permutation(std::move(img));
    }

    bool operator==(const Permutation& o) const = default;

private:
    std::vector<int> image_;
};

// Tree with edge set {sigma(u)sigma(v) : uv in E(T)}; the root moves to
// sigma(r(T)).
inline RootedTree relabel(const RootedTree& t, const Permutation& sigma) {
    if (sigma.size() != t.size()) throw std::invalid_argument("size mismatch in relabel");
    std::vector<int> parent(static_cast<std::size_t>(t.size()) + 1, 0);
    for (int v = 1; v <= t.size(); ++v)
        if (v != t.root()) parent[sigma.of(v)] = sigma.of(t.parent(v));
    return RootedTree(t.size(), std::move(parent));
}

// First edge (v, parent(v)) violating sigma(parent(v)) < sigma(v), if any.
// sigma is a stamp history for t exactly when there is none, i.e. when
// relabel(t, sigma) is increasing.
inline std::optional<std::pair<int, int>> stamp_history_violation(const RootedTree& t,
                                                                  const Permutation& sigma) {
    if (sigma.size() != t.size()) throw std::invalid_argument("size mismatch");
    for (int v = 1; v <= t.size(); ++v)
        if (v != t.root() && !(sigma.of(t.parent(v)) < sigma.of(v)))
            return std::make_pair(v, t.parent(v));
    return std::nullopt;
}

// A rooted labeled tree together with a stamp history: relabeling the tree by
// the stamps yields an increasing tree, so stamps strictly decrease toward
// the root. The constructor enforces this.
class DecoratedTree {
public:
    DecoratedTree(RootedTree tree, Permutation stamp)
        : tree_(std::move(tree)), stamp_(std::move(stamp)) {
        if (auto bad = stamp_history_violation(tree_, stamp_)) {
            std::ostringstream os;
            os << "not a stamp history: edge " << bad->first << "->" << bad->second
               << " has stamps " << stamp_.of(bad->first) << " -> " << stamp_.of(bad->second);
            throw std::invalid_argument(os.str());
        }
    }

    static DecoratedTree single() { return DecoratedTree(RootedTree::single(), Permutation::identity(1)); }

    int size() const { return tree_.size(); }
    const RootedTree& tree() const { return tree_; }
    const Permutation& stamp() const { return stamp_; }

    bool operator==(const DecoratedTree& o) const = default;

private:
    RootedTree tree_;
    Permutation stamp_;
};

// Canonical one-line text form: "n;p_1,...,p_n;s_1,...,s_n" with p_v = 0 for
// the root and s_v the stamp of v.
inline std::string format_decorated(const DecoratedTree& dt) {
    std::ostringstream os;
    const int n = dt.size();
    os << n << ';';
    for (int v = 1; v <= n; ++v) {
        if (v > 1) os << ',';
        os << (v == dt.tree().root() ? 0 : dt.tree().parent(v));
    }
    os << ';';
    for (int v = 1; v <= n; ++v) {
        if (v > 1) os << ',';
        os << dt.stamp().of(v);
    }
    return os.str();
}

namespace detail {
inline std::vector<int> parse_int_list(const std::string& s, int expected) {
    std::vector<int> out(1, 0);
    out.reserve(static_cast<std::size_t>(expected) + 1);
    std::istringstream is(s);
    std::string tok;
    while (std::getline(is, tok, ',')) {
        std::size_t pos = 0;
        const int v = std::stoi(tok, &pos);
        if (pos != tok.size()) throw std::invalid_argument("malformed integer '" + tok + "'");
        out.push_back(v);
    }
    if (static_cast<int>(out.size()) - 1 != expected)
        throw std::invalid_argument("wrong number of entries");
    return out;
}
}  // namespace detail

// Parses the canonical text form; rejects anything that is not a valid
// decorated tree.
inline DecoratedTree parse_decorated(const std::string& line) {
    const auto semi1 = line.find(';');
    const auto semi2 = line.find(';', semi1 == std::string::npos ? semi1 : semi1 + 1);
    if (semi1 == std::string::npos || semi2 == std::string::npos)
        throw std::invalid_argument("expected 'n;parents;stamps'");
    const int n = std::stoi(line.substr(0, semi1));
    if (n < 1) throw std::invalid_argument("size must be >= 1");
    auto parents = detail::parse_int_list(line.substr(semi1 + 1, semi2 - semi1 - 1), n);
    auto stamps = detail::parse_int_list(line.substr(semi2 + 1), n);
    return DecoratedTree(RootedTree(n, std::move(parents)), Permutation(std::move(stamps)));
}

// Exhaustive enumeration of decorated trees of size n through the pairing
// with (increasing tree, permutation): every non-root label j of an
// increasing tree picks a parent in [j-1], and the decorated tree is
// recovered as (sigma^{-1}(T_inc), sigma). Yields n!(n-1)! items, each
// exactly once, in a fixed deterministic order.
template <class F>
void enumerate_decorated(int n, F&& f, int bound = 6) {
    if (n < 1) throw std::invalid_argument("size must be >= 1");
    if (n > bound) throw std::invalid_argument("enumeration bound exceeded (raise the bound explicitly)");

    // Odometer over parent choices of the increasing tree: inc_parent[j] in [1, j-1].
    std::vector<int> inc_parent(static_cast<std::size_t>(n) + 1, 1);
    std::vector<int> sigma_img(static_cast<std::size_t>(n) + 1);
    for (;;) {
        for (int v = 0; v <= n; ++v) sigma_img[static_cast<std::size_t>(v)] = v;
        do {
            Permutation sigma{std::vector<int>(sigma_img)};
            const Permutation inv = sigma.inverse();
            std::vector<int> parent(static_cast<std::size_t>(n) + 1, 0);
            for (int j = 2; j <= n; ++j) parent[inv.of(j)] = inv.of(inc_parent[j]);
            f(DecoratedTree(RootedTree(n, std::move(parent)), std::move(sigma)));
        } while (std::next_permutation(sigma_img.begin() + 1, sigma_img.end()));

        int j = n;
        while (j >= 2 && inc_parent[j] == j - 1) inc_parent[j--] = 1;
        if (j < 2) break;
        ++inc_parent[j];
    }
}

inline std::uint64_t count_decorated(int n, int bound = 6) {
    std::uint64_t count = 0;
    enumerate_decorated(n, [&](const DecoratedTree&) { ++count; }, bound);
    return count;
}

// n!(n-1)!, the size of the decorated-tree family.
inline std::uint64_t decorated_cardinality(int n) {
    std::uint64_t r = 1;
    for (int i = 2; i <= n; ++i) r *= static_cast<std::uint64_t>(i);
    for (int i = 2; i <= n - 1; ++i) r *= static_cast<std::uint64_t>(i);
    return r;
}

}  // namespace robinhood
