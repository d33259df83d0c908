#pragma once

#include <stdexcept>
#include <vector>

#include "robinhood/rational.hpp"

namespace robinhood {

// Tail table of a Poisson-binomial sum over suffix windows: given success
// probabilities p_1..p_len, tail(a, r) = P(sum_{i=a}^{len} Ber(p_i) >= r).
// Built by one backward convolution pass, O(len * rmax); exact with
// Num = Rational, floating with Num = double. Tables are immutable after
// construction and safe to share across threads.
template <class Num>
class PBTail {
public:
    // probs[0] is unused; usable positions are 1..len.
    PBTail(std::vector<Num> probs, int rmax)
        : probs_(std::move(probs)), len_(static_cast<int>(probs_.size()) - 1), rmax_(rmax) {
        if (len_ < 0) throw std::invalid_argument("probs must have at least the unused 0 slot");
        if (rmax_ < 0) throw std::invalid_argument("rmax must be >= 0");
        // One extra threshold row so pmf(a, rmax) is available.
        rows_ = rmax_ + 2;
        table_.assign(static_cast<std::size_t>(len_ + 2) * static_cast<std::size_t>(rows_), Num(0));
        at(len_ + 1, 0) = Num(1);
        for (int a = len_; a >= 1; --a) {
            const Num& p = probs_[static_cast<std::size_t>(a)];
            const Num q = Num(1) - p;
            at(a, 0) = Num(1);
            for (int r = 1; r < rows_; ++r) at(a, r) = p * at(a + 1, r - 1) + q * at(a + 1, r);
        }
    }

    int len() const { return len_; }
    int rmax() const { return rmax_; }

    // P(sum_{i=a}^{len} Ber(p_i) >= r) for a in [1, len+1]; r may be any
    // integer (clamped to the trivial values outside the table).
    Num tail(int a, int r) const {
        if (a < 1 || a > len_ + 1) throw std::out_of_range("window start out of range");
        if (r <= 0) return Num(1);
        if (r > len_ - a + 1) return Num(0);
        if (r > rmax_ + 1) throw std::out_of_range("threshold beyond table rmax");
        return table_[index(a, r)];
    }

    // P(sum_{i=a}^{len} Ber(p_i) = r), valid for r <= rmax.
    Num pmf(int a, int r) const {
        if (r < 0) return Num(0);
        if (r > rmax_) throw std::out_of_range("pmf threshold beyond table rmax");
        return tail(a, r) - tail(a, r + 1);
    }

private:
    Num& at(int a, int r) { return table_[index(a, r)]; }
    std::size_t index(int a, int r) const {
        return static_cast<std::size_t>(a) * static_cast<std::size_t>(rows_) + static_cast<std::size_t>(r);
    }

    std::vector<Num> probs_;
    int len_;
    int rmax_;
    int rows_;
    std::vector<Num> table_;
};

// Window builders. Positions are 1-based and the semantic index is recorded
// next to each builder.

// Attachment bits of a recursive tree / H-set coordinates: position i carries
// probability 1/i, i = 1..n-1. With this window, tail(i, m) is
// P(d_{R_n}(i) >= m) and also P(sum_{j >= i} X_j >= m) for an H-set.
template <class Num>
std::vector<Num> attachment_probs(int n) {
    std::vector<Num> p(static_cast<std::size_t>(n), Num(0));
    for (int i = 1; i <= n - 1; ++i) p[static_cast<std::size_t>(i)] = make_frac<Num>(1, i);
    return p;
}

// Selection-set inclusion bits: position j-1 carries probability 2/j for
// j = 2..n, so the full-window sum is |S_n(v)|.
template <class Num>
std::vector<Num> selection_probs(int n) {
    std::vector<Num> p(static_cast<std::size_t>(n), Num(0));
    for (int j = 2; j <= n; ++j) p[static_cast<std::size_t>(j - 1)] = make_frac<Num>(2, j);
    return p;
}

// pb_tail over an explicit probability window: P(sum_{i=a}^{len} Ber(p_i) >= r).
template <class Num>
Num pb_tail(const std::vector<Num>& probs_1_indexed, int a, int r) {
    if (r < 0) throw std::invalid_argument("threshold must be >= 0");
    const int len = static_cast<int>(probs_1_indexed.size()) - 1;
    if (a < 1 || a > len + 1) throw std::out_of_range("window start out of range");
    PBTail<Num> t(probs_1_indexed, std::max(0, r));
    return t.tail(a, r);
}

}  // namespace robinhood
