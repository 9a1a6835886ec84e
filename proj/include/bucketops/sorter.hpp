#pragma once

// Instrumented MSD radix sort and trie construction over bit streams.
//
// Counting convention: a partitioning step on k >= 2 keys inspects one bit of
// each key and costs k bucket operations; groups of size <= 1 cost nothing.
// This is the unique convention with B_0 = B_1 = 0 and toll +n per split, and
// it makes bucket_ops equal to the external path length of the trie built
// from the same keys.

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <vector>

#include "bucketops/source.hpp"

namespace bucketops {

struct SortOutcome {
    std::vector<std::size_t> order;  // lexicographic permutation of input indices
    std::uint64_t bucket_ops = 0;
    std::size_t max_depth = 0;       // deepest inspected bit index (1-based)
};

namespace detail {

// Stable in-place partition of order[b,e) by bit `depth`; returns the split
// point. Zero-bucket keys keep their relative order in front, one-bucket keys
// behind, so the final permutation is deterministic.
inline std::size_t partition_by_bit(Dataset& data, std::vector<std::size_t>& order,
                                    std::size_t b, std::size_t e, std::size_t depth,
                                    std::vector<std::size_t>& scratch) {
    scratch.clear();
    std::size_t w = b;
    for (std::size_t i = b; i < e; ++i) {
        const std::size_t idx = order[i];
        if (data.streams[idx].bit(depth) == 0) {
            order[w++] = idx;
        } else {
            scratch.push_back(idx);
        }
    }
    std::copy(scratch.begin(), scratch.end(), order.begin() + w);
    return w;
}

}  // namespace detail

// Recursion is driven by an explicit work stack: skewed sources produce
// group depths far beyond any sane call-stack limit.
inline SortOutcome radix_sort(Dataset& data) {
    SortOutcome out;
    const std::size_t n = data.size();
    out.order.resize(n);
    std::iota(out.order.begin(), out.order.end(), std::size_t{0});
    if (n <= 1) return out;

    struct Range {
        std::size_t begin, end, depth;
    };
    std::vector<Range> work{{0, n, 1}};
    std::vector<std::size_t> scratch;
    scratch.reserve(n);
    while (!work.empty()) {
        const Range r = work.back();
        work.pop_back();
        out.bucket_ops += r.end - r.begin;
        out.max_depth = std::max(out.max_depth, r.depth);
        const std::size_t mid =
            detail::partition_by_bit(data, out.order, r.begin, r.end, r.depth, scratch);
        if (r.end - mid >= 2) work.push_back({mid, r.end, r.depth + 1});
        if (mid - r.begin >= 2) work.push_back({r.begin, mid, r.depth + 1});
    }
    return out;
}

// Trie over the dataset's bit streams. Each node is the set of keys sharing a
// bit prefix I, carrying the count J^I of such keys. A node is external
// (holds exactly one key) iff its count is 1; prefixes matched by no key have
// no node. J^I = J^{I0} + J^{I1} at every internal node, absent child = 0.
struct Trie {
    struct Node {
        std::uint64_t count = 0;
        std::int32_t child0 = -1;
        std::int32_t child1 = -1;
        std::int64_t leaf_index = -1;  // input index, external nodes only
        std::uint32_t depth = 0;
    };

    std::vector<Node> nodes;
    std::int32_t root = -1;  // -1 for the empty dataset
    std::size_t n_keys = 0;
};

inline Trie build_trie(Dataset& data) {
    Trie t;
    const std::size_t n = data.size();
    t.n_keys = n;
    if (n == 0) return t;

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});

    t.nodes.push_back({n, -1, -1, n == 1 ? static_cast<std::int64_t>(order[0]) : -1, 0});
    t.root = 0;
    if (n == 1) return t;

    struct Range {
        std::int32_t node;
        std::size_t begin, end;
    };
    std::vector<Range> work{{0, 0, n}};
    std::vector<std::size_t> scratch;
    scratch.reserve(n);
    while (!work.empty()) {
        const Range r = work.back();
        work.pop_back();
        const std::uint32_t child_depth = t.nodes[r.node].depth + 1;
        const std::size_t mid =
            detail::partition_by_bit(data, order, r.begin, r.end, child_depth, scratch);
        if (mid > r.begin) {
            const std::size_t k = mid - r.begin;
            const auto id = static_cast<std::int32_t>(t.nodes.size());
            t.nodes.push_back({k, -1, -1,
                               k == 1 ? static_cast<std::int64_t>(order[r.begin]) : -1,
                               child_depth});
            t.nodes[r.node].child0 = id;
            if (k >= 2) work.push_back({id, r.begin, mid});
        }
        if (r.end > mid) {
            const std::size_t k = r.end - mid;
            const auto id = static_cast<std::int32_t>(t.nodes.size());
            t.nodes.push_back({k, -1, -1,
                               k == 1 ? static_cast<std::int64_t>(order[mid]) : -1,
                               child_depth});
            t.nodes[r.node].child1 = id;
            if (k >= 2) work.push_back({id, mid, r.end});
        }
    }
    return t;
}

// Sum of external-node depths.
inline std::uint64_t external_path_length(const Trie& t) {
    std::uint64_t total = 0;
    for (const auto& node : t.nodes) {
        if (node.count == 1) total += node.depth;
    }
    return total;
}

// Sum of J^I over all prefixes held by at least two keys (the internal
// nodes, root included). Each key contributes once per proper internal
// ancestor, i.e. its external depth, so the sum equals the external path
// length; callers compare the two as a structural self-check.
inline std::uint64_t prefix_count_identity_check(const Trie& t) {
    std::uint64_t total = 0;
    for (const auto& node : t.nodes) {
        if (node.count >= 2) total += node.count;
    }
    return total;
}

}  // namespace bucketops
