#pragma once

// Lazy Markov bit streams with counter-based seeding.
//
// Stream j of experiment e under master seed s is seeded by
//     mix(mix(mix(s) ^ e) ^ j)
// where mix is the SplitMix64 output permutation (Steele/Lea/Flood 2014).
// Every stream then advances its own SplitMix64 sequence, so datasets are
// bit-identical for a given (model, n, master_seed, experiment_id) no matter
// how streams are distributed over workers. The generator and the
// uniform-double mapping below are fixed here, deliberately avoiding
// std::<random> distributions whose output is implementation-defined.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "bucketops/error.hpp"
#include "bucketops/model.hpp"

namespace bucketops {

inline constexpr std::uint64_t splitmix64_mix(std::uint64_t x) {
    x ^= x >> 30;
    x *= 0xBF58476D1CE4E5B9ULL;
    x ^= x >> 27;
    x *= 0x94D049BB133111EBULL;
    x ^= x >> 31;
    return x;
}

// SplitMix64: 64-bit counter advanced by the golden-ratio increment, output
// mixed by splitmix64_mix. Tiny state, equidistributed enough for sampling.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ULL;
        return splitmix64_mix(state_);
    }

    // Uniform on [0,1) with 53 random bits: (x >> 11) * 2^-53.
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

private:
    std::uint64_t state_;
};

inline constexpr std::uint64_t stream_seed(std::uint64_t master_seed,
                                           std::uint64_t experiment_id,
                                           std::uint64_t stream_index) {
    return splitmix64_mix(splitmix64_mix(splitmix64_mix(master_seed) ^ experiment_id) ^ stream_index);
}

inline constexpr std::size_t kDefaultDepthCap = 1'000'000;

// One lazily materialized string from the Markov source. bit(k) is 1-based;
// reading bit(k) generates bits up to k exactly once and memoizes them, so
// repeated reads consume no randomness. The paper's strings are infinite;
// the depth cap turns the measure-zero event of an algorithm requesting
// unbounded depth into an explicit error.
class BitStream {
public:
    BitStream(const MarkovModel& model, std::uint64_t seed,
              std::size_t depth_cap = kDefaultDepthCap)
        : p00_(model.p00), p10_(model.p10), mu0_(model.mu0),
          rng_(seed), depth_cap_(depth_cap) {}

    // Fixed prefix instead of a generated stream; reading past the prefix
    // errors out. Used for worked fixtures with known bits.
    static BitStream from_bits(std::string_view bits) {
        BitStream s(bits.size());
        s.prefix_.reserve(bits.size());
        for (char c : bits) s.prefix_.push_back(c == '1' ? 1 : 0);
        return s;
    }

    int bit(std::size_t k) {
        if (k == 0) throw Error("BadBitIndex", "bit indices are 1-based");
        if (k > depth_cap_) {
            throw DepthCapExceeded("bit " + std::to_string(k) + " exceeds depth cap " +
                                   std::to_string(depth_cap_));
        }
        while (prefix_.size() < k) generate_next();
        return prefix_[k - 1];
    }

    std::size_t generated() const noexcept { return prefix_.size(); }
    std::size_t depth_cap() const noexcept { return depth_cap_; }

private:
    explicit BitStream(std::size_t cap)
        : p00_(0.0), p10_(0.0), mu0_(0.0), rng_(0), depth_cap_(cap), fixed_(true) {}

    void generate_next() {
        if (fixed_) {
            throw DepthCapExceeded("fixed-prefix stream exhausted after " +
                                   std::to_string(prefix_.size()) + " bits");
        }
        const double u = rng_.next_double();
        int b;
        if (prefix_.empty()) {
            b = u < mu0_ ? 0 : 1;
        } else {
            const double head = prefix_.back() == 0 ? p00_ : p10_;
            b = u < head ? 0 : 1;
        }
        prefix_.push_back(static_cast<signed char>(b));
    }

    double p00_;
    double p10_;
    double mu0_;
    SplitMix64 rng_;
    std::size_t depth_cap_;
    bool fixed_ = false;
    std::vector<signed char> prefix_;
};

struct Dataset {
    std::vector<BitStream> streams;

    std::size_t size() const noexcept { return streams.size(); }
};

inline Dataset sample_dataset(const MarkovModel& model, std::size_t n,
                              std::uint64_t master_seed, std::uint64_t experiment_id,
                              std::size_t depth_cap = kDefaultDepthCap) {
    Dataset d;
    d.streams.reserve(n);
    for (std::size_t j = 0; j < n; ++j) {
        d.streams.emplace_back(model, stream_seed(master_seed, experiment_id, j), depth_cap);
    }
    return d;
}

}  // namespace bucketops
