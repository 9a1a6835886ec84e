#pragma once

// Monte Carlo verification: parallel simulation of bucket-operation counts,
// standardization, a Kolmogorov-Smirnov distance to the standard normal, and
// the Poisson-thinning independence check.
//
// Samplers are pinned algorithms, not std::<random> distributions (whose
// output is implementation-defined): standard normal via Box-Muller,
// Poisson via Knuth's product inversion for lambda <= 30 and Hörmann's PTRS
// transformed rejection (1993) above. The normal CDF uses std::erfc, whose
// error is far below the 1e-7 this module needs.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "bucketops/error.hpp"
#include "bucketops/model.hpp"
#include "bucketops/numeric.hpp"
#include "bucketops/sorter.hpp"
#include "bucketops/source.hpp"

namespace bucketops {

inline double normal_cdf(double x) {
    return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

inline double sample_standard_normal(SplitMix64& rng) {
    const double u1 = 1.0 - rng.next_double();  // (0,1], keeps the log finite
    const double u2 = rng.next_double();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

namespace detail {

inline std::uint64_t poisson_inversion(SplitMix64& rng, double lambda) {
    const double limit = std::exp(-lambda);
    std::uint64_t k = 0;
    double prod = rng.next_double();
    while (prod > limit) {
        ++k;
        prod *= rng.next_double();
    }
    return k;
}

// Hörmann's PTRS: transformed rejection with squeeze, valid for lambda >= 10.
inline std::uint64_t poisson_ptrs(SplitMix64& rng, double lambda) {
    const double log_lambda = std::log(lambda);
    const double b = 0.931 + 2.53 * std::sqrt(lambda);
    const double a = -0.059 + 0.02483 * b;
    const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    const double v_r = 0.9277 - 3.6224 / (b - 2.0);
    for (;;) {
        const double u = rng.next_double() - 0.5;
        double v = rng.next_double();
        const double us = 0.5 - std::fabs(u);
        const double kf = std::floor((2.0 * a / us + b) * u + lambda + 0.43);
        if (us >= 0.07 && v <= v_r) {
            return static_cast<std::uint64_t>(kf);
        }
        if (kf < 0.0 || (us < 0.013 && v > us)) {
            continue;
        }
        if (std::log(v * inv_alpha / (a / (us * us) + b)) <=
            kf * log_lambda - lambda - std::lgamma(kf + 1.0)) {
            return static_cast<std::uint64_t>(kf);
        }
    }
}

}  // namespace detail

inline std::uint64_t sample_poisson(SplitMix64& rng, double lambda) {
    return lambda <= 30.0 ? detail::poisson_inversion(rng, lambda)
                          : detail::poisson_ptrs(rng, lambda);
}

// y_r = (b_r - center) / scale.
inline std::vector<double> standardize(const std::vector<double>& samples, double center,
                                       double scale) {
    if (!(scale > 0.0)) {
        throw ZeroScale("standardization scale must be positive, got " +
                        std::to_string(scale));
    }
    std::vector<double> out;
    out.reserve(samples.size());
    for (double b : samples) out.push_back((b - center) / scale);
    return out;
}

// sup_x |F_emp(x) - Phi(x)|, evaluated on both sides of every jump of the
// empirical CDF.
inline double ks_statistic(const std::vector<double>& standardized) {
    if (standardized.empty()) {
        throw Error("EmptySample", "KS distance needs at least one sample");
    }
    std::vector<double> y = standardized;
    std::sort(y.begin(), y.end());
    const double count = static_cast<double>(y.size());
    double d = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double phi = normal_cdf(y[i]);
        d = std::max(d, phi - static_cast<double>(i) / count);
        d = std::max(d, static_cast<double>(i + 1) / count - phi);
    }
    return std::min(d, 1.0);
}

struct SimulationConfig {
    MarkovModel model;
    std::size_t n = 0;
    std::size_t reps = 1;
    std::uint64_t master_seed = 0x5EED;
    unsigned workers = 1;  // 0 picks hardware concurrency
    std::size_t depth_cap = kDefaultDepthCap;
};

struct SampleSummary {
    std::vector<std::uint64_t> samples;  // indexed by replicate
    double mean = 0.0;
    double variance = 0.0;  // unbiased
    double skewness = 0.0;
    double excess_kurtosis = 0.0;
    double ks_distance = 0.0;
    double center = 0.0;
    double scale = 1.0;
    bool dp_standardized = false;  // center/scale from the exact DP vs sample moments
};

// Exact DP mean/variance for standardization, when the caller has them.
struct DpMoments {
    double mean;
    double variance;
};

namespace detail {

inline void summarize(SampleSummary& s, std::optional<DpMoments> dp) {
    // Sorted copy so every statistic is independent of replicate order.
    std::vector<double> x(s.samples.begin(), s.samples.end());
    std::sort(x.begin(), x.end());
    const double count = static_cast<double>(x.size());
    KahanSum sum;
    for (double v : x) sum.add(v);
    s.mean = sum.value() / count;
    KahanSum m2, m3, m4;
    for (double v : x) {
        const double d = v - s.mean;
        m2.add(d * d);
        m3.add(d * d * d);
        m4.add(d * d * d * d);
    }
    s.variance = x.size() > 1 ? m2.value() / (count - 1.0) : 0.0;
    const double pop_var = m2.value() / count;
    if (pop_var > 0.0) {
        s.skewness = m3.value() / count / std::pow(pop_var, 1.5);
        s.excess_kurtosis = m4.value() / count / (pop_var * pop_var) - 3.0;
    }
    if (dp.has_value()) {
        s.dp_standardized = true;
        s.center = dp->mean;
        s.scale = std::sqrt(dp->variance);
    } else {
        s.center = s.mean;
        s.scale = std::sqrt(s.variance);
    }
    // Degenerate runs (n <= 1 has zero variance) standardize with unit scale;
    // the public standardize() still rejects scale <= 0.
    const double scale = s.scale > 0.0 ? s.scale : 1.0;
    std::vector<double> y;
    y.reserve(x.size());
    for (double v : x) y.push_back((v - s.center) / scale);
    s.ks_distance = ks_statistic(y);
}

}  // namespace detail

// Replicate r sorts the dataset seeded by (master_seed, experiment_id = r),
// so values are reproducible per replicate and the result is identical for
// any worker count or schedule.
inline SampleSummary simulate(const SimulationConfig& config,
                              std::optional<DpMoments> dp = std::nullopt) {
    SampleSummary s;
    s.samples.assign(config.reps, 0);
    unsigned workers = config.workers != 0
                           ? config.workers
                           : std::max(1u, std::thread::hardware_concurrency());
    workers = static_cast<unsigned>(
        std::min<std::size_t>(workers, std::max<std::size_t>(config.reps, 1)));

    std::mutex error_mutex;
    std::optional<std::string> first_error;
    std::atomic<std::size_t> next{0};
    constexpr std::size_t kChunk = 16;
    auto run = [&] {
        for (;;) {
            const std::size_t begin = next.fetch_add(kChunk);
            if (begin >= config.reps) return;
            const std::size_t end = std::min(config.reps, begin + kChunk);
            for (std::size_t r = begin; r < end; ++r) {
                try {
                    Dataset data = sample_dataset(config.model, config.n, config.master_seed,
                                                  r, config.depth_cap);
                    s.samples[r] = radix_sort(data).bucket_ops;
                } catch (const Error& e) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) {
                        first_error = "replicate " + std::to_string(r) + ": " + e.what();
                    }
                    return;
                }
            }
        }
    };
    if (workers <= 1) {
        run();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (unsigned t = 0; t < workers; ++t) pool.emplace_back(run);
        for (auto& t : pool) t.join();
    }
    if (first_error) {
        throw DepthCapExceeded(*first_error);
    }
    detail::summarize(s, dp);
    return s;
}

struct ThinningReport {
    std::size_t reps = 0;
    double mean_a = 0.0, var_a = 0.0;
    double mean_b = 0.0, var_b = 0.0;
    double corr = 0.0;
    bool means_match_variances = false;  // |mean - var| / mean <= 0.05, both parts
    bool uncorrelated = false;           // |corr| <= 3/sqrt(reps) + 0.01
};

// Thins N ~ Poisson(lambda) into A | N ~ B(N, p) and B = N - A; the parts
// must look Poisson(lambda p), Poisson(lambda (1-p)) and independent.
inline ThinningReport poisson_thinning_check(double lambda, double p, std::size_t reps,
                                             std::uint64_t seed) {
    SplitMix64 rng(splitmix64_mix(seed));
    std::vector<double> a(reps), b(reps);
    for (std::size_t r = 0; r < reps; ++r) {
        const std::uint64_t n = sample_poisson(rng, lambda);
        std::uint64_t kept = 0;
        for (std::uint64_t i = 0; i < n; ++i) {
            if (rng.next_double() < p) ++kept;
        }
        a[r] = static_cast<double>(kept);
        b[r] = static_cast<double>(n - kept);
    }
    auto mean_of = [&](const std::vector<double>& v) {
        KahanSum s;
        for (double x : v) s.add(x);
        return s.value() / static_cast<double>(reps);
    };
    ThinningReport rep;
    rep.reps = reps;
    rep.mean_a = mean_of(a);
    rep.mean_b = mean_of(b);
    KahanSum va, vb, cov;
    for (std::size_t r = 0; r < reps; ++r) {
        const double da = a[r] - rep.mean_a;
        const double db = b[r] - rep.mean_b;
        va.add(da * da);
        vb.add(db * db);
        cov.add(da * db);
    }
    const double denom = static_cast<double>(reps) - 1.0;
    rep.var_a = va.value() / denom;
    rep.var_b = vb.value() / denom;
    rep.corr = cov.value() / denom / std::sqrt(rep.var_a * rep.var_b);
    rep.means_match_variances =
        std::fabs(rep.mean_a - rep.var_a) / rep.mean_a <= 0.05 &&
        std::fabs(rep.mean_b - rep.var_b) / rep.mean_b <= 0.05;
    rep.uncorrelated =
        std::fabs(rep.corr) <= 3.0 / std::sqrt(static_cast<double>(reps)) + 0.01;
    return rep;
}

}  // namespace bucketops
