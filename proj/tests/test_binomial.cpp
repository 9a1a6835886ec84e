#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstddef>
#include <vector>

#include "bucketops/binomial.hpp"
#include "bucketops/error.hpp"
#include "bucketops/numeric.hpp"

using namespace bucketops;

namespace {

// Straight long-double lgammal evaluation, independent of the cumulative
// log-factorial table used by the implementation.
double pmf_oracle(std::size_t n, std::size_t j, double p) {
    const long double lj = static_cast<long double>(j);
    const long double ln = static_cast<long double>(n);
    const long double lp = std::log(static_cast<long double>(p));
    const long double lq = std::log1pl(static_cast<long double>(-p));
    const long double v = lgammal(ln + 1.0L) - lgammal(lj + 1.0L) - lgammal(ln - lj + 1.0L) +
                          lj * lp + (ln - lj) * lq;
    return static_cast<double>(expl(v));
}

}  // namespace

TEST_CASE("pmf matches the closed form at n=2", "[binomial]") {
    const auto k = pmf_row(2, 0.7);
    REQUIRE(k.pmf.size() == 3);
    CHECK(std::fabs(k.pmf[0] - 0.09) < 1e-15);
    CHECK(std::fabs(k.pmf[1] - 0.42) < 1e-15);
    CHECK(std::fabs(k.pmf[2] - 0.49) < 1e-15);
}

TEST_CASE("pmf rows are normalized to 1e-12 across sizes and tail-heavy p", "[binomial]") {
    for (std::size_t n : {std::size_t{1}, std::size_t{10}, std::size_t{100},
                          std::size_t{1000}, std::size_t{8192}}) {
        for (double p : {0.01, 0.3, 0.5, 0.7, 0.97}) {
            const auto k = pmf_row(n, p);
            KahanSum sum;
            for (double v : k.pmf) sum.add(v);
            CHECK(std::fabs(sum.value() - 1.0) < 1e-12);
        }
    }
}

TEST_CASE("pmf mode matches an independent log-gamma oracle to 1e-13", "[binomial]") {
    for (std::size_t n : {std::size_t{100}, std::size_t{2048}, std::size_t{8192}}) {
        for (double p : {0.3, 0.7}) {
            const auto k = pmf_row(n, p);
            const auto mode = static_cast<std::size_t>(
                std::min<double>(static_cast<double>(n), (static_cast<double>(n) + 1.0) * p));
            CHECK(relative_error(k.pmf[mode], pmf_oracle(n, mode, p)) < 1e-13);
        }
    }
}

TEST_CASE("pmf mean is n*p", "[binomial]") {
    const std::size_t n = 8192;
    const double p = 0.7;
    const auto k = pmf_row(n, p);
    KahanSum mean;
    for (std::size_t j = 0; j <= n; ++j) mean.add(k.pmf[j] * static_cast<double>(j));
    CHECK(relative_error(mean.value(), static_cast<double>(n) * p) < 1e-10);
}

TEST_CASE("p outside the open unit interval is rejected", "[binomial]") {
    CHECK_THROWS_AS(pmf_row(10, 0.0), InvalidP);
    CHECK_THROWS_AS(pmf_row(10, 1.0), InvalidP);
    CHECK_THROWS_AS(pmf_row(10, -0.1), InvalidP);
    CHECK_THROWS_AS(pmf_row(10, 1.5), InvalidP);
    CHECK_THROWS_AS(pmf_row(10, std::nan("")), InvalidP);
}

TEST_CASE("n=0 yields the point mass", "[binomial]") {
    const auto k = pmf_row(0, 0.3);
    REQUIRE(k.pmf.size() == 1);
    CHECK(k.pmf[0] == 1.0);
}

TEST_CASE("log-factorial table agrees with lgammal", "[binomial]") {
    LogFactorialTable lf(5000);
    for (std::size_t k : {std::size_t{0}, std::size_t{1}, std::size_t{10},
                          std::size_t{100}, std::size_t{5000}}) {
        const long double want = lgammal(static_cast<long double>(k) + 1.0L);
        const long double got = lf[k];
        CHECK(std::fabs(static_cast<double>(got - want)) <=
              1e-17 * std::fabs(static_cast<double>(want)) + 1e-18);
    }
}

TEST_CASE("table reuse and the convenience overload agree", "[binomial]") {
    LogFactorialTable lf(512);
    std::vector<double> row(513);
    pmf_row_into(512, 0.37, lf, row.data());
    const auto k = pmf_row(512, 0.37);
    for (std::size_t j = 0; j <= 512; ++j) CHECK(row[j] == k.pmf[j]);
}
