#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstddef>
#include <vector>

#include "bucketops/binomial.hpp"
#include "bucketops/error.hpp"
#include "bucketops/exact.hpp"
#include "bucketops/model.hpp"
#include "bucketops/numeric.hpp"

using namespace bucketops;

namespace {

MarkovModel reference() {
    MarkovModel m;
    m.p00 = 0.7;
    m.p01 = 0.3;
    m.p10 = 0.4;
    m.p11 = 0.6;
    return validate(m);
}

MarkovModel skewed() {
    MarkovModel m;
    m.p00 = 0.15;
    m.p01 = 0.85;
    m.p10 = 0.55;
    m.p11 = 0.45;
    return validate(m);
}

struct BaseCases {
    double nu0, nu1, v0, v1;
};

// At n=2 the recurrences close over four unknowns in two 2x2 linear systems;
// solved here directly from the transition probabilities, independent of the
// DP machinery under test.
BaseCases solve_base_cases(const MarkovModel& m) {
    const double w00 = m.p00 * m.p00, w01 = m.p01 * m.p01;
    const double w10 = m.p10 * m.p10, w11 = m.p11 * m.p11;
    const double det = (1.0 - w00) * (1.0 - w11) - w01 * w10;
    const double nu0 = (2.0 * (1.0 - w11) + 2.0 * w01) / det;
    const double nu1 = (2.0 * w10 + 2.0 * (1.0 - w00)) / det;
    const double c0 = w00 * (4.0 * nu0 + 4.0) + w01 * (4.0 * nu1 + 4.0) + 8.0 * m.p00 * m.p01;
    const double c1 = w10 * (4.0 * nu0 + 4.0) + w11 * (4.0 * nu1 + 4.0) + 8.0 * m.p10 * m.p11;
    const double s0 = (c0 * (1.0 - w11) + w01 * c1) / det;
    const double s1 = (w10 * c0 + c1 * (1.0 - w00)) / det;
    return {nu0, nu1, s0 - nu0 * nu0, s1 - nu1 * nu1};
}

}  // namespace

TEST_CASE("base cases at n=2 match independent linear solves", "[exact]") {
    for (const auto& m : {reference(), skewed()}) {
        const auto want = solve_base_cases(m);
        const auto means = exact_means(m, 8);
        const auto vars = exact_variances(m, 8, means);
        CHECK(relative_error(means.mean0[2], want.nu0) < 1e-12);
        CHECK(relative_error(means.mean1[2], want.nu1) < 1e-12);
        CHECK(relative_error(vars.var0[2], want.v0) < 1e-12);
        CHECK(relative_error(vars.var1[2], want.v1) < 1e-12);
    }
}

TEST_CASE("reference base cases match the spec-level oracles", "[exact]") {
    const auto means = exact_means(reference(), 4);
    const auto vars = exact_variances(reference(), 4, means);
    // 365/78 and 335/78 exactly.
    CHECK(std::fabs(means.mean0[2] - 4.679487179487179) < 1e-12);
    CHECK(std::fabs(means.mean1[2] - 4.294871794871795) < 1e-12);
    CHECK(std::fabs(vars.var0[2] - 12.094838921761999) < 1e-10);
}

TEST_CASE("the mean at n=3 matches a re-derived implicit solve", "[exact]") {
    const auto m = reference();
    const auto means = exact_means(m, 4);
    const auto k0 = pmf_row(3, m.p00);
    const auto k1 = pmf_row(3, m.p10);
    const double known0 = k0.pmf[1] * means.mean1[2] + k0.pmf[2] * means.mean0[2] + 3.0;
    const double known1 = k1.pmf[1] * means.mean1[2] + k1.pmf[2] * means.mean0[2] + 3.0;
    const double det = (1.0 - k0.pmf[3]) * (1.0 - k1.pmf[0]) - k0.pmf[0] * k1.pmf[3];
    const double nu03 = ((1.0 - k1.pmf[0]) * known0 + k0.pmf[0] * known1) / det;
    const double nu13 = (k1.pmf[3] * known0 + (1.0 - k0.pmf[3]) * known1) / det;
    CHECK(relative_error(means.mean0[3], nu03) < 1e-12);
    CHECK(relative_error(means.mean1[3], nu13) < 1e-12);
}

TEST_CASE("a relabel-invariant model has identical state tables", "[exact]") {
    MarkovModel m;  // p00 = p11 means swapping state labels maps the model to itself
    m.p00 = 0.8;
    m.p01 = 0.2;
    m.p10 = 0.2;
    m.p11 = 0.8;
    m.mu0 = 0.5;
    m.mu1 = 0.5;
    const auto means = exact_means(m, 64);
    const auto vars = exact_variances(m, 64, means);
    for (std::size_t n = 0; n <= 64; ++n) {
        CHECK(relative_error(means.mean0[n], means.mean1[n]) < 1e-12);
        CHECK(relative_error(vars.var0[n], vars.var1[n]) < 1e-12);
    }
}

TEST_CASE("means grow strictly and variances stay nonnegative", "[exact]") {
    const auto m = reference();
    const auto means = exact_means(m, 256);
    const auto vars = exact_variances(m, 256, means);
    for (std::size_t n = 2; n < 256; ++n) {
        CHECK(means.mean0[n + 1] > means.mean0[n]);
        CHECK(means.mean1[n + 1] > means.mean1[n]);
        CHECK(vars.var0[n] >= 0.0);
        CHECK(vars.var1[n] >= 0.0);
    }
}

TEST_CASE("the variance DP agrees with the raw second-moment DP", "[exact]") {
    const auto m = skewed();
    const std::size_t N = 512;
    const auto means = exact_means(m, N);
    const auto vars = exact_variances(m, N, means);
    const auto m2 = exact_second_moments(m, N, means);
    for (std::size_t n = 2; n <= N; ++n) {
        const double alt0 = m2.m2_0[n] - means.mean0[n] * means.mean0[n];
        const double alt1 = m2.m2_1[n] - means.mean1[n] * means.mean1[n];
        CHECK(relative_error(vars.var0[n], alt0) < 1e-6);
        CHECK(relative_error(vars.var1[n], alt1) < 1e-6);
    }
}

TEST_CASE("general moments with a point-mass kernel reproduce the state tables",
          "[exact]") {
    const auto m = reference();
    const std::size_t N = 128;
    const auto means = exact_means(m, N);
    const auto vars = exact_variances(m, N, means);
    for (double mu0 : {1.0, 0.0}) {
        const auto g = moments_general(m, mu0, N, means, vars);
        const auto& mean_tab = mu0 == 1.0 ? means.mean0 : means.mean1;
        const auto& var_tab = mu0 == 1.0 ? vars.var0 : vars.var1;
        for (std::size_t n = 2; n <= N; ++n) {
            CHECK(g.mean[n] == mean_tab[n] + static_cast<double>(n));
            CHECK(g.var[n] == var_tab[n]);
        }
    }
}

TEST_CASE("general moments with the transition-row kernel are exact fixed points",
          "[exact]") {
    const auto m = reference();
    const std::size_t N = 512;
    const auto means = exact_means(m, N);
    const auto vars = exact_variances(m, N, means);
    // nu_0 satisfies its own recurrence with kernel B(n, p00): re-evaluating
    // the right-hand side from the stored tables must land on the stored
    // value bit for bit (the tables are polished to true fixed points). The
    // variance map can 2-cycle between adjacent doubles, so variances are
    // held to a couple of ulps instead of bit identity.
    const auto g0 = moments_general(m, m.p00, N, means, vars);
    const auto g1 = moments_general(m, m.p10, N, means, vars);
    for (std::size_t n = 2; n <= N; ++n) {
        CHECK(g0.mean[n] == means.mean0[n]);
        CHECK(g1.mean[n] == means.mean1[n]);
        CHECK(relative_error(g0.var[n], vars.var0[n]) < 5e-16);
        CHECK(relative_error(g1.var[n], vars.var1[n]) < 5e-16);
    }
}

TEST_CASE("error-term increments are consistent with the error terms", "[exact]") {
    const auto m = reference();
    const auto means = exact_means(m, 64);
    const auto e = error_terms(means, constants(m).entropy_rate);
    REQUIRE(e.f0.size() == 65);
    REQUIRE(e.df0.size() == 64);
    for (std::size_t n = 0; n < 64; ++n) {
        CHECK(e.df0[n] == e.f0[n + 1] - e.f0[n]);
        CHECK(e.df1[n] == e.f1[n + 1] - e.f1[n]);
    }
}

TEST_CASE("the difference identity holds with closed-form sequences", "[exact]") {
    std::vector<double> lin(14), quad(14);
    for (std::size_t k = 0; k < 14; ++k) {
        lin[k] = static_cast<double>(k);
        quad[k] = static_cast<double>(k * k);
    }
    const auto r1 = delta_lemma_check(lin, 8, 0.35);
    CHECK(std::fabs(r1.lhs - 0.35) < 1e-14);
    CHECK(std::fabs(r1.rhs - 0.35) < 1e-14);

    const auto r2 = delta_lemma_check(quad, 3, 0.7);
    CHECK(std::fabs(r2.rhs - 3.64) < 1e-13);
    CHECK(std::fabs(r2.lhs - r2.rhs) < 1e-13);

    CHECK_THROWS_AS(delta_lemma_check(lin, 13, 0.5), Error);
}

TEST_CASE("concentration diagnostics match hand values at n=2", "[exact]") {
    const auto rows = concentration_diagnostics(0.5, {2});
    REQUIRE(rows.size() == 1);
    // E[h(X/2)] - h(1/2) with h(x) = x ln x and X ~ B(2, 1/2) is (ln 2)/4.
    CHECK(std::fabs(rows[0].g_e - 0.25 * std::log(2.0)) < 1e-15);
    CHECK(rows[0].g_c >= 0.0);
    CHECK_THROWS_AS(concentration_diagnostics(0.5, {0}), Error);
}
