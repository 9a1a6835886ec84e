#pragma once

// Exact moment DP for the bucket-operation counts B_n^0, B_n^1, B_n^mu.
//
// The mean recurrence (J binomial B(n, p_i0), all logs natural)
//     nu_i(n) = sum_j pmf(j) [nu_0(j) + nu_1(n-j)] + n,   n >= 2,
// is implicit: the j = n and j = 0 kernel terms carry nu_0(n) and nu_1(n)
// themselves with weights pmf_i(n), pmf_i(0). Each step therefore solves the
// 2x2 linear system coupling nu_0(n) and nu_1(n) (strictly diagonally
// dominant, so always uniquely solvable); the same structure applies to the
// variance and second-moment recurrences.
//
// After the solve, values are polished to a floating-point fixed point of the
// direct kernel-sum evaluation. This makes the single-pass general-mu
// recursion with mu equal to a transition row reproduce the corresponding
// table bit-for-bit, which is a checked consistency contract.

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "bucketops/binomial.hpp"
#include "bucketops/error.hpp"
#include "bucketops/model.hpp"
#include "bucketops/numeric.hpp"

namespace bucketops {

struct MeanTables {
    std::vector<double> mean0, mean1;  // nu_i(n), index n in [0, N]
};

struct VarTables {
    std::vector<double> var0, var1;
};

struct SecondMomentTables {
    std::vector<double> m2_0, m2_1;  // E[(B_n^i)^2]
};

struct GeneralMoments {
    std::vector<double> mean, var;  // nu_mu(n), V_mu(n)
};

struct ErrorTerms {
    std::vector<double> f0, f1;    // f_i(n) = nu_i(n) - n ln n / H, size N+1
    std::vector<double> df0, df1;  // df_i(n) = f_i(n+1) - f_i(n), size N
};

// Full per-model DP bundle used by the CSV writer and the check suite.
struct MomentTable {
    std::size_t N = 0;
    std::vector<double> mean0, mean1, var0, var1, f0, f1, df0, df1;
};

namespace detail {

// sum_j pmf[j] * (a0[j] + a1[n-j]), compensated.
inline double cross_sum(const double* pmf, std::size_t n, const double* a0,
                        const double* a1) {
    KahanSum s;
    for (std::size_t j = 0; j <= n; ++j) {
        s.add(pmf[j] * (a0[j] + a1[n - j]));
    }
    return s.value();
}

// sum_j pmf[j] * (a0[j] + a1[n-j] - mean)^2, compensated. Centering against
// a precomputed mean keeps the variance sums from cancelling catastrophically
// (the uncentered second moment exceeds the variance by orders of magnitude).
inline double cross_centered_second(const double* pmf, std::size_t n, const double* a0,
                                    const double* a1, double mean) {
    KahanSum s;
    for (std::size_t j = 0; j <= n; ++j) {
        const double d = a0[j] + a1[n - j] - mean;
        s.add(pmf[j] * d * d);
    }
    return s.value();
}

// Solves x_i = A_i + w_i0 x_0 + w_i1 x_1 for (x_0, x_1).
struct Implicit2x2 {
    double w00, w01, w10, w11;

    std::pair<double, double> solve(double a0, double a1) const {
        const double det = (1.0 - w00) * (1.0 - w11) - w01 * w10;
        return {((1.0 - w11) * a0 + w01 * a1) / det,
                (w10 * a0 + (1.0 - w00) * a1) / det};
    }
};

inline constexpr int kPolishIterations = 16;

}  // namespace detail

inline MeanTables exact_means(const MarkovModel& m, std::size_t N) {
    MeanTables t;
    t.mean0.assign(N + 1, 0.0);
    t.mean1.assign(N + 1, 0.0);
    if (N < 2) return t;
    LogFactorialTable lf(N);
    std::vector<double> k0(N + 1), k1(N + 1);
    for (std::size_t n = 2; n <= N; ++n) {
        pmf_row_into(n, m.p00, lf, k0.data());
        pmf_row_into(n, m.p10, lf, k1.data());
        const double dn = static_cast<double>(n);
        // Table slots at n are still 0, so the full-range sums are exactly
        // the known parts A_i of the implicit system.
        const double a0 = detail::cross_sum(k0.data(), n, t.mean0.data(), t.mean1.data()) + dn;
        const double a1 = detail::cross_sum(k1.data(), n, t.mean0.data(), t.mean1.data()) + dn;
        const detail::Implicit2x2 sys{k0[n], k0[0], k1[n], k1[0]};
        auto [nu0, nu1] = sys.solve(a0, a1);
        t.mean0[n] = nu0;
        t.mean1[n] = nu1;
        for (int it = 0; it < detail::kPolishIterations; ++it) {
            const double r0 = detail::cross_sum(k0.data(), n, t.mean0.data(), t.mean1.data()) + dn;
            const double r1 = detail::cross_sum(k1.data(), n, t.mean0.data(), t.mean1.data()) + dn;
            if (r0 == t.mean0[n] && r1 == t.mean1[n]) break;
            t.mean0[n] = r0;
            t.mean1[n] = r1;
        }
    }
    return t;
}

namespace detail {

inline double clamp_variance(double v, std::size_t n, const char* table) {
    if (v < -1e-9) {
        throw NegativeVariance(std::string(table) + " variance " + std::to_string(v) +
                               " at n = " + std::to_string(n));
    }
    return v < 0.0 ? 0.0 : v;
}

}  // namespace detail

// Law-of-total-variance DP:
//   V_i(n) = E[V_0(J) + V_1(n-J)] + Var(nu_0(J) + nu_1(n-J)),  J ~ B(n, p_i0),
// with the conditional-variance expectation implicit in V_i(n) exactly like
// the mean step. The Var(.) term is fully determined by the finished mean
// tables.
inline VarTables exact_variances(const MarkovModel& m, std::size_t N,
                                 const MeanTables& means) {
    VarTables t;
    t.var0.assign(N + 1, 0.0);
    t.var1.assign(N + 1, 0.0);
    if (N < 2) return t;
    LogFactorialTable lf(N);
    std::vector<double> k0(N + 1), k1(N + 1);
    for (std::size_t n = 2; n <= N; ++n) {
        pmf_row_into(n, m.p00, lf, k0.data());
        pmf_row_into(n, m.p10, lf, k1.data());
        const double eg0 = detail::cross_sum(k0.data(), n, means.mean0.data(), means.mean1.data());
        const double eg1 = detail::cross_sum(k1.data(), n, means.mean0.data(), means.mean1.data());
        const double vg0 = detail::cross_centered_second(k0.data(), n, means.mean0.data(),
                                                         means.mean1.data(), eg0);
        const double vg1 = detail::cross_centered_second(k1.data(), n, means.mean0.data(),
                                                         means.mean1.data(), eg1);
        const double a0 = detail::cross_sum(k0.data(), n, t.var0.data(), t.var1.data()) + vg0;
        const double a1 = detail::cross_sum(k1.data(), n, t.var0.data(), t.var1.data()) + vg1;
        const detail::Implicit2x2 sys{k0[n], k0[0], k1[n], k1[0]};
        auto [v0, v1] = sys.solve(a0, a1);
        t.var0[n] = v0;
        t.var1[n] = v1;
        for (int it = 0; it < detail::kPolishIterations; ++it) {
            const double r0 = detail::cross_sum(k0.data(), n, t.var0.data(), t.var1.data()) + vg0;
            const double r1 = detail::cross_sum(k1.data(), n, t.var0.data(), t.var1.data()) + vg1;
            if (r0 == t.var0[n] && r1 == t.var1[n]) break;
            t.var0[n] = r0;
            t.var1[n] = r1;
        }
        t.var0[n] = detail::clamp_variance(t.var0[n], n, "var0");
        t.var1[n] = detail::clamp_variance(t.var1[n], n, "var1");
    }
    return t;
}

// Independent cross-check recurrence on raw second moments:
//   E[(B_n^i)^2] = E[ m2_0(J) + m2_1(n-J) + 2 nu_0(J) nu_1(n-J)
//                     + 2n (nu_0(J) + nu_1(n-J)) ] + n^2.
// Used to validate the total-variance DP via V = m2 - nu^2.
inline SecondMomentTables exact_second_moments(const MarkovModel& m, std::size_t N,
                                               const MeanTables& means) {
    SecondMomentTables t;
    t.m2_0.assign(N + 1, 0.0);
    t.m2_1.assign(N + 1, 0.0);
    if (N < 2) return t;
    LogFactorialTable lf(N);
    std::vector<double> k0(N + 1), k1(N + 1);
    const double* nu0 = means.mean0.data();
    const double* nu1 = means.mean1.data();
    for (std::size_t n = 2; n <= N; ++n) {
        pmf_row_into(n, m.p00, lf, k0.data());
        pmf_row_into(n, m.p10, lf, k1.data());
        const double dn = static_cast<double>(n);
        auto known_part = [&](const double* pmf) {
            KahanSum s;
            for (std::size_t j = 0; j <= n; ++j) {
                const double mean_pair = nu0[j] + nu1[n - j];
                // m2 slots at n are still 0, leaving exactly the implicit part out.
                s.add(pmf[j] * (t.m2_0[j] + t.m2_1[n - j] + 2.0 * nu0[j] * nu1[n - j] +
                                2.0 * dn * mean_pair));
            }
            return s.value() + dn * dn;
        };
        const double a0 = known_part(k0.data());
        const double a1 = known_part(k1.data());
        const detail::Implicit2x2 sys{k0[n], k0[0], k1[n], k1[0]};
        auto [s0, s1] = sys.solve(a0, a1);
        t.m2_0[n] = s0;
        t.m2_1[n] = s1;
    }
    return t;
}

// Single pass over the finished B^0/B^1 tables with the B(n, mu0) kernel:
//   nu_mu(n) = E[nu_0(K) + nu_1(n-K)] + n,
//   V_mu(n)  = E[V_0(K) + V_1(n-K)] + Var(nu_0(K) + nu_1(n-K)).
// Not a new fixed point; B^mu never appears on the right-hand side. A
// degenerate mu (point mass) collapses the kernel instead of building a pmf.
inline GeneralMoments moments_general(const MarkovModel& m, double mu0, std::size_t N,
                                      const MeanTables& means, const VarTables& vars) {
    GeneralMoments g;
    g.mean.assign(N + 1, 0.0);
    g.var.assign(N + 1, 0.0);
    if (N < 2) return g;
    if (mu0 == 1.0 || mu0 == 0.0) {
        const auto& mean_tab = mu0 == 1.0 ? means.mean0 : means.mean1;
        const auto& var_tab = mu0 == 1.0 ? vars.var0 : vars.var1;
        for (std::size_t n = 2; n <= N; ++n) {
            g.mean[n] = mean_tab[n] + static_cast<double>(n);
            g.var[n] = var_tab[n];
        }
        return g;
    }
    LogFactorialTable lf(N);
    std::vector<double> k(N + 1);
    for (std::size_t n = 2; n <= N; ++n) {
        pmf_row_into(n, mu0, lf, k.data());
        const double eg = detail::cross_sum(k.data(), n, means.mean0.data(), means.mean1.data());
        g.mean[n] = eg + static_cast<double>(n);
        const double vg = detail::cross_centered_second(k.data(), n, means.mean0.data(),
                                                        means.mean1.data(), eg);
        const double v = detail::cross_sum(k.data(), n, vars.var0.data(), vars.var1.data()) + vg;
        g.var[n] = detail::clamp_variance(v, n, "var_mu");
    }
    return g;
}

inline ErrorTerms error_terms(const MeanTables& means, double H) {
    const std::size_t N = means.mean0.size() - 1;
    ErrorTerms e;
    e.f0.resize(N + 1);
    e.f1.resize(N + 1);
    for (std::size_t n = 0; n <= N; ++n) {
        const double leading = n <= 1 ? 0.0
                                      : static_cast<double>(n) *
                                            std::log(static_cast<double>(n)) / H;
        e.f0[n] = means.mean0[n] - leading;
        e.f1[n] = means.mean1[n] - leading;
    }
    e.df0.resize(N);
    e.df1.resize(N);
    for (std::size_t n = 0; n < N; ++n) {
        e.df0[n] = e.f0[n + 1] - e.f0[n];
        e.df1[n] = e.f1[n + 1] - e.f1[n];
    }
    return e;
}

inline MomentTable moment_table(const MarkovModel& m, const AsymptoticConstants& c,
                                std::size_t N) {
    MomentTable t;
    t.N = N;
    auto means = exact_means(m, N);
    auto vars = exact_variances(m, N, means);
    auto errs = error_terms(means, c.entropy_rate);
    t.mean0 = std::move(means.mean0);
    t.mean1 = std::move(means.mean1);
    t.var0 = std::move(vars.var0);
    t.var1 = std::move(vars.var1);
    t.f0 = std::move(errs.f0);
    t.f1 = std::move(errs.f1);
    t.df0 = std::move(errs.df0);
    t.df1 = std::move(errs.df1);
    return t;
}

struct DeltaCheck {
    double lhs;  // E[a(X_{n+1})] - E[a(X_n)]
    double rhs;  // p * E[a(X_n + 1) - a(X_n)]
};

// The difference-operator identity Delta E[a(X_n)] = p E[Delta a(X_n)] for
// X_n ~ B(n, p); both sides evaluated by exact pmf sums. a must be defined on
// 0..n+1.
inline DeltaCheck delta_lemma_check(const std::vector<double>& a, std::size_t n, double p) {
    if (a.size() < n + 2) {
        throw Error("BadSequenceLength", "sequence must cover 0..n+1");
    }
    LogFactorialTable lf(n + 1);
    std::vector<double> row_n(n + 1), row_n1(n + 2);
    pmf_row_into(n, p, lf, row_n.data());
    pmf_row_into(n + 1, p, lf, row_n1.data());
    KahanSum en, en1, inc;
    for (std::size_t j = 0; j <= n; ++j) {
        en.add(row_n[j] * a[j]);
        inc.add(row_n[j] * (a[j + 1] - a[j]));
    }
    for (std::size_t j = 0; j <= n + 1; ++j) {
        en1.add(row_n1[j] * a[j]);
    }
    return {en1.value() - en.value(), p * inc.value()};
}

struct DiagnosticsRow {
    std::size_t n;
    double g_a;  // E[ln((X+1)/(n+1))] - ln p
    double g_c;  // || h(X/n) - E h(X/n) ||_3, h(x) = x ln x
    double g_e;  // E[h(X/n)] - h(p)
};

// Concentration diagnostics for X ~ B(n, p): the scaled sequences
// |g_a| sqrt(n), g_c sqrt(n), |g_e| n^(2/3) stay bounded as n grows through
// the dyadic range; callers check last-value-vs-earlier-max boundedness.
inline std::vector<DiagnosticsRow> concentration_diagnostics(
    double p, const std::vector<std::size_t>& n_list) {
    std::size_t max_n = 1;
    for (std::size_t n : n_list) max_n = std::max(max_n, n);
    LogFactorialTable lf(max_n);
    std::vector<double> pmf(max_n + 1);
    std::vector<DiagnosticsRow> rows;
    rows.reserve(n_list.size());
    for (std::size_t n : n_list) {
        if (n == 0) throw Error("BadDiagnosticsSize", "diagnostics need n >= 1");
        pmf_row_into(n, p, lf, pmf.data());
        const double dn = static_cast<double>(n);
        KahanSum log_ratio, h_mean;
        for (std::size_t j = 0; j <= n; ++j) {
            log_ratio.add(pmf[j] * std::log((static_cast<double>(j) + 1.0) / (dn + 1.0)));
            h_mean.add(pmf[j] * xlogx(static_cast<double>(j) / dn));
        }
        const double m = h_mean.value();
        KahanSum third;
        for (std::size_t j = 0; j <= n; ++j) {
            const double d = std::fabs(xlogx(static_cast<double>(j) / dn) - m);
            third.add(pmf[j] * d * d * d);
        }
        rows.push_back({n, log_ratio.value() - std::log(p), std::cbrt(third.value()),
                        m - xlogx(p)});
    }
    return rows;
}

}  // namespace bucketops
