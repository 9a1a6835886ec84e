#pragma once

// Two-state Markov source model and its closed-form asymptotic constants.
//
// Convention used throughout the library: ALL logarithms are natural.
// The entropy rate H, the variance coefficient sigma^2, and the mean
// coefficient 1/H are only consistent with each other in a single base,
// and the formulas below are standard in nats.

#include <cmath>
#include <string>
#include <utility>

#include "bucketops/error.hpp"

namespace bucketops {

// Transition matrix rows (p00,p01), (p10,p11) and initial law (mu0,mu1).
// Raw aggregate; validate() checks the source conditions and renormalizes.
struct MarkovModel {
    double p00 = 0.0;
    double p01 = 0.0;
    double p10 = 0.0;
    double p11 = 0.0;
    double mu0 = 0.5;
    double mu1 = 0.5;
};

struct AsymptoticConstants {
    double pi0 = 0.0;           // stationary probability of state 0
    double pi1 = 0.0;
    double h0 = 0.0;            // entropy of row 0, nats
    double h1 = 0.0;
    double entropy_rate = 0.0;  // H = pi0*h0 + pi1*h1
    double sigma2 = 0.0;        // variance coefficient of the n*ln(n) growth
    double mean_coeff = 0.0;    // 1/H
};

inline constexpr double kRowSumTolerance = 1e-12;

// Checks row sums (tolerance 1e-12), renormalizes exactly via p_i1 := 1 - p_i0
// so downstream binomial kernels see exactly stochastic rows, and enforces the
// source conditions: every p_ij strictly inside (0,1) and at least one
// p_ij != 1/2 (the fully symmetric source is excluded; its variance
// coefficient vanishes).
inline MarkovModel validate(MarkovModel m) {
    auto finite = [](double x) { return std::isfinite(x); };
    if (!finite(m.p00) || !finite(m.p01) || !finite(m.p10) || !finite(m.p11) ||
        !finite(m.mu0) || !finite(m.mu1)) {
        throw MalformedRows("model contains a non-finite entry");
    }
    if (std::fabs(m.p00 + m.p01 - 1.0) > kRowSumTolerance) {
        throw MalformedRows("row 0 sums to " + std::to_string(m.p00 + m.p01));
    }
    if (std::fabs(m.p10 + m.p11 - 1.0) > kRowSumTolerance) {
        throw MalformedRows("row 1 sums to " + std::to_string(m.p10 + m.p11));
    }
    if (std::fabs(m.mu0 + m.mu1 - 1.0) > kRowSumTolerance) {
        throw MalformedRows("initial law sums to " + std::to_string(m.mu0 + m.mu1));
    }
    if (m.mu0 < 0.0 || m.mu0 > 1.0) {
        throw MalformedRows("initial probability outside [0,1]");
    }
    m.p01 = 1.0 - m.p00;
    m.p11 = 1.0 - m.p10;
    m.mu1 = 1.0 - m.mu0;
    for (double p : {m.p00, m.p01, m.p10, m.p11}) {
        if (!(p > 0.0 && p < 1.0)) {
            throw DegenerateTransition("transition probability " + std::to_string(p) +
                                       " not strictly inside (0,1)");
        }
    }
    if (m.p00 == 0.5 && m.p10 == 0.5) {
        throw SymmetricSource("all transition probabilities equal 1/2");
    }
    return m;
}

// pi0 = p10/(p01+p10), pi1 = p01/(p01+p10): the fixed point of the matrix.
inline std::pair<double, double> stationary(const MarkovModel& m) {
    const double s = m.p01 + m.p10;
    return {m.p10 / s, m.p01 / s};
}

struct EntropyRates {
    double h0;
    double h1;
    double entropy_rate;
};

// h_i = -p_i0 ln p_i0 - p_i1 ln p_i1 and H = pi0*h0 + pi1*h1, in nats.
// Usable on unvalidated models for diagnostics (e.g. the symmetric source),
// as long as every p_ij is positive.
inline EntropyRates entropy_rate(const MarkovModel& m) {
    for (double p : {m.p00, m.p01, m.p10, m.p11}) {
        if (!(p > 0.0)) {
            throw NonPositiveProbability("entropy undefined for p = " + std::to_string(p));
        }
    }
    const double h0 = -m.p00 * std::log(m.p00) - m.p01 * std::log(m.p01);
    const double h1 = -m.p10 * std::log(m.p10) - m.p11 * std::log(m.p11);
    const auto [pi0, pi1] = stationary(m);
    return {h0, h1, pi0 * h0 + pi1 * h1};
}

// sigma^2 = pi0 p00 p01 / H^3 * (ln(p00/p01) + (H1-H0)/(p01+p10))^2
//         + pi1 p10 p11 / H^3 * (ln(p10/p11) + (H1-H0)/(p01+p10))^2.
// Strictly positive under the validated source conditions; 0 for the
// excluded all-1/2 source (both parenthesized terms vanish).
inline double sigma_squared(const MarkovModel& m) {
    const auto [pi0, pi1] = stationary(m);
    const auto ent = entropy_rate(m);
    const double H = ent.entropy_rate;
    const double shift = (ent.h1 - ent.h0) / (m.p01 + m.p10);
    const double t0 = std::log(m.p00 / m.p01) + shift;
    const double t1 = std::log(m.p10 / m.p11) + shift;
    const double h3 = H * H * H;
    return pi0 * m.p00 * m.p01 / h3 * t0 * t0 + pi1 * m.p10 * m.p11 / h3 * t1 * t1;
}

inline AsymptoticConstants constants(const MarkovModel& m) {
    AsymptoticConstants c;
    const auto [pi0, pi1] = stationary(m);
    c.pi0 = pi0;
    c.pi1 = pi1;
    const auto ent = entropy_rate(m);
    c.h0 = ent.h0;
    c.h1 = ent.h1;
    c.entropy_rate = ent.entropy_rate;
    c.sigma2 = sigma_squared(m);
    c.mean_coeff = 1.0 / ent.entropy_rate;
    return c;
}

// Leading-order theorem values: n ln n / H and sigma^2 n ln n (0 for n <= 1).
inline double predicted_mean(const AsymptoticConstants& c, std::size_t n) {
    if (n <= 1) return 0.0;
    const double dn = static_cast<double>(n);
    return dn * std::log(dn) * c.mean_coeff;
}

inline double predicted_variance(const AsymptoticConstants& c, std::size_t n) {
    if (n <= 1) return 0.0;
    const double dn = static_cast<double>(n);
    return c.sigma2 * dn * std::log(dn);
}

}  // namespace bucketops
