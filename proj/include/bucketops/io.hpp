#pragma once

// Model-file parsing, CSV emission, and manifest/summary JSON.
//
// Every numeric CSV field is printed with std::to_chars shortest round-trip
// formatting, so parsing the text back yields the exact double that was
// computed.

#include <charconv>
#include <cstdint>
#include <fstream>
#include <ostream>
#include <string>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "bucketops/error.hpp"
#include "bucketops/exact.hpp"
#include "bucketops/model.hpp"
#include "bucketops/montecarlo.hpp"
#include "bucketops/splitting.hpp"

namespace bucketops {

inline std::string format_double(double x) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
    if (ec != std::errc()) {
        throw Error("FormatFailure", "to_chars failed");
    }
    return std::string(buf, ptr);
}

// Model file: {"transition": [[p00,p01],[p10,p11]], "initial": [mu0,mu1]},
// "initial" optional with default [0.5, 0.5]. Structural problems map to
// MalformedRows; JSON syntax errors propagate from the parser.
inline MarkovModel model_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("transition")) {
        throw MalformedRows("model file needs a \"transition\" matrix");
    }
    const auto& tr = j.at("transition");
    if (!tr.is_array() || tr.size() != 2 || !tr[0].is_array() || !tr[1].is_array() ||
        tr[0].size() != 2 || tr[1].size() != 2) {
        throw MalformedRows("\"transition\" must be a 2x2 matrix");
    }
    MarkovModel m;
    try {
        m.p00 = tr[0][0].get<double>();
        m.p01 = tr[0][1].get<double>();
        m.p10 = tr[1][0].get<double>();
        m.p11 = tr[1][1].get<double>();
        if (j.contains("initial")) {
            const auto& mu = j.at("initial");
            if (!mu.is_array() || mu.size() != 2) {
                throw MalformedRows("\"initial\" must be a length-2 array");
            }
            m.mu0 = mu[0].get<double>();
            m.mu1 = mu[1].get<double>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw MalformedRows(std::string("model file entry not numeric: ") + e.what());
    }
    return m;
}

inline MarkovModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error("FileNotFound", "cannot open model file " + path);
    }
    nlohmann::json j = nlohmann::json::parse(in);
    return model_from_json(j);
}

inline nlohmann::json model_to_json(const MarkovModel& m) {
    return nlohmann::json{
        {"transition", {{m.p00, m.p01}, {m.p10, m.p11}}},
        {"initial", {m.mu0, m.mu1}},
    };
}

// Header: n,mean0,mean1,var0,var1,f0,f1,df0,df1,mean_ratio0,var_ratio0.
// Ratio columns compare against n ln n / H and sigma^2 n ln n; they are 0
// where that denominator vanishes (n <= 1), and df columns are 0 at n = N
// where no increment exists.
inline void write_exact_csv(std::ostream& os, const MomentTable& t,
                            const AsymptoticConstants& c) {
    os << "n,mean0,mean1,var0,var1,f0,f1,df0,df1,mean_ratio0,var_ratio0\n";
    for (std::size_t n = 0; n <= t.N; ++n) {
        const double pm = predicted_mean(c, n);
        const double pv = predicted_variance(c, n);
        os << n << ',' << format_double(t.mean0[n]) << ',' << format_double(t.mean1[n])
           << ',' << format_double(t.var0[n]) << ',' << format_double(t.var1[n]) << ','
           << format_double(t.f0[n]) << ',' << format_double(t.f1[n]) << ','
           << format_double(n < t.N ? t.df0[n] : 0.0) << ','
           << format_double(n < t.N ? t.df1[n] : 0.0) << ','
           << format_double(pm > 0.0 ? t.mean0[n] / pm : 0.0) << ','
           << format_double(pv > 0.0 ? t.var0[n] / pv : 0.0) << '\n';
    }
}

inline void write_split_csv(std::ostream& os, const TollTable& tolls,
                            const SplitMomentTable& split, const MomentTable& b_table) {
    os << "n,eta1_0,eta2_0,eta1_1,eta2_1,meanX0,varX0,meanZ0,varZ0,bracket_ok\n";
    for (std::size_t n = 0; n <= tolls.N; ++n) {
        const bool ok = variance_bracket_check(b_table.var0[n], split.varX0[n], split.varZ0[n]);
        os << n << ',' << format_double(tolls.eta1_0[n]) << ','
           << format_double(tolls.eta2_0[n]) << ',' << format_double(tolls.eta1_1[n])
           << ',' << format_double(tolls.eta2_1[n]) << ','
           << format_double(split.meanX0[n]) << ',' << format_double(split.varX0[n])
           << ',' << format_double(split.meanZ0[n]) << ','
           << format_double(split.varZ0[n]) << ',' << (ok ? 1 : 0) << '\n';
    }
}

inline void write_simulate_csv(std::ostream& os, const std::vector<std::uint64_t>& samples) {
    os << "rep,b\n";
    for (std::size_t r = 0; r < samples.size(); ++r) {
        os << r << ',' << samples[r] << '\n';
    }
}

inline nlohmann::json summary_json(const SampleSummary& s, std::size_t n, std::size_t reps) {
    return nlohmann::json{
        {"n", n},
        {"reps", reps},
        {"mean", s.mean},
        {"var", s.variance},
        {"skewness", s.skewness},
        {"excess_kurtosis", s.excess_kurtosis},
        {"ks", s.ks_distance},
        {"center_source", s.dp_standardized ? "dp" : "sample"},
    };
}

}  // namespace bucketops
