#pragma once

#include <cmath>
#include <cstddef>

namespace bucketops {

// Kahan-compensated accumulator. The DP inner sums mix terms spanning many
// orders of magnitude (pmf tails times squared means), where a plain double
// sum loses the small terms entirely.
class KahanSum {
public:
    void add(double x) {
        const double y = x - comp_;
        const double t = sum_ + y;
        comp_ = (t - sum_) - y;
        sum_ = t;
    }

    double value() const noexcept { return sum_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

// x ln x with the 0 ln 0 := 0 convention used by every entropy-like sum here.
inline double xlogx(double x) {
    return x > 0.0 ? x * std::log(x) : 0.0;
}

inline double relative_error(double value, double reference) {
    const double denom = std::fabs(reference);
    return denom > 0.0 ? std::fabs(value - reference) / denom : std::fabs(value);
}

}  // namespace bucketops
