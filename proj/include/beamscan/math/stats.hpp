#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace beamscan {

// Compensated accumulator for alternating or ill-conditioned sums.
class kahan_sum {
  public:
    void add(double x) {
        double y = x - c_;
        double t = s_ + y;
        c_ = (t - s_) - y;
        s_ = t;
    }
    double value() const { return s_; }

  private:
    double s_ = 0.0;
    double c_ = 0.0;
};

struct proportion_estimate {
    double value = 0.0;
    double ci_halfwidth = 0.0; // Wilson 95% half-width
    long count = 0;            // favorable outcomes
    long trials = 0;
};

// Wilson score interval at 95%; well-behaved at the 0/1 boundaries.
inline proportion_estimate wilson_estimate(long count, long trials) {
    proportion_estimate e;
    e.count = count;
    e.trials = trials;
    if (trials <= 0) return e;
    const double z = 1.959963984540054;
    const double n = static_cast<double>(trials);
    const double x = static_cast<double>(count);
    const double z2 = z * z;
    const double denom = n + z2;
    e.value = x / n;
    e.ci_halfwidth = z * std::sqrt(x * (n - x) / n + 0.25 * z2) / denom;
    return e;
}

inline double mean(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    kahan_sum s;
    for (double x : v) s.add(x);
    return s.value() / static_cast<double>(v.size());
}

inline double sample_variance(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean(v);
    kahan_sum s;
    for (double x : v) s.add((x - m) * (x - m));
    return s.value() / static_cast<double>(v.size() - 1);
}

} // namespace beamscan
