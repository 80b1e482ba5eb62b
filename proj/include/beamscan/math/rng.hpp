#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

namespace beamscan {

// Seed scrambler; decorrelates consecutive trial seeds before they reach the
// main generator.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

// Deterministic random stream. All samplers are hand-rolled on top of
// mt19937_64 so results are identical across standard libraries and thread
// counts; std::*_distribution is implementation-defined and never used.
class rng {
  public:
    explicit rng(std::uint64_t seed) : gen_(splitmix64(seed)) {}

    std::uint64_t bits() { return gen_(); }

    // Uniform on [0, 1) with 53-bit resolution.
    double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double a, double b) { return a + (b - a) * uniform01(); }

    // Uniform integer in [0, n); multiply-shift bounding (bias < n / 2^64).
    std::uint64_t uniform_int(std::uint64_t n) {
        return static_cast<std::uint64_t>((static_cast<unsigned __int128>(gen_()) * n) >> 64);
    }

    // Unit-mean exponential; log1p keeps precision near u = 0.
    double exponential() { return -std::log1p(-uniform01()); }

    // Poisson: product method below 30, transformed rejection (PTRS) above.
    long poisson(double mean) {
        if (mean < 0.0) throw std::invalid_argument("rng::poisson: mean must be >= 0");
        if (mean == 0.0) return 0;
        if (mean < 30.0) {
            const double limit = std::exp(-mean);
            long k = 0;
            double prod = uniform01();
            while (prod > limit) {
                ++k;
                prod *= uniform01();
            }
            return k;
        }
        const double b = 0.931 + 2.53 * std::sqrt(mean);
        const double a = -0.059 + 0.02483 * b;
        const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
        const double v_r = 0.9277 - 3.6224 / (b - 2.0);
        const double log_mean = std::log(mean);
        for (;;) {
            double u = uniform01() - 0.5;
            double v = uniform01();
            double us = 0.5 - std::fabs(u);
            double kf = std::floor((2.0 * a / us + b) * u + mean + 0.43);
            if (us >= 0.07 && v <= v_r) return static_cast<long>(kf);
            if (kf < 0.0 || (us < 0.013 && v > us)) continue;
            double lhs = std::log(v * inv_alpha / (a / (us * us) + b));
            if (lhs <= kf * log_mean - mean - std::lgamma(kf + 1.0)) return static_cast<long>(kf);
        }
    }

    // Binomial(n, p) by walking the CDF from the mode-0 side; reflection keeps
    // p <= 1/2 so the start probability never underflows for the n used here.
    long binomial(long n, double p) {
        if (n < 0) throw std::invalid_argument("rng::binomial: n must be >= 0");
        if (n == 0 || p <= 0.0) return 0;
        if (p >= 1.0) return n;
        if (p > 0.5) return n - binomial(n, 1.0 - p);
        const double odds = p / (1.0 - p);
        double pmf = std::exp(static_cast<double>(n) * std::log1p(-p));
        double cdf = pmf;
        const double u = uniform01();
        long k = 0;
        while (u > cdf && k < n) {
            pmf *= odds * static_cast<double>(n - k) / static_cast<double>(k + 1);
            cdf += pmf;
            ++k;
        }
        return k;
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(uniform_int(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    // k distinct values from {0, ..., n-1}, written to out[0..k); partial
    // Fisher-Yates over a scratch index table.
    void sample_distinct(int n, int k, int* out, int* scratch) {
        for (int i = 0; i < n; ++i) scratch[i] = i;
        for (int i = 0; i < k; ++i) {
            int j = i + static_cast<int>(uniform_int(static_cast<std::uint64_t>(n - i)));
            std::swap(scratch[i], scratch[j]);
            out[i] = scratch[i];
        }
    }

  private:
    std::mt19937_64 gen_;
};

} // namespace beamscan
