#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

namespace walktrace {

/// Pairwise (cascade) summation: result depends only on element order, and
/// the rounding error grows like O(log n).
[[nodiscard]] inline double pairwise_sum(std::span<const double> xs) noexcept {
    if (xs.size() <= 16) {
        double s = 0.0;
        for (double x : xs) s += x;
        return s;
    }
    const std::size_t half = xs.size() / 2;
    return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

/// Summary of a sample: mean, unbiased variance and standard error of the
/// mean, plus extremes and the fourth central moment (for the error of the
/// variance itself).
struct SampleSummary {
    std::int64_t count = 0;
    double mean = 0.0;
    double variance = 0.0;
    double std_error = 0.0;
    double min = 0.0;
    double max = 0.0;
    double fourth_moment = 0.0;

    /// Standard error of the sample variance (large-sample formula).
    [[nodiscard]] double variance_std_error() const noexcept {
        if (count < 4) return 0.0;
        const double n = static_cast<double>(count);
        const double v = fourth_moment - variance * variance * (n - 3.0) / (n - 1.0);
        return v > 0.0 ? std::sqrt(v / n) : 0.0;
    }
};

[[nodiscard]] inline SampleSummary summarize(std::span<const double> xs) {
    SampleSummary s;
    s.count = static_cast<std::int64_t>(xs.size());
    if (xs.empty()) return s;
    s.mean = pairwise_sum(xs) / static_cast<double>(xs.size());
    std::vector<double> sq(xs.size());
    std::vector<double> q4(xs.size());
    s.min = xs[0];
    s.max = xs[0];
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double dev = xs[i] - s.mean;
        sq[i] = dev * dev;
        q4[i] = sq[i] * sq[i];
        if (xs[i] < s.min) s.min = xs[i];
        if (xs[i] > s.max) s.max = xs[i];
    }
    const double n = static_cast<double>(xs.size());
    s.fourth_moment = pairwise_sum(q4) / n;
    if (xs.size() > 1) {
        s.variance = pairwise_sum(sq) / (n - 1.0);
        s.std_error = std::sqrt(s.variance / n);
    }
    return s;
}

/// Binomial standard error sqrt(p(1-p)/trials).
[[nodiscard]] inline double bernoulli_std_error(double p, std::int64_t trials) noexcept {
    if (trials <= 0) return 0.0;
    return std::sqrt(p * (1.0 - p) / static_cast<double>(trials));
}

}  // namespace walktrace
