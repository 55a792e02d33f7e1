#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "walktrace/lattice_walk.hpp"

namespace walktrace {

/// Closed range of times [first, last] on a path.
struct TimeRange {
    std::int64_t first = 0;
    std::int64_t last = 0;
};

/// True iff the sites of a[ra] and b[rb] meet. The smaller range is hashed.
[[nodiscard]] bool segments_intersect(const WalkPath& a, TimeRange ra, const WalkPath& b, TimeRange rb);

enum class IntersectionKind { long_range_f, three_walk_F };

[[nodiscard]] std::string to_string(IntersectionKind kind);

/// Bernoulli Monte Carlo estimate; std_error = sqrt(mean (1 - mean) / trials).
struct IntersectionEstimate {
    IntersectionKind kind = IntersectionKind::long_range_f;
    std::int64_t n = 0;
    std::int64_t k = 0;
    std::int64_t trials = 0;
    std::uint64_t seed = 0;
    std::int64_t hits = 0;
    double mean = 0.0;
    double std_error = 0.0;
};

/// Leading-order f(n;k) = log(1 + 1/(k^2 + 2k)) / (2 log n).
[[nodiscard]] double long_range_prediction(std::int64_t n, std::int64_t k);
/// Leading-order P(F_n) = (pi^2 / 8) / log n.
[[nodiscard]] double three_walk_prediction(std::int64_t n);

/// Frequency over independent pairs from the origin of
/// S1[0, n] meeting S2[kn, (k+1)n]. Trials run on `workers` threads with
/// per-trial derived seeds; the result does not depend on `workers`.
[[nodiscard]] IntersectionEstimate estimate_f(std::int64_t n, std::int64_t k, std::int64_t trials, std::uint64_t seed,
                                              int workers = 1);

/// Trial count for estimate_f targeting <= 10% relative standard error:
/// max(1e5, ceil(100 / p_pilot)) from a 1e3-trial pilot.
[[nodiscard]] std::int64_t default_f_trials(std::int64_t n, std::int64_t k, std::uint64_t seed, int workers = 1);

/// Frequency of F_n = { S1(0, n] misses S2[0, n] and S3[0, n], and
/// S3(0, n] avoids the origin } for three independent walks from 0.
[[nodiscard]] IntersectionEstimate estimate_F(std::int64_t n, std::int64_t trials, std::uint64_t seed, int workers = 1);

/// Whether one F_n trial with the given per-walk seeds succeeds (exposed for
/// exhaustive checks).
[[nodiscard]] bool three_walk_event(std::int64_t n, std::uint64_t seed1, std::uint64_t seed2, std::uint64_t seed3);

inline constexpr double kIntervalExponent = 13.0 / 12.0;

/// Partition of [0, n] around n/2 into intervals of length
/// a = n (log n)^(-b): left endpoints t_j = floor(n/2 - j a) and right
/// endpoints t'_k = floor(n/2 + k a), j, k = 0..count, where
/// count = floor(N/2) and N = (log n)^b.
struct IntervalScheme {
    std::int64_t n = 0;
    double b = kIntervalExponent;
    double interval_count = 0.0;  // N, not rounded
    double interval_length = 0.0; // a_{n,-b}
    std::int64_t count = 0;       // intervals on each side
    std::vector<std::int64_t> t;        // t[0] = floor(n/2) > t[1] > ...
    std::vector<std::int64_t> t_prime;  // t_prime[0] = floor(n/2) < t_prime[1] < ...

    /// a_{n,r} = n (log n)^r.
    [[nodiscard]] double a(double r) const;
};

/// Throws ParameterError when n (log n)^(-b) < 1 or fewer than one interval
/// fits on each side.
[[nodiscard]] IntervalScheme interval_scheme(std::int64_t n, double b = kIntervalExponent);

/// L = max { j + k : S[t_j, t_{j-1}] meets S[t'_{k-1}, t'_k] }, computed in
/// one pass by recording, per site, the largest left interval index that
/// visits it. Always >= 2 since S(n/2) belongs to I_1 and I'_1.
[[nodiscard]] std::int64_t longest_intersection_L(const WalkPath& path, const IntervalScheme& scheme);

}  // namespace walktrace
