#include "walktrace/intersections.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <thread>

#include "walktrace/error.hpp"
#include "walktrace/point_hash.hpp"
#include "walktrace/stats.hpp"

namespace walktrace {

bool segments_intersect(const WalkPath& a, TimeRange ra, const WalkPath& b, TimeRange rb) {
    auto check = [](const WalkPath& p, TimeRange r) {
        if (r.first < 0 || r.first > r.last || r.last > p.steps()) throw BoundsError("time range outside path");
    };
    check(a, ra);
    check(b, rb);
    if (a.dimension() != b.dimension()) throw ParameterError("paths of different dimension");
    const WalkPath* small = &a;
    const WalkPath* large = &b;
    TimeRange rs = ra;
    TimeRange rl = rb;
    if (rb.last - rb.first < ra.last - ra.first) {
        std::swap(small, large);
        std::swap(rs, rl);
    }
    PointIndex sites(static_cast<std::size_t>(rs.last - rs.first) + 1);
    for (std::int64_t j = rs.first; j <= rs.last; ++j) sites.insert(small->key(static_cast<std::size_t>(j)));
    for (std::int64_t j = rl.first; j <= rl.last; ++j)
        if (sites.contains(large->key(static_cast<std::size_t>(j)))) return true;
    return false;
}

std::string to_string(IntersectionKind kind) {
    switch (kind) {
        case IntersectionKind::long_range_f: return "f";
        case IntersectionKind::three_walk_F: return "F";
    }
    return "?";
}

double long_range_prediction(std::int64_t n, std::int64_t k) {
    const double kk = static_cast<double>(k);
    return std::log1p(1.0 / (kk * kk + 2.0 * kk)) / (2.0 * std::log(static_cast<double>(n)));
}

double three_walk_prediction(std::int64_t n) {
    return std::numbers::pi * std::numbers::pi / 8.0 / std::log(static_cast<double>(n));
}

namespace {

/// Runs `trial(index, scratch)` for every index on `workers` threads and
/// counts successes. Each index owns its seed, so the count is independent
/// of the split.
template <typename Trial>
std::int64_t count_hits(std::int64_t trials, int workers, Trial trial) {
    workers = std::max(1, std::min<int>(workers, static_cast<int>(std::min<std::int64_t>(trials, 1024))));
    std::vector<std::int64_t> hits(static_cast<std::size_t>(workers), 0);
    auto run = [&](int w) {
        PointIndex scratch;
        std::int64_t local = 0;
        for (std::int64_t t = w; t < trials; t += workers) local += trial(t, scratch) ? 1 : 0;
        hits[static_cast<std::size_t>(w)] = local;
    };
    if (workers == 1) {
        run(0);
    } else {
        std::vector<std::jthread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(run, w);
    }
    std::int64_t total = 0;
    for (auto h : hits) total += h;
    return total;
}

IntersectionEstimate make_estimate(IntersectionKind kind, std::int64_t n, std::int64_t k, std::int64_t trials,
                                   std::uint64_t seed, std::int64_t hits) {
    IntersectionEstimate e;
    e.kind = kind;
    e.n = n;
    e.k = k;
    e.trials = trials;
    e.seed = seed;
    e.hits = hits;
    e.mean = static_cast<double>(hits) / static_cast<double>(trials);
    e.std_error = bernoulli_std_error(e.mean, trials);
    return e;
}

bool long_range_trial(std::int64_t n, std::int64_t k, std::uint64_t trial_seed, PointIndex& sites) {
    sites.reset(static_cast<std::size_t>(n) + 1);
    Walker s1(4, derive_seed(trial_seed, 1));
    sites.insert(s1.key());
    for (std::int64_t j = 0; j < n; ++j) sites.insert(s1.step());
    Walker s2(4, derive_seed(trial_seed, 2));
    for (std::int64_t j = 0; j < k * n; ++j) s2.step();
    if (sites.contains(s2.key())) return true;
    for (std::int64_t j = 0; j < n; ++j)
        if (sites.contains(s2.step())) return true;
    return false;
}

bool three_walk_trial(std::int64_t n, std::uint64_t seed1, std::uint64_t seed2, std::uint64_t seed3,
                      PointIndex& sites) {
    // Sites of S1(0, n]; S2 and S3 are then walked lazily with early exit.
    sites.reset(static_cast<std::size_t>(n));
    Walker s1(4, seed1);
    const std::uint64_t origin = s1.key();
    for (std::int64_t j = 0; j < n; ++j) {
        const std::uint64_t key = s1.step();
        if (key == origin) return false;  // S2(0) = 0 is hit
        sites.insert(key);
    }
    Walker s3(4, seed3);
    for (std::int64_t j = 0; j < n; ++j) {
        const std::uint64_t key = s3.step();
        if (key == origin || sites.contains(key)) return false;
    }
    Walker s2(4, seed2);
    for (std::int64_t j = 0; j < n; ++j)
        if (sites.contains(s2.step())) return false;
    return true;
}

}  // namespace

IntersectionEstimate estimate_f(std::int64_t n, std::int64_t k, std::int64_t trials, std::uint64_t seed,
                                int workers) {
    if (k < 1) throw ParameterError("k must be at least 1");
    if (n < 2) throw ParameterError("n must be at least 2");
    if (trials < 1) throw ParameterError("trials must be positive");
    const std::int64_t hits = count_hits(trials, workers, [&](std::int64_t t, PointIndex& scratch) {
        return long_range_trial(n, k, derive_seed(seed, static_cast<std::uint64_t>(t)), scratch);
    });
    return make_estimate(IntersectionKind::long_range_f, n, k, trials, seed, hits);
}

std::int64_t default_f_trials(std::int64_t n, std::int64_t k, std::uint64_t seed, int workers) {
    constexpr std::int64_t pilot_trials = 1000;
    const IntersectionEstimate pilot = estimate_f(n, k, pilot_trials, derive_seed(seed, 0x70696C6F74ULL), workers);
    const double p = std::max(pilot.mean, 1.0 / static_cast<double>(pilot_trials));
    return std::max<std::int64_t>(100000, static_cast<std::int64_t>(std::ceil(100.0 / p)));
}

bool three_walk_event(std::int64_t n, std::uint64_t seed1, std::uint64_t seed2, std::uint64_t seed3) {
    PointIndex sites;
    return three_walk_trial(n, seed1, seed2, seed3, sites);
}

IntersectionEstimate estimate_F(std::int64_t n, std::int64_t trials, std::uint64_t seed, int workers) {
    if (n < 1) throw ParameterError("n must be at least 1");
    if (trials < 1) throw ParameterError("trials must be positive");
    const std::int64_t hits = count_hits(trials, workers, [&](std::int64_t t, PointIndex& scratch) {
        const std::uint64_t s = derive_seed(seed, static_cast<std::uint64_t>(t));
        return three_walk_trial(n, derive_seed(s, 1), derive_seed(s, 2), derive_seed(s, 3), scratch);
    });
    return make_estimate(IntersectionKind::three_walk_F, n, 0, trials, seed, hits);
}

double IntervalScheme::a(double r) const {
    const double nn = static_cast<double>(n);
    return nn * std::pow(std::log(nn), r);
}

IntervalScheme interval_scheme(std::int64_t n, double b) {
    if (n < 3) throw ParameterError("interval scheme needs n >= 3");
    IntervalScheme s;
    s.n = n;
    s.b = b;
    s.interval_count = std::pow(std::log(static_cast<double>(n)), b);
    s.interval_length = s.a(-b);
    if (s.interval_length < 1.0) throw ParameterError("n too small: interval length n (log n)^-b below one step");
    s.count = static_cast<std::int64_t>(std::floor(s.interval_count / 2.0));
    if (s.count < 1) throw ParameterError("n too small: fewer than two intervals");
    const double mid = static_cast<double>(n) / 2.0;
    s.t.resize(static_cast<std::size_t>(s.count) + 1);
    s.t_prime.resize(static_cast<std::size_t>(s.count) + 1);
    for (std::int64_t j = 0; j <= s.count; ++j) {
        const double off = static_cast<double>(j) * s.interval_length;
        s.t[static_cast<std::size_t>(j)] = std::max<std::int64_t>(0, static_cast<std::int64_t>(std::floor(mid - off)));
        s.t_prime[static_cast<std::size_t>(j)] =
            std::min<std::int64_t>(n, static_cast<std::int64_t>(std::floor(mid + off)));
    }
    return s;
}

std::int64_t longest_intersection_L(const WalkPath& path, const IntervalScheme& scheme) {
    if (path.steps() < scheme.n) throw BoundsError("path shorter than the interval scheme horizon");
    const auto& t = scheme.t;
    const auto& tp = scheme.t_prime;
    const std::int64_t lo = t.back();
    const std::int64_t mid = t.front();

    // Largest left index per site. Shared endpoints t_j belong to I_j and
    // I_{j+1}; assigning in increasing j keeps the larger one.
    PointIndex index(static_cast<std::size_t>(mid - lo) + 1);
    std::vector<std::int64_t> best_left;
    best_left.reserve(static_cast<std::size_t>(mid - lo) + 1);
    for (std::int64_t j = 1; j <= scheme.count; ++j) {
        for (std::int64_t time = t[static_cast<std::size_t>(j)]; time <= t[static_cast<std::size_t>(j - 1)]; ++time) {
            bool inserted = false;
            const auto id = index.find_or_insert(path.key(static_cast<std::size_t>(time)),
                                                 static_cast<std::uint32_t>(best_left.size()), inserted);
            if (inserted) best_left.push_back(j);
            else best_left[id] = std::max(best_left[id], j);
        }
    }

    std::int64_t longest = 0;
    for (std::int64_t k = 1; k <= scheme.count; ++k) {
        for (std::int64_t time = tp[static_cast<std::size_t>(k - 1)]; time <= tp[static_cast<std::size_t>(k)]; ++time) {
            const auto id = index.find(path.key(static_cast<std::size_t>(time)));
            if (id != PointIndex::npos) longest = std::max(longest, best_left[id] + k);
        }
    }
    return longest;
}

}  // namespace walktrace
