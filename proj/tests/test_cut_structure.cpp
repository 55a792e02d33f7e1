#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "walktrace/cut_structure.hpp"
#include "walktrace/stats.hpp"

using namespace walktrace;

namespace {

WalkPath from_dirs(std::vector<int> dirs) { return WalkPath::from_directions(4, dirs); }

}  // namespace

TEST_CASE("straight path: every k < n is a cut time") {
    const WalkPath p = from_dirs(std::vector<int>(10, 0));
    const CutTimeSet c = find_cut_times(p, 10);
    REQUIRE(c.count() == 10);
    for (std::int64_t k = 0; k < 10; ++k) CHECK(c.times[static_cast<std::size_t>(k)] == k);
    const CutTimeSet inc = find_cut_times(p, 10, CutConvention::include_k_eq_n);
    CHECK(inc.count() == 11);
    CHECK(inc.times.back() == 10);
}

TEST_CASE("closed square loop has no cut time") {
    const WalkPath p = from_dirs({0, 2, 1, 3});
    CHECK(find_cut_times(p, 4).count() == 0);
    CHECK(find_cut_times(build_trace(p, 0, 4)).count() == 0);
}

TEST_CASE("linear scan equals the quadratic oracle") {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const std::int64_t n = 50 + static_cast<std::int64_t>(seed * 19 % 1950);
        const WalkPath p = generate_walk(4, n, derive_seed(13, seed));
        const CutTimeSet fast = find_cut_times(p, n);
        CHECK(fast.times == oracle::cut_times(p, n));
        CHECK(find_cut_times(build_trace(p, 0, n)).times == fast.times);
    }
}

TEST_CASE("cut times up to a shorter horizon") {
    const WalkPath p = generate_walk(4, 600, 2);
    CHECK(find_cut_times(p, 300).times == oracle::cut_times(p, 300));
}

TEST_CASE("straight path bridge decomposition") {
    const WalkPath p = from_dirs(std::vector<int>(6, 2));
    const auto segs = bridge_decomposition(p, 6);
    REQUIRE(segs.size() == 6);
    for (const BridgeSegment& s : segs) {
        CHECK(s.distance == 1);
        CHECK(s.resistance == doctest::Approx(1.0));
    }
}

TEST_CASE("no cut times: one segment, the whole trace") {
    const WalkPath p = from_dirs({0, 2, 1, 3, 4});
    const auto segs = bridge_decomposition(p, 4);
    REQUIRE(segs.size() == 1);
    CHECK(segs[0].first == 0);
    CHECK(segs[0].last == 4);
    CHECK(segs[0].distance == 0);
    CHECK(segs[0].resistance == 0.0);
}

TEST_CASE("segment distances and resistances add up") {
    for (std::uint64_t seed = 0; seed < 25; ++seed) {
        const std::int64_t n = 3000;
        const WalkPath p = generate_walk(4, n, derive_seed(31, seed));
        const TraceGraph g = build_trace(p, 0, n);
        const auto segs = bridge_decomposition(p, n);
        std::uint64_t dsum = 0;
        std::vector<double> rs;
        for (const BridgeSegment& s : segs) {
            dsum += s.distance;
            rs.push_back(s.resistance);
        }
        CHECK(dsum == graph_distance(g, g.origin(), g.terminal()));
        if (g.origin() != g.terminal()) {
            const double r = effective_resistance(g, g.origin(), g.terminal()).value;
            CHECK(std::abs(pairwise_sum(rs) - r) <= 1e-6 * r);
        }
        // Cut count sits below R.
        CHECK(static_cast<double>(find_cut_times(p, n).count()) <= pairwise_sum(rs) + 1e-6);
    }
}
