#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <sstream>
#include <vector>

#include "oracles.hpp"
#include "walktrace/error.hpp"
#include "walktrace/trace_graph.hpp"

using namespace walktrace;

namespace {

WalkPath straight(int steps) {
    std::vector<int> dirs(static_cast<std::size_t>(steps), 0);
    return WalkPath::from_directions(4, dirs);
}

TraceGraph path_graph(std::size_t edges) {
    std::vector<Edge> list;
    for (VertexId i = 0; i < edges; ++i) list.push_back({i, i + 1});
    return TraceGraph::from_edges(edges + 1, list, 0, static_cast<VertexId>(edges));
}

double relative(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace

TEST_CASE("straight path trace") {
    const TraceGraph g = build_trace(straight(3), 0, 3);
    CHECK(g.vertex_count() == 4);
    CHECK(g.edge_count() == 3);
    CHECK(graph_distance(g, g.origin(), g.terminal()) == 3);
    CHECK(effective_resistance(g, g.origin(), g.terminal()).value == doctest::Approx(3.0));
}

TEST_CASE("back-and-forth collapses to one edge") {
    const std::vector<int> dirs{0, 1, 0, 1, 0, 1};
    const TraceGraph g = build_trace(WalkPath::from_directions(4, dirs), 0, 6);
    CHECK(g.vertex_count() == 2);
    CHECK(g.edge_count() == 1);
}

TEST_CASE("vertex count matches a brute-force point set") {
    const WalkPath p = generate_walk(4, 1000, 7);
    std::set<oracle::Site> sites;
    for (std::int64_t j = 0; j <= 1000; ++j) sites.insert(oracle::site(p, j));
    const TraceGraph g = build_trace(p, 0, 1000);
    CHECK(g.vertex_count() == sites.size());
    CHECK(g.edge_count() <= 1000);
    // Sub-segment.
    std::set<oracle::Site> mid;
    for (std::int64_t j = 200; j <= 700; ++j) mid.insert(oracle::site(p, j));
    const TraceGraph h = build_trace(p, 200, 700);
    CHECK(h.vertex_count() == mid.size());
    CHECK(h.vertex_of(p.key(200)) == h.origin());
    CHECK(h.vertex_of(p.key(700)) == h.terminal());
}

TEST_CASE("build_trace bounds") {
    const WalkPath p = generate_walk(4, 10, 1);
    CHECK_THROWS_AS((void)build_trace(p, 0, 11), BoundsError);
    CHECK_THROWS_AS((void)build_trace(p, 5, 4), BoundsError);
    CHECK_THROWS_AS((void)build_trace(p, -1, 4), BoundsError);
}

TEST_CASE("graph distance against Dijkstra") {
    for (std::uint64_t seed : {11ULL, 12ULL, 13ULL, 14ULL}) {
        const WalkPath p = generate_walk(4, 500, seed);
        const TraceGraph g = build_trace(p, 0, 500);
        CHECK(graph_distance(g, g.origin(), g.terminal()) == oracle::distance(g, g.origin(), g.terminal()));
        CHECK(graph_distance(g, g.terminal(), g.origin()) == graph_distance(g, g.origin(), g.terminal()));
        const auto all = bfs_distances(g, g.origin());
        for (VertexId x = 0; x < g.vertex_count(); x += 37) CHECK(all[x] == oracle::distance(g, g.origin(), x));
    }
}

TEST_CASE("single edge and series-parallel resistances") {
    const TraceGraph edge = path_graph(1);
    CHECK(graph_distance(edge, 0, 1) == 1);
    CHECK(effective_resistance(edge, 0, 1).value == doctest::Approx(1.0));

    const std::vector<Edge> square{{0, 1}, {1, 2}, {2, 3}, {0, 3}};
    const TraceGraph cycle = TraceGraph::from_edges(4, square, 0, 2);
    CHECK(effective_resistance(cycle, 0, 2).value == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(resistance_dense_oracle(cycle, 0, 2) == doctest::Approx(1.0).epsilon(1e-12));

    const TraceGraph line = path_graph(17);
    CHECK(resistance_dense_oracle(line, 0, 17) == doctest::Approx(17.0));
    CHECK(effective_resistance(line, 0, 17).value == doctest::Approx(17.0));

    // Theta graph with branches of length 1 and 2.
    const std::vector<Edge> theta{{0, 1}, {0, 2}, {1, 2}};
    const TraceGraph t = TraceGraph::from_edges(3, theta, 0, 1);
    CHECK(resistance_dense_oracle(t, 0, 1) == doctest::Approx(2.0 / 3.0));
    CHECK(effective_resistance(t, 0, 1).value == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("from_edges validation") {
    const std::vector<Edge> loop{{0, 0}};
    CHECK_THROWS_AS((void)TraceGraph::from_edges(2, loop, 0, 1), ParameterError);
    const std::vector<Edge> dup{{0, 1}, {1, 0}};
    CHECK_THROWS_AS((void)TraceGraph::from_edges(2, dup, 0, 1), ParameterError);
    const std::vector<Edge> far{{0, 5}};
    CHECK_THROWS_AS((void)TraceGraph::from_edges(2, far, 0, 1), BoundsError);
}

TEST_CASE("resistance errors") {
    const TraceGraph g = path_graph(3);
    CHECK_THROWS_AS((void)effective_resistance(g, 1, 1), ParameterError);
    CHECK_THROWS_AS((void)effective_resistance(g, 0, 9), BoundsError);
    CHECK_THROWS_AS((void)effective_resistance(g, 0, 2, 0.0), ParameterError);
}

TEST_CASE("iterative resistance matches the dense oracle on random traces") {
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        const WalkPath p = generate_walk(4, 300, derive_seed(3, seed));
        const TraceGraph g = build_trace(p, 0, 300);
        if (g.origin() == g.terminal() || g.vertex_count() > kDenseOracleLimit) continue;
        const double fast = effective_resistance(g, g.origin(), g.terminal()).value;
        const double dense = resistance_dense_oracle(g, g.origin(), g.terminal());
        CHECK(relative(fast, dense) <= 1e-8);
        // Random interior pair.
        const VertexId a = static_cast<VertexId>(seed % g.vertex_count());
        const VertexId b = static_cast<VertexId>((seed * 7919 + 3) % g.vertex_count());
        if (a != b) CHECK(relative(effective_resistance(g, a, b).value, resistance_dense_oracle(g, a, b)) <= 1e-8);
    }
}

TEST_CASE("resistance on denser random graphs") {
    // Random graphs with many cycles exercise the block split and CG path.
    std::mt19937_64 rng(42);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t n = 60 + static_cast<std::size_t>(rng() % 120);
        std::set<std::pair<VertexId, VertexId>> seen;
        std::vector<Edge> edges;
        for (VertexId i = 1; i < n; ++i) {
            const VertexId j = static_cast<VertexId>(rng() % i);
            seen.insert({j, i});
            edges.push_back({j, i});
        }
        for (std::size_t extra = 0; extra < n / 2; ++extra) {
            VertexId a = static_cast<VertexId>(rng() % n);
            VertexId b = static_cast<VertexId>(rng() % n);
            if (a == b) continue;
            if (a > b) std::swap(a, b);
            if (seen.insert({a, b}).second) edges.push_back({a, b});
        }
        const TraceGraph g = TraceGraph::from_edges(n, edges, 0, static_cast<VertexId>(n - 1));
        const ResistanceResult r = effective_resistance(g, 0, static_cast<VertexId>(n - 1));
        CHECK(r.residual <= 1e-8);
        CHECK(relative(r.value, resistance_dense_oracle(g, 0, static_cast<VertexId>(n - 1))) <= 1e-8);
    }
}

TEST_CASE("long double oracle agrees with double") {
    const WalkPath p = generate_walk(4, 200, 3);
    const TraceGraph g = build_trace(p, 0, 200);
    const double d = resistance_dense_oracle<double>(g, g.origin(), g.terminal());
    const long double ld = resistance_dense_oracle<long double>(g, g.origin(), g.terminal());
    CHECK(relative(d, static_cast<double>(ld)) <= 1e-12);
}

TEST_CASE("sandwich R <= D and symmetry") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const WalkPath p = generate_walk(4, 2000, derive_seed(9, seed));
        const TraceGraph g = build_trace(p, 0, 2000);
        if (g.origin() == g.terminal()) continue;
        const double r = effective_resistance(g, g.origin(), g.terminal()).value;
        const double rr = effective_resistance(g, g.terminal(), g.origin()).value;
        CHECK(relative(r, rr) <= 1e-7);
        CHECK(r <= graph_distance(g, g.origin(), g.terminal()) + 1e-6);
    }
}

TEST_CASE("Rayleigh monotonicity under edge deletion") {
    for (std::uint64_t seed = 0; seed < 15; ++seed) {
        const WalkPath p = generate_walk(4, 150, derive_seed(21, seed));
        const TraceGraph g = build_trace(p, 0, 150);
        if (g.origin() == g.terminal()) continue;
        const double base = resistance_dense_oracle(g, g.origin(), g.terminal());
        const auto edges = g.edges();
        for (std::size_t drop = 0; drop < edges.size(); ++drop) {
            std::vector<Edge> kept(edges.begin(), edges.end());
            kept.erase(kept.begin() + static_cast<std::ptrdiff_t>(drop));
            const TraceGraph h = TraceGraph::from_edges(g.vertex_count(), kept, g.origin(), g.terminal());
            if (oracle::distance(h, h.origin(), h.terminal()) == UINT32_MAX) continue;  // bridge
            const std::vector<std::uint32_t> reach = bfs_distances(h, h.origin());
            if (std::count(reach.begin(), reach.end(), UINT32_MAX) > 0) continue;
            CHECK(resistance_dense_oracle(h, h.origin(), h.terminal()) >= base - 1e-9);
        }
    }
}

TEST_CASE("reversed path gives the same observables") {
    const WalkPath p = generate_walk(4, 800, 5);
    std::vector<LatticePoint> pts;
    for (std::size_t j = p.size(); j-- > 0;) pts.push_back(p.point(j));
    const WalkPath q = WalkPath::from_points(pts);
    const TraceGraph a = build_trace(p, 0, 800);
    const TraceGraph b = build_trace(q, 0, 800);
    CHECK(a.vertex_count() == b.vertex_count());
    CHECK(a.edge_count() == b.edge_count());
    CHECK(graph_distance(a, a.origin(), a.terminal()) == graph_distance(b, b.origin(), b.terminal()));
    if (a.origin() != a.terminal())
        CHECK(relative(effective_resistance(a, a.origin(), a.terminal()).value,
                       effective_resistance(b, b.origin(), b.terminal()).value) <= 1e-7);
}

TEST_CASE("edge list round trip") {
    const WalkPath p = generate_walk(4, 400, 8);
    const TraceGraph g = build_trace(p, 0, 400);
    std::stringstream buf;
    write_edge_list(buf, g);
    std::string header;
    std::getline(std::istringstream(buf.str()), header);
    CHECK(header == "# vertices=" + std::to_string(g.vertex_count()) + " edges=" + std::to_string(g.edge_count()) +
                        " origin=" + std::to_string(g.origin()) + " terminal=" + std::to_string(g.terminal()));
    const TraceGraph h = read_edge_list(buf);
    CHECK(h.vertex_count() == g.vertex_count());
    CHECK(std::equal(h.edges().begin(), h.edges().end(), g.edges().begin(), g.edges().end()));
    std::istringstream bad("# vertices=2 edges=1 origin=0\n0 1\n");
    CHECK_THROWS_AS((void)read_edge_list(bad), InputError);
}

TEST_CASE("dense oracle capacity") {
    CHECK_THROWS_AS((void)resistance_dense_oracle(path_graph(kDenseOracleLimit + 1), 0, 1), CapacityError);
}
