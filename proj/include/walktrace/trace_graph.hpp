#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cstdint>
#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

#include "walktrace/error.hpp"
#include "walktrace/lattice_walk.hpp"
#include "walktrace/point_hash.hpp"

namespace walktrace {

using VertexId = std::uint32_t;

/// Unordered edge stored with a < b.
struct Edge {
    VertexId a;
    VertexId b;
    friend bool operator==(const Edge&, const Edge&) = default;
};

/// Simple undirected graph of the sites visited by a path segment S[m, n].
///
/// Vertex ids are dense and assigned in first-visit order, so the origin
/// S(m) is always vertex 0. Adjacency is stored in CSR form. The graph is
/// immutable after construction.
class TraceGraph {
public:
    TraceGraph() = default;

    /// Graph from an explicit edge list (tests and file input). Rejects
    /// self-loops, duplicate edges and out-of-range ids.
    static TraceGraph from_edges(std::size_t vertex_count, std::span<const Edge> edges, VertexId origin,
                                 VertexId terminal);

    [[nodiscard]] std::size_t vertex_count() const noexcept { return offsets_.empty() ? 0 : offsets_.size() - 1; }
    [[nodiscard]] std::size_t edge_count() const noexcept { return edges_.size(); }
    [[nodiscard]] VertexId origin() const noexcept { return origin_; }
    [[nodiscard]] VertexId terminal() const noexcept { return terminal_; }

    [[nodiscard]] std::span<const VertexId> neighbours(VertexId v) const noexcept {
        return {targets_.data() + offsets_[v], targets_.data() + offsets_[v + 1]};
    }
    [[nodiscard]] std::size_t degree(VertexId v) const noexcept { return offsets_[v + 1] - offsets_[v]; }
    [[nodiscard]] std::span<const Edge> edges() const noexcept { return edges_; }

    /// Vertex id of the site with packed key `key`, or PointIndex::npos.
    [[nodiscard]] VertexId vertex_of(std::uint64_t key) const noexcept { return index_.find(key); }
    /// Vertex visited at time m + i, for traces built from a path.
    [[nodiscard]] std::span<const VertexId> visits() const noexcept { return visits_; }

    void check_vertex(VertexId v) const {
        if (v >= vertex_count()) throw BoundsError("vertex id out of range");
    }

private:
    friend TraceGraph build_trace(const WalkPath& path, std::int64_t m, std::int64_t n);

    void assemble_csr();

    PointIndex index_;
    std::vector<VertexId> visits_;
    std::vector<Edge> edges_;
    std::vector<std::uint32_t> offsets_;
    std::vector<VertexId> targets_;
    VertexId origin_ = 0;
    VertexId terminal_ = 0;
};

/// Trace graph of S[m, n]: distinct sites and distinct unordered
/// consecutive pairs. Throws BoundsError unless 0 <= m <= n <= steps.
[[nodiscard]] TraceGraph build_trace(const WalkPath& path, std::int64_t m, std::int64_t n);

/// Breadth-first shortest-path length between u and v.
[[nodiscard]] std::uint32_t graph_distance(const TraceGraph& g, VertexId u, VertexId v);

/// All BFS distances from `source` (unreachable vertices get UINT32_MAX).
[[nodiscard]] std::vector<std::uint32_t> bfs_distances(const TraceGraph& g, VertexId source);

struct ResistanceResult {
    double value = 0.0;
    /// Relative residual ||b - Ax|| / ||b|| of the final linear solve.
    double residual = 0.0;
    int iterations = 0;
    /// Size of the grounded system after exact network reductions.
    std::size_t reduced_vertices = 0;
};

inline constexpr double kDefaultResistanceTolerance = 1e-8;

/// Effective resistance between u and v with a unit resistor on every edge.
///
/// The biconnected blocks crossed by a u-v path are in series, so R is the
/// sum of per-block resistances between each block's entry and exit cut
/// vertices. Inside a block the network is reduced exactly (dangling trees
/// pruned, degree-2 chains replaced by one resistor of the chain's length)
/// and the reduced Laplacian, grounded at the exit, is solved for unit
/// current with conjugate gradients preconditioned by an incomplete
/// Cholesky factor. `residual` is the largest block residual. Throws
/// NumericalError (carrying the residual) when the iteration cap
/// 50*sqrt(V) + 1000 of a block solve is hit.
[[nodiscard]] ResistanceResult effective_resistance(const TraceGraph& g, VertexId u, VertexId v,
                                                    double tol = kDefaultResistanceTolerance);

inline constexpr std::size_t kDenseOracleLimit = 2000;

/// Weighted graph Laplacian with unit conductances.
template <typename Scalar = double>
[[nodiscard]] Eigen::SparseMatrix<Scalar> laplacian(const TraceGraph& g) {
    const auto n = static_cast<Eigen::Index>(g.vertex_count());
    std::vector<Eigen::Triplet<Scalar>> triplets;
    triplets.reserve(4 * g.edge_count());
    for (const Edge& e : g.edges()) {
        triplets.emplace_back(e.a, e.a, Scalar(1));
        triplets.emplace_back(e.b, e.b, Scalar(1));
        triplets.emplace_back(e.a, e.b, Scalar(-1));
        triplets.emplace_back(e.b, e.a, Scalar(-1));
    }
    Eigen::SparseMatrix<Scalar> lap(n, n);
    lap.setFromTriplets(triplets.begin(), triplets.end());
    return lap;
}

/// Dense reference for effective_resistance: Laplacian grounded at v,
/// Cholesky solve, potential read at u. Throws CapacityError above
/// kDenseOracleLimit vertices.
template <typename Scalar = double>
[[nodiscard]] Scalar resistance_dense_oracle(const TraceGraph& g, VertexId u, VertexId v) {
    g.check_vertex(u);
    g.check_vertex(v);
    if (g.vertex_count() > kDenseOracleLimit) throw CapacityError("graph too large for the dense oracle");
    if (u == v) return Scalar(0);
    using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

    const auto n = static_cast<Eigen::Index>(g.vertex_count());
    auto grounded = [v](VertexId x) { return static_cast<Eigen::Index>(x < v ? x : x - 1); };
    Matrix lap = Matrix::Zero(n - 1, n - 1);
    for (const Edge& e : g.edges()) {
        if (e.a != v) lap(grounded(e.a), grounded(e.a)) += Scalar(1);
        if (e.b != v) lap(grounded(e.b), grounded(e.b)) += Scalar(1);
        if (e.a != v && e.b != v) {
            lap(grounded(e.a), grounded(e.b)) -= Scalar(1);
            lap(grounded(e.b), grounded(e.a)) -= Scalar(1);
        }
    }
    Vector rhs = Vector::Zero(n - 1);
    rhs(grounded(u)) = Scalar(1);
    const Vector potential = lap.llt().solve(rhs);
    return potential(grounded(u));
}

/// Edge-list dump: header "# vertices=V edges=E origin=o terminal=t" then
/// one "u v" pair per line.
void write_edge_list(std::ostream& out, const TraceGraph& g);
[[nodiscard]] TraceGraph read_edge_list(std::istream& in);

}  // namespace walktrace
