#include "walktrace/trace_graph.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

#include "walktrace/stats.hpp"

namespace walktrace {

namespace {

constexpr std::uint32_t kUnreached = std::numeric_limits<std::uint32_t>::max();

std::uint64_t edge_key(VertexId a, VertexId b) noexcept {
    return (static_cast<std::uint64_t>(a) << 32) | b;
}

}  // namespace

void TraceGraph::assemble_csr() {
    const std::size_t n = vertex_count();
    std::fill(offsets_.begin(), offsets_.end(), 0u);
    for (const Edge& e : edges_) {
        ++offsets_[e.a + 1];
        ++offsets_[e.b + 1];
    }
    for (std::size_t i = 0; i < n; ++i) offsets_[i + 1] += offsets_[i];
    targets_.assign(2 * edges_.size(), 0);
    std::vector<std::uint32_t> cursor(offsets_.begin(), offsets_.end() - 1);
    for (const Edge& e : edges_) {
        targets_[cursor[e.a]++] = e.b;
        targets_[cursor[e.b]++] = e.a;
    }
}

TraceGraph TraceGraph::from_edges(std::size_t vertex_count, std::span<const Edge> edges, VertexId origin,
                                  VertexId terminal) {
    if (vertex_count == 0) throw ParameterError("graph needs at least one vertex");
    if (origin >= vertex_count || terminal >= vertex_count) throw BoundsError("origin/terminal out of range");
    TraceGraph g;
    g.origin_ = origin;
    g.terminal_ = terminal;
    g.offsets_.assign(vertex_count + 1, 0);
    PointIndex seen(edges.size());
    g.edges_.reserve(edges.size());
    for (Edge e : edges) {
        if (e.a >= vertex_count || e.b >= vertex_count) throw BoundsError("edge endpoint out of range");
        if (e.a == e.b) throw ParameterError("self-loops are not allowed in a trace graph");
        if (e.a > e.b) std::swap(e.a, e.b);
        if (!seen.insert(edge_key(e.a, e.b))) throw ParameterError("duplicate edge");
        g.edges_.push_back(e);
    }
    g.assemble_csr();
    return g;
}

TraceGraph build_trace(const WalkPath& path, std::int64_t m, std::int64_t n) {
    if (m < 0 || m > n || n > path.steps())
        throw BoundsError("trace range [" + std::to_string(m) + ", " + std::to_string(n) + "] outside path of " +
                          std::to_string(path.steps()) + " steps");
    TraceGraph g;
    const auto len = static_cast<std::size_t>(n - m) + 1;
    g.index_.reset(len);
    g.visits_.resize(len);
    VertexId next = 0;
    for (std::size_t i = 0; i < len; ++i) {
        bool inserted = false;
        g.visits_[i] = g.index_.find_or_insert(path.key(static_cast<std::size_t>(m) + i), next, inserted);
        if (inserted) ++next;
    }
    g.origin_ = g.visits_.front();
    g.terminal_ = g.visits_.back();

    PointIndex seen(len);
    g.edges_.reserve(len - 1);
    for (std::size_t i = 0; i + 1 < len; ++i) {
        VertexId a = g.visits_[i];
        VertexId b = g.visits_[i + 1];
        if (a > b) std::swap(a, b);
        if (seen.insert(edge_key(a, b))) g.edges_.push_back({a, b});
    }
    g.offsets_.assign(static_cast<std::size_t>(next) + 1, 0);
    g.assemble_csr();
    return g;
}

std::vector<std::uint32_t> bfs_distances(const TraceGraph& g, VertexId source) {
    g.check_vertex(source);
    std::vector<std::uint32_t> dist(g.vertex_count(), kUnreached);
    std::vector<VertexId> frontier(g.vertex_count());
    std::size_t head = 0;
    std::size_t tail = 0;
    dist[source] = 0;
    frontier[tail++] = source;
    while (head < tail) {
        const VertexId x = frontier[head++];
        for (VertexId y : g.neighbours(x)) {
            if (dist[y] != kUnreached) continue;
            dist[y] = dist[x] + 1;
            frontier[tail++] = y;
        }
    }
    return dist;
}

std::uint32_t graph_distance(const TraceGraph& g, VertexId u, VertexId v) {
    g.check_vertex(u);
    g.check_vertex(v);
    if (u == v) return 0;
    std::vector<std::uint32_t> dist(g.vertex_count(), kUnreached);
    std::vector<VertexId> frontier(g.vertex_count());
    std::size_t head = 0;
    std::size_t tail = 0;
    dist[u] = 0;
    frontier[tail++] = u;
    while (head < tail) {
        const VertexId x = frontier[head++];
        for (VertexId y : g.neighbours(x)) {
            if (dist[y] != kUnreached) continue;
            dist[y] = dist[x] + 1;
            if (y == v) return dist[y];
            frontier[tail++] = y;
        }
    }
    throw InputError("vertices are not connected");
}

namespace {

struct WeightedEdge {
    VertexId a;
    VertexId b;
    double resistance;
};

/// Exact reduction of the (u, v) network: prune dangling trees, then
/// contract degree-2 chains into single resistors between branch vertices.
/// Returns the branch vertices (u and v included) and the chain resistors.
std::pair<std::vector<VertexId>, std::vector<WeightedEdge>> reduce_network(const TraceGraph& g, VertexId u,
                                                                           VertexId v) {
    const std::size_t n = g.vertex_count();
    std::vector<std::uint32_t> degree(n);
    std::vector<char> alive(n, 1);
    std::vector<VertexId> stack;
    for (VertexId x = 0; x < n; ++x) {
        degree[x] = static_cast<std::uint32_t>(g.degree(x));
        if (degree[x] <= 1 && x != u && x != v) stack.push_back(x);
    }
    while (!stack.empty()) {
        const VertexId x = stack.back();
        stack.pop_back();
        if (!alive[x]) continue;
        alive[x] = 0;
        for (VertexId y : g.neighbours(x)) {
            if (!alive[y]) continue;
            if (--degree[y] == 1 && y != u && y != v) stack.push_back(y);
        }
    }

    std::vector<std::uint32_t> branch_index(n, kUnreached);
    std::vector<VertexId> branch;
    for (VertexId x = 0; x < n; ++x) {
        if (alive[x] && (degree[x] != 2 || x == u || x == v)) {
            branch_index[x] = static_cast<std::uint32_t>(branch.size());
            branch.push_back(x);
        }
    }

    std::vector<WeightedEdge> resistors;
    for (VertexId start : branch) {
        for (VertexId first : g.neighbours(start)) {
            if (!alive[first]) continue;
            VertexId prev = start;
            VertexId cur = first;
            double length = 1.0;
            while (branch_index[cur] == kUnreached) {
                VertexId next = prev;
                for (VertexId y : g.neighbours(cur)) {
                    if (alive[y] && y != prev) {
                        next = y;
                        break;
                    }
                }
                prev = cur;
                cur = next;
                length += 1.0;
            }
            // Each chain is found from both ends; keep one copy. Loops back
            // to the same branch vertex carry no current.
            if (branch_index[start] < branch_index[cur])
                resistors.push_back({branch_index[start], branch_index[cur], length});
        }
    }
    return {std::move(branch), std::move(resistors)};
}

}  // namespace

namespace {

ResistanceResult solve_reduced(const TraceGraph& g, VertexId u, VertexId v, double tol) {

    auto [branch, resistors] = reduce_network(g, u, v);
    // Branch indices of u and v.
    const auto bu = static_cast<Eigen::Index>(std::find(branch.begin(), branch.end(), u) - branch.begin());
    const auto bv = static_cast<Eigen::Index>(std::find(branch.begin(), branch.end(), v) - branch.begin());
    const auto size = static_cast<Eigen::Index>(branch.size()) - 1;
    auto grounded = [bv](Eigen::Index x) { return x < bv ? x : x - 1; };

    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(4 * resistors.size());
    for (const WeightedEdge& e : resistors) {
        const double c = 1.0 / e.resistance;
        const auto a = static_cast<Eigen::Index>(e.a);
        const auto b = static_cast<Eigen::Index>(e.b);
        if (a != bv) triplets.emplace_back(grounded(a), grounded(a), c);
        if (b != bv) triplets.emplace_back(grounded(b), grounded(b), c);
        if (a != bv && b != bv) {
            triplets.emplace_back(grounded(a), grounded(b), -c);
            triplets.emplace_back(grounded(b), grounded(a), -c);
        }
    }
    Eigen::SparseMatrix<double> lap(size, size);
    lap.setFromTriplets(triplets.begin(), triplets.end());

    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(size);
    rhs(grounded(bu)) = 1.0;

    ResistanceResult result;
    result.reduced_vertices = branch.size();
    if (size == 1) {
        result.value = 1.0 / lap.coeff(0, 0);
        return result;
    }

    const int cap = static_cast<int>(50.0 * std::sqrt(static_cast<double>(size + 1))) + 1000;
    Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper,
                             Eigen::IncompleteCholesky<double, Eigen::Lower, Eigen::AMDOrdering<int>>>
        cg;
    cg.setTolerance(tol);
    cg.setMaxIterations(cap);
    cg.compute(lap);
    if (cg.info() != Eigen::Success) throw NumericalError("incomplete Cholesky preconditioner failed", 1.0);
    Eigen::VectorXd potential = cg.solve(rhs);
    result.iterations = static_cast<int>(cg.iterations());
    result.residual = (rhs - lap * potential).norm() / rhs.norm();
    if (cg.info() == Eigen::Success && result.residual > tol) {
        // The recursive residual can drift below the true one; restart once.
        potential = cg.solveWithGuess(rhs, potential);
        result.iterations += static_cast<int>(cg.iterations());
        result.residual = (rhs - lap * potential).norm() / rhs.norm();
    }
    if (cg.info() != Eigen::Success || !(result.residual <= tol)) {
        // Sparse direct fallback for the rare badly conditioned block.
        Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>, Eigen::Lower, Eigen::AMDOrdering<int>> direct(lap);
        if (direct.info() == Eigen::Success) {
            Eigen::VectorXd exact = direct.solve(rhs);
            const double residual = (rhs - lap * exact).norm() / rhs.norm();
            if (residual <= tol) {
                potential = std::move(exact);
                result.residual = residual;
            }
        }
        if (!(result.residual <= tol)) throw NumericalError("conjugate gradient did not converge", result.residual);
    }
    result.value = potential(grounded(bu));
    return result;
}

/// Biconnected blocks met by a u-v path, in order from u, as local graphs
/// whose origin and terminal are the block's entry and exit vertices.
std::vector<TraceGraph> blocks_between(const TraceGraph& g, VertexId u, VertexId v) {
    const std::size_t n = g.vertex_count();
    std::vector<std::uint32_t> disc(n, kUnreached);
    std::vector<std::uint32_t> low(n, 0);
    std::vector<VertexId> parent(n, kUnreached);
    std::vector<std::uint32_t> tree_block(n, kUnreached);
    std::vector<std::uint32_t> cursor(n, 0);
    std::vector<Edge> edge_stack;
    std::vector<Edge> block_edges;
    std::vector<std::size_t> block_start{0};
    std::vector<VertexId> frames;

    std::uint32_t timer = 0;
    disc[u] = low[u] = timer++;
    frames.push_back(u);
    while (!frames.empty()) {
        const VertexId x = frames.back();
        const auto nbrs = g.neighbours(x);
        if (cursor[x] < nbrs.size()) {
            const VertexId y = nbrs[cursor[x]++];
            if (disc[y] == kUnreached) {
                parent[y] = x;
                disc[y] = low[y] = timer++;
                edge_stack.push_back({x, y});
                frames.push_back(y);
            } else if (y != parent[x] && disc[y] < disc[x]) {
                edge_stack.push_back({x, y});
                low[x] = std::min(low[x], disc[y]);
            }
            continue;
        }
        frames.pop_back();
        if (x == u) break;
        const VertexId p = parent[x];
        low[p] = std::min(low[p], low[x]);
        if (low[x] >= disc[p]) {
            const auto id = static_cast<std::uint32_t>(block_start.size() - 1);
            while (true) {
                const Edge e = edge_stack.back();
                edge_stack.pop_back();
                block_edges.push_back(e);
                if (parent[e.b] == e.a) tree_block[e.b] = id;
                if (e.a == p && e.b == x) break;
            }
            block_start.push_back(block_edges.size());
        }
    }
    if (disc[v] == kUnreached) throw InputError("vertices are not connected");

    // Tree path v -> u, cut into runs of equal block.
    std::vector<VertexId> path{v};
    for (VertexId x = v; x != u; x = parent[x]) path.push_back(parent[x]);
    std::reverse(path.begin(), path.end());

    std::vector<TraceGraph> blocks;
    std::vector<std::uint32_t> local(n, kUnreached);
    std::size_t i = 0;
    while (i + 1 < path.size()) {
        const std::uint32_t b = tree_block[path[i + 1]];
        std::size_t j = i + 1;
        while (j + 1 < path.size() && tree_block[path[j + 1]] == b) ++j;
        const VertexId entry = path[i];
        const VertexId exit = path[j];
        std::vector<VertexId> members;
        std::vector<Edge> edges;
        for (std::size_t k = block_start[b]; k < block_start[b + 1]; ++k) {
            Edge e = block_edges[k];
            for (VertexId* end : {&e.a, &e.b}) {
                if (local[*end] == kUnreached) {
                    local[*end] = static_cast<std::uint32_t>(members.size());
                    members.push_back(*end);
                }
                *end = local[*end];
            }
            edges.push_back(e);
        }
        blocks.push_back(TraceGraph::from_edges(members.size(), edges, local[entry], local[exit]));
        for (VertexId m : members) local[m] = kUnreached;
        i = j;
    }
    return blocks;
}

}  // namespace

ResistanceResult effective_resistance(const TraceGraph& g, VertexId u, VertexId v, double tol) {
    g.check_vertex(u);
    g.check_vertex(v);
    if (u == v) throw ParameterError("effective resistance needs two distinct vertices");
    if (!(tol > 0.0)) throw ParameterError("tolerance must be positive");

    // Blocks on the u-v path are joined in series at cut vertices.
    ResistanceResult total;
    std::vector<double> parts;
    for (const TraceGraph& block : blocks_between(g, u, v)) {
        if (block.edge_count() == 1) {
            parts.push_back(1.0);
            total.reduced_vertices += 2;
            continue;
        }
        const ResistanceResult r = solve_reduced(block, block.origin(), block.terminal(), tol);
        parts.push_back(r.value);
        total.residual = std::max(total.residual, r.residual);
        total.iterations += r.iterations;
        total.reduced_vertices += r.reduced_vertices;
    }
    total.value = pairwise_sum(parts);
    return total;
}

void write_edge_list(std::ostream& out, const TraceGraph& g) {
    out << "# vertices=" << g.vertex_count() << " edges=" << g.edge_count() << " origin=" << g.origin()
        << " terminal=" << g.terminal() << '\n';
    for (const Edge& e : g.edges()) out << e.a << ' ' << e.b << '\n';
}

TraceGraph read_edge_list(std::istream& in) {
    std::string header;
    if (!std::getline(in, header)) throw InputError("empty edge list");
    std::size_t vertices = 0;
    std::size_t edges = 0;
    VertexId origin = 0;
    VertexId terminal = 0;
    if (std::sscanf(header.c_str(), "# vertices=%zu edges=%zu origin=%u terminal=%u", &vertices, &edges, &origin,
                    &terminal) != 4)
        throw InputError("malformed edge-list header: " + header);
    std::vector<Edge> list;
    list.reserve(edges);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        Edge e{};
        if (!(row >> e.a >> e.b)) throw InputError("malformed edge line: " + line);
        list.push_back(e);
    }
    if (list.size() != edges) throw InputError("edge count does not match header");
    return TraceGraph::from_edges(vertices, list, origin, terminal);
}

}  // namespace walktrace
