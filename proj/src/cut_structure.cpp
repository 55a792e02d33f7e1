#include "walktrace/cut_structure.hpp"

#include <algorithm>

#include "walktrace/error.hpp"

namespace walktrace {

CutTimeSet find_cut_times(const TraceGraph& trace, CutConvention convention) {
    const auto visits = trace.visits();
    if (visits.empty()) throw InputError("cut-time scan needs a trace built from a path");
    const auto n = static_cast<std::int64_t>(visits.size()) - 1;

    std::vector<std::int64_t> last_visit(trace.vertex_count(), 0);
    for (std::int64_t j = 0; j <= n; ++j) last_visit[visits[static_cast<std::size_t>(j)]] = j;

    CutTimeSet cuts;
    cuts.n = n;
    cuts.convention = convention;
    std::int64_t reach = 0;
    for (std::int64_t k = 0; k <= n; ++k) {
        reach = std::max(reach, last_visit[visits[static_cast<std::size_t>(k)]]);
        if (reach <= k) cuts.times.push_back(k);
    }
    if (convention == CutConvention::exclude_k_eq_n) cuts.times.pop_back();  // k = n always qualifies
    return cuts;
}

CutTimeSet find_cut_times(const WalkPath& path, std::int64_t n, CutConvention convention) {
    if (n < 0 || n > path.steps()) throw BoundsError("cut-time horizon outside path");
    return find_cut_times(build_trace(path, 0, n), convention);
}

std::vector<BridgeSegment> bridge_decomposition(const WalkPath& path, std::int64_t n, double tol) {
    if (n < 1) throw ParameterError("bridge decomposition needs n >= 1");
    const CutTimeSet cuts = find_cut_times(path, n, CutConvention::exclude_k_eq_n);

    std::vector<std::int64_t> bounds;
    bounds.reserve(cuts.count() + 2);
    bounds.push_back(0);
    for (std::int64_t k : cuts.times) {
        // Segment [.., k] then the cut edge starts the next one at k.
        if (k != bounds.back()) bounds.push_back(k);
    }
    if (bounds.back() != n) bounds.push_back(n);

    std::vector<BridgeSegment> segments;
    segments.reserve(bounds.size() - 1);
    for (std::size_t i = 0; i + 1 < bounds.size(); ++i) {
        BridgeSegment seg;
        seg.first = bounds[i];
        seg.last = bounds[i + 1];
        const TraceGraph g = build_trace(path, seg.first, seg.last);
        seg.distance = graph_distance(g, g.origin(), g.terminal());
        if (g.origin() == g.terminal()) {
            seg.resistance = 0.0;
        } else if (g.edge_count() + 1 == g.vertex_count()) {
            // A tree: the unique path is the only current path.
            seg.resistance = seg.distance;
        } else {
            seg.resistance = effective_resistance(g, g.origin(), g.terminal(), tol).value;
        }
        segments.push_back(seg);
    }
    return segments;
}

}  // namespace walktrace
