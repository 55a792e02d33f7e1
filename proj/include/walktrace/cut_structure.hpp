#pragma once

#include <cstdint>
#include <vector>

#include "walktrace/lattice_walk.hpp"
#include "walktrace/trace_graph.hpp"

namespace walktrace {

/// Whether the vacuous cut time k = n is counted.
enum class CutConvention { exclude_k_eq_n, include_k_eq_n };

/// Times k in [0, n] with S[0, k] and S[k+1, n] disjoint, sorted.
struct CutTimeSet {
    std::vector<std::int64_t> times;
    std::int64_t n = 0;
    CutConvention convention = CutConvention::exclude_k_eq_n;

    [[nodiscard]] std::size_t count() const noexcept { return times.size(); }
};

/// Linear-time cut-time scan: k is a cut time iff every site visited up to
/// time k has its last visit (within [0, n]) no later than k.
[[nodiscard]] CutTimeSet find_cut_times(const WalkPath& path, std::int64_t n,
                                        CutConvention convention = CutConvention::exclude_k_eq_n);

/// Same scan on the visit sequence of an already built trace G_{0,n}.
[[nodiscard]] CutTimeSet find_cut_times(const TraceGraph& trace,
                                        CutConvention convention = CutConvention::exclude_k_eq_n);

/// One piece of the series decomposition. The segment covers times
/// [first, last]; its distance and resistance are measured in G_{first,last}
/// between S(first) and S(last). Consecutive segments share their boundary
/// time, and every boundary after the first is the far end of a cut edge.
struct BridgeSegment {
    std::int64_t first = 0;
    std::int64_t last = 0;
    std::uint32_t distance = 0;
    double resistance = 0.0;
};

/// Splits S[0, n] at its cut times (exclude_k_eq_n): boundaries are 0, the
/// cut times, and n. Because S[0, k] and S[k+1, n] share no site for a cut
/// time k, the edge {S(k), S(k+1)} is the only edge across, so distances
/// and resistances of the segments add up to D_n and R_n.
[[nodiscard]] std::vector<BridgeSegment> bridge_decomposition(const WalkPath& path, std::int64_t n,
                                                              double tol = kDefaultResistanceTolerance);

}  // namespace walktrace
