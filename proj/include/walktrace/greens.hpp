#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "walktrace/lattice_walk.hpp"

namespace walktrace {

/// Truncated Green's function G_lambda(x) = sum_j lambda^j P(S_j = x) of
/// the simple random walk on Z^4, tabulated on the box [-radius, radius]^4.
///
/// The table holds the first `horizon` + 1 terms of the series exactly. The
/// walk cannot leave the box within `horizon` <= `radius` steps, so the only
/// error is the dropped tail, whose total mass over all of Z^4 is
/// lambda^(horizon+1) / (1 - lambda) = `truncation_bound`.
struct GreensTable {
    double lambda = 0.0;
    int radius = 0;
    int d = 4;
    int horizon = 0;
    double truncation_bound = 0.0;
    /// Row-major over the box, first coordinate slowest.
    std::vector<double> values;

    [[nodiscard]] std::size_t side() const noexcept { return 2 * static_cast<std::size_t>(radius) + 1; }
    [[nodiscard]] std::size_t index(const LatticePoint& x) const;
    [[nodiscard]] bool contains(const LatticePoint& x) const noexcept;
    /// G at x; zero outside the box.
    [[nodiscard]] double at(const LatticePoint& x) const;
    [[nodiscard]] double origin_value() const { return at(LatticePoint(4)); }
    /// Sum over the box with pairwise summation.
    [[nodiscard]] double total() const;
    [[nodiscard]] double sum_of_squares() const;
};

/// Default memory ceiling for the DP box (table plus work array).
inline constexpr std::size_t kDefaultGreenMemoryBudget = std::size_t{1} << 30;

/// Relative tail target used to pick the horizon when no radius is given:
/// truncation_bound <= kGreenTailTarget / (1 - lambda).
inline constexpr double kGreenTailTarget = 1e-12;

/// Exact DP for the truncated Green's function: p_j is propagated by the
/// 8-neighbour average on alternating parity sublattices and lambda^j p_j is
/// accumulated for j = 0..horizon, with horizon = radius. Without a radius
/// the smallest horizon meeting kGreenTailTarget is used. Throws
/// ParameterError unless 0 < lambda < 1, CapacityError when the box exceeds
/// `memory_budget` bytes.
[[nodiscard]] GreensTable green_table(double lambda, std::optional<int> radius = std::nullopt,
                                      std::size_t memory_budget = kDefaultGreenMemoryBudget);

/// Binary export: lambda (IEEE-754 double), radius (uint32), d (uint32), then
/// the values as doubles, all little-endian, row-major box order.
void write_green_table(std::ostream& out, const GreensTable& table);
[[nodiscard]] GreensTable read_green_table(std::istream& in);

/// Exact P(S_steps = 0) for the simple random walk on Z^4. The four
/// coordinates split into two planes; each plane's walk is a rotated pair of
/// independent one-dimensional walks, so
///   p_{2m}(0) = sum_k C(2m, 2k) 2^{-2m} q_k q_{m-k},  q_k = (C(2k, k) 4^{-k})^2.
/// Throws CapacityError above kMaxReturnSteps.
[[nodiscard]] double return_probability(std::int64_t steps);

inline constexpr std::int64_t kMaxReturnSteps = std::int64_t{1} << 18;

/// p_s(0) for s = 0..max_steps (odd entries zero).
[[nodiscard]] std::vector<double> return_probabilities(std::int64_t max_steps);

enum class AggregateMethod { series, bessel_integral };

/// A computed value with a bound on its error. For the series the bound
/// covers the omitted tail and is certified; for the integral it is the
/// step-halving difference of the quadrature.
struct SeriesValue {
    double value = 0.0;
    double truncation_bound = 0.0;
    std::int64_t terms = 0;
    AggregateMethod method = AggregateMethod::series;
};

/// Largest number of return-probability terms expected_G_aggregate uses
/// before switching to the integral.
inline constexpr std::int64_t kMaxSeriesSteps = std::int64_t{1} << 15;

/// E over two independent killed walks of
///   G^lambda = sum_{j=0}^{T2} G(S2(j)) + sum_{k=1}^{T3} G(S3(k)),
/// which equals 2 sum_x G(x)^2 - G(0). Summing over the geometric times
/// first, sum_x G(x)^2 = sum_s (s+1) lambda^s p_s(0), so the expectation is
/// the return-probability series sum_s (2s+1) lambda^s p_s(0). The tail is
/// bounded using monotonicity of p_{2m}(0) in m.
///
/// When the tail target 1e-13 needs more than kMaxSeriesSteps terms the
/// same quantity is computed as G_lambda(0) + 2 lambda G'_lambda(0) from the
/// Bessel representation (see GreenEvaluator).
[[nodiscard]] SeriesValue expected_G_aggregate(double lambda);

/// Forces the integral route; used to cross-check the two.
[[nodiscard]] SeriesValue expected_G_aggregate_integral(double lambda);

/// Same expectation from a tabulated Green's function: 2 sum G^2 - G(0).
/// Only as accurate as the table's truncation.
[[nodiscard]] double expected_G_aggregate(const GreensTable& table);

/// Pointwise G_lambda(x) on Z^4 from the Bessel representation
///   G_lambda(x) = int_0^inf e^{-t} prod_i I_{|x_i|}(lambda t / 4) dt,
/// evaluated with the trapezoid rule in log t on exponentially scaled
/// Bessel functions (computed by Miller's backward recurrence). Accurate to
/// roughly 1e-13 relative for any lambda in (0, 1).
class GreenEvaluator {
public:
    explicit GreenEvaluator(double lambda, int max_index = 256, double step = 0.1);

    [[nodiscard]] double lambda() const noexcept { return lambda_; }
    [[nodiscard]] int max_index() const noexcept { return max_index_; }
    /// Throws BoundsError if some |x_i| exceeds max_index().
    [[nodiscard]] double operator()(const LatticePoint& x) const;

private:
    double lambda_;
    int max_index_;
    std::vector<double> weights_;
    /// Scaled Bessel values, node-major: bessel_[node * (max_index + 1) + k].
    std::vector<double> bessel_;
};

/// Exponentially scaled modified Bessel functions e^{-s} I_k(s), k = 0..kmax.
[[nodiscard]] std::vector<double> scaled_bessel_i(double s, int kmax);

/// Monte Carlo mean of G^lambda with its standard error.
struct AggregateMonteCarlo {
    double mean = 0.0;
    double std_error = 0.0;
    std::int64_t trials = 0;
};

/// Direct simulation of G^lambda: killing times and walks drawn from
/// streams derived from `seed`, G evaluated pointwise.
[[nodiscard]] AggregateMonteCarlo estimate_G_aggregate(double lambda, std::int64_t trials, std::uint64_t seed);

}  // namespace walktrace
