#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "walktrace/lattice_walk.hpp"
#include "walktrace/trace_graph.hpp"

namespace walktrace {

struct TrialOptions {
    bool resistance = true;
    bool halves = true;
    bool interval_statistic = false;
    double tol = kDefaultResistanceTolerance;
};

/// Observables of one walk at horizon n.
struct TrialResult {
    std::int64_t n = 0;
    std::uint64_t seed = 0;
    std::uint32_t distance = 0;       // D_n
    double resistance = 0.0;          // R_n (NaN when not computed)
    std::uint32_t distance_first = 0; // D^1_n over [0, n/2]
    std::uint32_t distance_second = 0;// D^2_n over [n/2, n]
    std::int64_t cut_count = 0;       // cut times, k = n excluded
    std::int64_t interval_L = -1;     // -1 when not computed
    double runtime_ms = 0.0;
    bool ok = true;
    std::string error;

    /// D^1 + D^2 - D_n; nonnegative by the triangle inequality.
    [[nodiscard]] std::int64_t gap() const noexcept {
        return static_cast<std::int64_t>(distance_first) + distance_second - static_cast<std::int64_t>(distance);
    }
};

/// Measures a given path at its full length. Half-distances use the split
/// time floor(n/2).
[[nodiscard]] TrialResult measure_path(const WalkPath& path, const TrialOptions& options = {});

/// One seeded four-dimensional walk of n steps, measured. Deterministic in
/// (n, seed, options). Numerical failures are recorded in the result.
[[nodiscard]] TrialResult run_trial(std::int64_t n, std::uint64_t seed, const TrialOptions& options = {});

/// Per-trial seed: stream `n` of the master seed, then the trial index.
[[nodiscard]] std::uint64_t trial_seed(std::uint64_t master_seed, std::int64_t n, std::int64_t index) noexcept;

/// One Monte Carlo estimate.
struct EstimateRecord {
    std::string quantity;
    std::int64_t n = 0;
    double mean = 0.0;
    double std_error = 0.0;
    std::int64_t trials = 0;
    std::uint64_t seed = 0;
    std::string timestamp;
    double min = 0.0;
    double max = 0.0;
    std::int64_t failures = 0;
};

/// Quantity ids emitted by run_experiment.
namespace quantity {
inline constexpr const char* distance = "D";
inline constexpr const char* resistance = "R";
inline constexpr const char* cut_count = "cut_count";
inline constexpr const char* distance_variance = "var_D";
inline constexpr const char* gap = "gap";
inline constexpr const char* interval_L = "L";
}  // namespace quantity

struct ExperimentPlan {
    std::vector<std::int64_t> grid;
    std::int64_t trials = 1000;
    std::uint64_t master_seed = 1;
    int workers = 1;
    TrialOptions options;
    double max_failure_fraction = 0.01;
    /// Copied verbatim into every record; kept out of the computation so
    /// reruns stay byte-identical.
    std::string timestamp;
};

struct InvariantViolation {
    std::int64_t n = 0;
    std::uint64_t seed = 0;
    std::string what;
};

struct ExperimentResult {
    std::vector<EstimateRecord> records;
    std::map<std::int64_t, std::int64_t> failures;
    std::vector<InvariantViolation> violations;
};

/// Runs `plan.trials` trials at every grid point (in parallel over
/// `plan.workers` threads) and aggregates D, R, cut_count, var_D and gap
/// (plus L when requested) with pairwise summation in trial order, so the
/// output is a pure function of the plan. Failed trials are dropped from
/// the means; more than max_failure_fraction of them raises NumericalError.
[[nodiscard]] ExperimentResult run_experiment(const ExperimentPlan& plan);

/// Runs and returns the raw trial results for one grid point.
[[nodiscard]] std::vector<TrialResult> run_batch(std::int64_t n, const ExperimentPlan& plan);

/// Checks the per-trial sandwich and triangle-gap invariants.
[[nodiscard]] std::optional<std::string> check_trial_invariants(const TrialResult& trial, double slack = 1e-6);

struct PsiPoint {
    std::int64_t n = 0;
    double psi = 0.0;
    double std_error = 0.0;
    std::int64_t trials = 0;
};

/// psi(n) = E(D_n)/n on a dyadic grid, with its resistance analogue.
struct PsiSeries {
    std::vector<PsiPoint> distance;
    std::vector<PsiPoint> resistance;  // empty when R was not recorded
};

/// Builds psi from records. The D grid must be consecutive powers of two;
/// throws InputError naming any missing n.
[[nodiscard]] PsiSeries psi_series(const std::vector<EstimateRecord>& records);

/// Missing powers of two between the smallest and largest n of `quantity`.
[[nodiscard]] std::vector<std::int64_t> missing_grid_points(const std::vector<EstimateRecord>& records,
                                                            const std::string& quantity);

struct DoublingRow {
    std::int64_t n = 0;
    double ratio = 0.0;      // psi(2n)/psi(n)
    double predicted = 0.0;  // 1 - log 2 / (2 log n)
    double deviation = 0.0;  // ratio - predicted
    double std_error = 0.0;
    double z = 0.0;
    bool flagged = false;
};

inline constexpr double kDoublingZThreshold = 4.0;

/// Ratio of consecutive grid points against the first-order prediction.
/// Numerator and denominator come from independent batches, so their
/// relative errors add in quadrature.
[[nodiscard]] std::vector<DoublingRow> doubling_check(const std::vector<PsiPoint>& psi,
                                                      double z_threshold = kDoublingZThreshold);

struct ExtrapolationResidual {
    std::int64_t m = 0;      // n = 2^m
    double h = 0.0;          // log psi(2^m) + log(m) / 2
    double residual = 0.0;   // h - fitted value
};

struct ExtrapolationResult {
    double a_hat = 0.0;      // sqrt(log 2) e^{b_hat}
    double b_hat = 0.0;
    double slope = 0.0;      // coefficient of 1/m in the tail fit
    double b_plain = 0.0;    // plain tail average of h, for comparison
    std::vector<ExtrapolationResidual> residuals;
};

/// Extrapolates psi(n) ~ a (log n)^{-1/2}. With g(m) = log psi(2^m) the
/// sequence h(m) = g(m) + log(m)/2 converges to b; b_hat is the intercept of
/// a least-squares fit h(m) = b + c/m over the upper half of the grid and
/// a_hat = sqrt(log 2) e^{b_hat}. Needs >= 4 grid points; throws InputError
/// on non-positive or increasing psi.
[[nodiscard]] ExtrapolationResult extrapolate_constant(const std::vector<PsiPoint>& psi);

struct GapReport {
    std::int64_t n = 0;
    double gap_mean = 0.0;          // mean of D^1 + D^2 - D_n
    double gap_std_error = 0.0;
    double psi_route = 0.0;         // n (psi(n/2) - psi(n))
    double psi_route_std_error = 0.0;
    double z = 0.0;
    bool agree = false;             // |difference| <= 3 combined std errors
    bool gaps_nonnegative = false;  // smallest recorded gap >= 0
};

/// Compares the direct gap estimate at n with n (psi(n/2) - psi(n)) built
/// from the D means at n/2 and n.
[[nodiscard]] GapReport gap_consistency(const std::vector<EstimateRecord>& records, std::int64_t n);

}  // namespace walktrace
