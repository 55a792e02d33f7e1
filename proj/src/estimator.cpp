#include "walktrace/estimator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <thread>

#include "walktrace/cut_structure.hpp"
#include "walktrace/error.hpp"
#include "walktrace/intersections.hpp"
#include "walktrace/stats.hpp"

namespace walktrace {

TrialResult measure_path(const WalkPath& path, const TrialOptions& options) {
    const auto start = std::chrono::steady_clock::now();
    TrialResult r;
    r.n = path.steps();
    r.seed = path.seed();
    r.resistance = std::numeric_limits<double>::quiet_NaN();
    const std::int64_t n = r.n;

    const TraceGraph g = build_trace(path, 0, n);
    r.distance = graph_distance(g, g.origin(), g.terminal());
    r.cut_count = static_cast<std::int64_t>(find_cut_times(g, CutConvention::exclude_k_eq_n).count());
    if (options.resistance) {
        r.resistance = (g.origin() == g.terminal())
                           ? 0.0
                           : effective_resistance(g, g.origin(), g.terminal(), options.tol).value;
    }
    if (options.halves) {
        const std::int64_t half = n / 2;
        const TraceGraph first = build_trace(path, 0, half);
        r.distance_first = graph_distance(first, first.origin(), first.terminal());
        const TraceGraph second = build_trace(path, half, n);
        r.distance_second = graph_distance(second, second.origin(), second.terminal());
    }
    if (options.interval_statistic) r.interval_L = longest_intersection_L(path, interval_scheme(n));
    r.runtime_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    return r;
}

TrialResult run_trial(std::int64_t n, std::uint64_t seed, const TrialOptions& options) {
    if (n < 2) throw ParameterError("trial horizon must be at least 2");
    const WalkPath path = generate_walk(kDefaultDimension, n, seed);
    try {
        return measure_path(path, options);
    } catch (const NumericalError& e) {
        TrialResult r;
        r.n = n;
        r.seed = seed;
        r.ok = false;
        r.error = e.what();
        return r;
    }
}

std::uint64_t trial_seed(std::uint64_t master_seed, std::int64_t n, std::int64_t index) noexcept {
    return derive_seed(derive_seed(master_seed, static_cast<std::uint64_t>(n)), static_cast<std::uint64_t>(index));
}

std::optional<std::string> check_trial_invariants(const TrialResult& t, double slack) {
    if (!t.ok) return std::nullopt;
    std::ostringstream why;
    const auto cuts = static_cast<double>(t.cut_count);
    const auto dist = static_cast<double>(t.distance);
    if (!std::isnan(t.resistance)) {
        if (cuts > t.resistance + slack) why << "cut_count " << t.cut_count << " > R " << t.resistance << "; ";
        if (t.resistance > dist + slack) why << "R " << t.resistance << " > D " << t.distance << "; ";
    } else if (cuts > dist) {
        why << "cut_count " << t.cut_count << " > D " << t.distance << "; ";
    }
    if (dist > static_cast<double>(t.n)) why << "D " << t.distance << " > n; ";
    if (t.gap() < 0) why << "negative gap " << t.gap() << "; ";
    const std::string s = why.str();
    if (s.empty()) return std::nullopt;
    return s;
}

std::vector<TrialResult> run_batch(std::int64_t n, const ExperimentPlan& plan) {
    if (plan.trials < 1) throw ParameterError("trials must be positive");
    std::vector<TrialResult> results(static_cast<std::size_t>(plan.trials));
    const int workers = std::max(1, std::min<int>(plan.workers, static_cast<int>(std::min<std::int64_t>(plan.trials, 256))));
    auto run = [&](int w) {
        for (std::int64_t t = w; t < plan.trials; t += workers)
            results[static_cast<std::size_t>(t)] = run_trial(n, trial_seed(plan.master_seed, n, t), plan.options);
    };
    if (workers == 1) {
        run(0);
    } else {
        std::vector<std::jthread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(run, w);
    }
    return results;
}

namespace {

EstimateRecord make_record(const std::string& quantity, std::int64_t n, const ExperimentPlan& plan,
                           const SampleSummary& s, std::int64_t failures) {
    EstimateRecord r;
    r.quantity = quantity;
    r.n = n;
    r.mean = s.mean;
    r.std_error = s.std_error;
    r.trials = s.count;
    r.seed = plan.master_seed;
    r.timestamp = plan.timestamp;
    r.min = s.min;
    r.max = s.max;
    r.failures = failures;
    return r;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentPlan& plan) {
    if (plan.grid.empty()) throw ParameterError("experiment grid is empty");
    if (plan.trials < 2) throw ParameterError("experiment needs at least two trials per grid point");
    ExperimentResult out;
    for (std::int64_t n : plan.grid) {
        const std::vector<TrialResult> trials = run_batch(n, plan);
        std::vector<double> dist;
        std::vector<double> res;
        std::vector<double> cuts;
        std::vector<double> gaps;
        std::vector<double> longest;
        std::int64_t failures = 0;
        for (const TrialResult& t : trials) {
            if (!t.ok) {
                ++failures;
                continue;
            }
            if (auto why = check_trial_invariants(t)) out.violations.push_back({n, t.seed, *why});
            dist.push_back(t.distance);
            if (plan.options.resistance) res.push_back(t.resistance);
            cuts.push_back(static_cast<double>(t.cut_count));
            if (plan.options.halves) gaps.push_back(static_cast<double>(t.gap()));
            if (plan.options.interval_statistic) longest.push_back(static_cast<double>(t.interval_L));
        }
        out.failures[n] = failures;
        if (static_cast<double>(failures) > plan.max_failure_fraction * static_cast<double>(plan.trials)) {
            std::ostringstream msg;
            msg << failures << " of " << plan.trials << " trials failed at n=" << n;
            throw NumericalError(msg.str(), static_cast<double>(failures) / static_cast<double>(plan.trials));
        }

        const SampleSummary sd = summarize(dist);
        out.records.push_back(make_record(quantity::distance, n, plan, sd, failures));
        if (plan.options.resistance) out.records.push_back(make_record(quantity::resistance, n, plan, summarize(res), failures));
        out.records.push_back(make_record(quantity::cut_count, n, plan, summarize(cuts), failures));
        EstimateRecord var = make_record(quantity::distance_variance, n, plan, sd, failures);
        var.mean = sd.variance;
        var.std_error = sd.variance_std_error();
        var.min = var.max = sd.variance;
        out.records.push_back(var);
        if (plan.options.halves) out.records.push_back(make_record(quantity::gap, n, plan, summarize(gaps), failures));
        if (plan.options.interval_statistic)
            out.records.push_back(make_record(quantity::interval_L, n, plan, summarize(longest), failures));
    }
    return out;
}

namespace {

bool is_power_of_two(std::int64_t n) { return n > 0 && (n & (n - 1)) == 0; }

int log2_exact(std::int64_t n) {
    int m = 0;
    while ((std::int64_t{1} << m) < n) ++m;
    return m;
}

std::vector<PsiPoint> collect_psi(const std::vector<EstimateRecord>& records, const std::string& quantity) {
    std::map<std::int64_t, PsiPoint> by_n;
    for (const EstimateRecord& r : records) {
        if (r.quantity != quantity) continue;
        if (!is_power_of_two(r.n)) throw InputError("grid point " + std::to_string(r.n) + " is not a power of two");
        const double n = static_cast<double>(r.n);
        by_n[r.n] = {r.n, r.mean / n, r.std_error / n, r.trials};
    }
    std::vector<PsiPoint> out;
    for (auto& [n, p] : by_n) out.push_back(p);
    return out;
}

}  // namespace

std::vector<std::int64_t> missing_grid_points(const std::vector<EstimateRecord>& records, const std::string& quantity) {
    std::vector<std::int64_t> present;
    for (const EstimateRecord& r : records)
        if (r.quantity == quantity && is_power_of_two(r.n)) present.push_back(r.n);
    std::vector<std::int64_t> missing;
    if (present.empty()) return missing;
    const auto [lo, hi] = std::minmax_element(present.begin(), present.end());
    for (std::int64_t n = *lo; n <= *hi; n *= 2)
        if (std::find(present.begin(), present.end(), n) == present.end()) missing.push_back(n);
    return missing;
}

PsiSeries psi_series(const std::vector<EstimateRecord>& records) {
    PsiSeries s;
    s.distance = collect_psi(records, quantity::distance);
    if (s.distance.empty()) throw InputError("no distance records");
    if (auto missing = missing_grid_points(records, quantity::distance); !missing.empty()) {
        std::string list;
        for (auto n : missing) list += (list.empty() ? "" : ",") + std::to_string(n);
        throw InputError("incomplete dyadic grid; missing n=" + list);
    }
    s.resistance = collect_psi(records, quantity::resistance);
    return s;
}

std::vector<DoublingRow> doubling_check(const std::vector<PsiPoint>& psi, double z_threshold) {
    std::vector<DoublingRow> rows;
    for (std::size_t i = 0; i + 1 < psi.size(); ++i) {
        const PsiPoint& lo = psi[i];
        const PsiPoint& hi = psi[i + 1];
        if (hi.n != 2 * lo.n) continue;
        DoublingRow row;
        row.n = lo.n;
        row.ratio = hi.psi / lo.psi;
        row.predicted = 1.0 - std::log(2.0) / (2.0 * std::log(static_cast<double>(lo.n)));
        row.deviation = row.ratio - row.predicted;
        const double rel_lo = lo.std_error / lo.psi;
        const double rel_hi = hi.std_error / hi.psi;
        row.std_error = std::abs(row.ratio) * std::sqrt(rel_lo * rel_lo + rel_hi * rel_hi);
        if (row.std_error > 0.0) row.z = row.deviation / row.std_error;
        else row.z = (row.deviation == 0.0) ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), row.deviation);
        row.flagged = std::abs(row.z) > z_threshold;
        rows.push_back(row);
    }
    return rows;
}

ExtrapolationResult extrapolate_constant(const std::vector<PsiPoint>& psi) {
    if (psi.size() < 4) throw InputError("extrapolation needs at least four grid points");
    std::vector<double> ms;
    std::vector<double> hs;
    for (std::size_t i = 0; i < psi.size(); ++i) {
        const PsiPoint& p = psi[i];
        if (!is_power_of_two(p.n) || p.n < 2) throw InputError("extrapolation grid must be powers of two >= 2");
        if (!(p.psi > 0.0)) throw InputError("psi must be positive");
        if (i > 0 && p.psi > psi[i - 1].psi) throw InputError("psi must be non-increasing along the grid");
        const double m = log2_exact(p.n);
        ms.push_back(m);
        hs.push_back(std::log(p.psi) + 0.5 * std::log(m));
    }
    // Tail: the upper half of the grid.
    const std::size_t first = ms.size() / 2;
    const std::size_t count = ms.size() - first;
    std::vector<double> xs;
    std::vector<double> ys;
    for (std::size_t i = first; i < ms.size(); ++i) {
        xs.push_back(1.0 / ms[i]);
        ys.push_back(hs[i]);
    }
    const double cnt = static_cast<double>(count);
    const double mean_x = pairwise_sum(xs) / cnt;
    const double mean_y = pairwise_sum(ys) / cnt;
    std::vector<double> sxy(count);
    std::vector<double> sxx(count);
    for (std::size_t i = 0; i < count; ++i) {
        sxy[i] = (xs[i] - mean_x) * (ys[i] - mean_y);
        sxx[i] = (xs[i] - mean_x) * (xs[i] - mean_x);
    }
    ExtrapolationResult r;
    const double denom = pairwise_sum(sxx);
    r.slope = denom > 0.0 ? pairwise_sum(sxy) / denom : 0.0;
    r.b_hat = mean_y - r.slope * mean_x;
    r.b_plain = mean_y;
    r.a_hat = std::sqrt(std::log(2.0)) * std::exp(r.b_hat);
    for (std::size_t i = 0; i < ms.size(); ++i)
        r.residuals.push_back({static_cast<std::int64_t>(ms[i]), hs[i], hs[i] - (r.b_hat + r.slope / ms[i])});
    return r;
}

GapReport gap_consistency(const std::vector<EstimateRecord>& records, std::int64_t n) {
    if (n < 2 || n % 2 != 0) throw InputError("gap consistency needs an even n");
    auto find = [&](const char* q, std::int64_t at) -> const EstimateRecord& {
        for (const EstimateRecord& r : records)
            if (r.quantity == q && r.n == at) return r;
        throw InputError(std::string("missing ") + q + " record at n=" + std::to_string(at));
    };
    const EstimateRecord& gap = find(quantity::gap, n);
    const EstimateRecord& full = find(quantity::distance, n);
    const EstimateRecord& half = find(quantity::distance, n / 2);
    GapReport g;
    g.n = n;
    g.gap_mean = gap.mean;
    g.gap_std_error = gap.std_error;
    g.psi_route = 2.0 * half.mean - full.mean;
    g.psi_route_std_error = std::sqrt(4.0 * half.std_error * half.std_error + full.std_error * full.std_error);
    const double combined = std::sqrt(g.gap_std_error * g.gap_std_error + g.psi_route_std_error * g.psi_route_std_error);
    const double diff = g.gap_mean - g.psi_route;
    g.z = combined > 0.0 ? diff / combined : (diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
    g.agree = std::abs(diff) <= 3.0 * combined;
    g.gaps_nonnegative = gap.min >= 0.0;
    return g;
}

}  // namespace walktrace
