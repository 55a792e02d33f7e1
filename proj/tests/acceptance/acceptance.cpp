// Acceptance suite: one PASS/FAIL line per criterion.
//   acceptance [--only k[,k...]] [--workers w]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "oracles.hpp"
#include "walktrace/cli.hpp"
#include "walktrace/cut_structure.hpp"
#include "walktrace/error.hpp"
#include "walktrace/estimator.hpp"
#include "walktrace/greens.hpp"
#include "walktrace/intersections.hpp"
#include "walktrace/lattice_walk.hpp"
#include "walktrace/records.hpp"
#include "walktrace/stats.hpp"
#include "walktrace/trace_graph.hpp"

using namespace walktrace;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... xs) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, xs...);
    return buf;
}

int g_workers = 1;

constexpr std::uint64_t kSeed = 20240601;

// 1. cut_count <= R + 1e-6 <= D + 1e-6 <= n on every trial.
Outcome sandwich() {
    constexpr double slack = 1e-6;
    std::int64_t bad = 0;
    std::int64_t failed = 0;
    std::int64_t total = 0;
    double worst_gap = INFINITY;
    for (std::int64_t n : {1000, 10000, 100000}) {
        ExperimentPlan plan;
        plan.trials = 1000;
        plan.master_seed = kSeed + 1;
        plan.workers = g_workers;
        plan.options.halves = false;
        for (const TrialResult& t : run_batch(n, plan)) {
            ++total;
            if (!t.ok) {
                ++failed;
                continue;
            }
            const double c = static_cast<double>(t.cut_count);
            const double d = t.distance;
            const bool ok = c <= t.resistance + slack && t.resistance + slack <= d + slack && d <= static_cast<double>(n);
            if (!ok) ++bad;
            worst_gap = std::min(worst_gap, t.resistance - c);
        }
    }
    return {bad == 0 && failed == 0,
            fmt("%lld trials, %lld violations, %lld solver failures, min R - cut_count = %.3g", (long long)total,
                (long long)bad, (long long)failed, worst_gap)};
}

// 2. effective_resistance against the dense oracle on small random traces.
Outcome resistance_oracle() {
    double worst = 0.0;
    std::size_t largest = 0;
    for (int i = 0; i < 200; ++i) {
        const int d = 2 + i % 3;
        const std::uint64_t seed = derive_seed(kSeed + 2, static_cast<std::uint64_t>(i));
        std::int64_t n = 20 + static_cast<std::int64_t>(splitmix64(seed) % 180);
        WalkPath path = generate_walk(d, n, seed);
        TraceGraph g = build_trace(path, 0, n);
        while (g.vertex_count() > 200) {
            n -= 10;
            g = build_trace(path, 0, n);
        }
        largest = std::max(largest, g.vertex_count());
        const VertexId far = static_cast<VertexId>(splitmix64(seed ^ 0x5a5a) % g.vertex_count());
        for (VertexId v : {g.terminal(), far}) {
            if (v == g.origin()) continue;
            const double exact = static_cast<double>(resistance_dense_oracle<long double>(g, g.origin(), v));
            const double fast = effective_resistance(g, g.origin(), v).value;
            worst = std::max(worst, std::abs(fast - exact) / exact);
        }
    }
    return {worst <= 1e-8, fmt("200 graphs (<= %zu vertices), max relative error %.3g", largest, worst)};
}

// 3. Linear cut-time scan against the quadratic definition.
Outcome cut_oracle() {
    int mismatches = 0;
    std::int64_t cuts = 0;
    for (int i = 0; i < 100; ++i) {
        const std::uint64_t seed = derive_seed(kSeed + 3, static_cast<std::uint64_t>(i));
        const std::int64_t n = 1 + static_cast<std::int64_t>(splitmix64(seed) % 2000);
        const WalkPath path = generate_walk(4, n, seed);
        const CutTimeSet fast = find_cut_times(path, n);
        const auto slow = oracle::cut_times(path, n);
        cuts += static_cast<std::int64_t>(slow.size());
        if (fast.times != slow) ++mismatches;
    }
    return {mismatches == 0, fmt("100 walks, %d mismatches, %lld cut times compared", mismatches, (long long)cuts)};
}

// 4. Series additivity across cut times.
Outcome bridge_additivity() {
    int d_mismatch = 0;
    double worst = 0.0;
    std::int64_t segments = 0;
    for (int i = 0; i < 200; ++i) {
        const std::int64_t n = 10000;
        const WalkPath path = generate_walk(4, n, derive_seed(kSeed + 4, static_cast<std::uint64_t>(i)));
        const TraceGraph g = build_trace(path, 0, n);
        const auto parts = bridge_decomposition(path, n);
        segments += static_cast<std::int64_t>(parts.size());
        std::int64_t dsum = 0;
        std::vector<double> rs;
        for (const BridgeSegment& s : parts) {
            dsum += s.distance;
            rs.push_back(s.resistance);
        }
        if (dsum != graph_distance(g, g.origin(), g.terminal())) ++d_mismatch;
        const double r = effective_resistance(g, g.origin(), g.terminal()).value;
        worst = std::max(worst, std::abs(pairwise_sum(rs) - r) / r);
    }
    return {d_mismatch == 0 && worst <= 1e-6,
            fmt("200 walks, %lld segments, D mismatches %d, max relative R error %.3g", (long long)segments, d_mismatch,
                worst)};
}

// 5. Green's table conservation at a fixed radius.
Outcome green_conservation() {
    constexpr int radius = 30;
    bool pass = true;
    std::string detail;
    for (double lambda : {0.5, 0.9, 0.99, 1.0 - std::ldexp(1.0, -10)}) {
        const GreensTable t = green_table(lambda, radius);
        const double full = 1.0 / (1.0 - lambda);
        const double partial = -std::expm1(static_cast<double>(t.horizon + 1) * std::log(lambda)) / (1.0 - lambda);
        const double total = t.total();
        const double miss = std::abs(full - total);
        const double partial_err = std::abs(total - partial) / partial;
        const bool ok = miss <= t.truncation_bound * (1.0 + 1e-12) + 1e-12 * full && partial_err <= 1e-12;
        pass = pass && ok;
        detail += fmt("%slambda=%.6g |sum-1/(1-l)|=%.4g bound=%.4g partial rel err=%.2g", detail.empty() ? "" : "; ",
                      lambda, miss, t.truncation_bound, partial_err);
    }
    return {pass, detail};
}

// 6. Local CLT constant.
Outcome local_clt() {
    double lo = INFINITY;
    double hi = -INFINITY;
    for (std::int64_t s = 24; s <= 40; s += 2) {
        const double v = return_probability(s) * static_cast<double>(s * s) * std::numbers::pi * std::numbers::pi / 8.0;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    return {lo >= 0.9 && hi <= 1.1, fmt("scaled p_{2m}(0) over 2m=24..40 in [%.5f, %.5f]", lo, hi)};
}

// 7. Slope of E(G^lambda) in -log(1 - lambda).
Outcome green_slope() {
    const double target = 8.0 / (std::numbers::pi * std::numbers::pi);
    double prev = expected_G_aggregate(1.0 - std::ldexp(1.0, -6)).value;
    double worst = 0.0;
    std::string slopes;
    for (int m = 7; m <= 10; ++m) {
        const double v = expected_G_aggregate(1.0 - std::ldexp(1.0, -m)).value;
        const double slope = (v - prev) / std::numbers::ln2;
        worst = std::max(worst, std::abs(slope / target - 1.0));
        slopes += fmt("%s%.5f", slopes.empty() ? "" : ",", slope);
        prev = v;
    }
    return {worst <= 0.15, fmt("slopes m=6..10: %s; max relative deviation %.4f", slopes.c_str(), worst)};
}

// 8. Long-range intersection band.
Outcome long_range_band() {
    constexpr std::int64_t n = 4096;
    constexpr std::int64_t trials = 400000;
    const IntersectionEstimate f2 = estimate_f(n, 2, trials, derive_seed(kSeed + 8, 2), g_workers);
    const IntersectionEstimate f3 = estimate_f(n, 3, trials, derive_seed(kSeed + 8, 3), g_workers);
    const double r2 = f2.mean / long_range_prediction(n, 2);
    const double r3 = f3.mean / long_range_prediction(n, 3);
    const double combined = std::hypot(f2.std_error, f3.std_error);
    const double sep = (f2.mean - f3.mean) / combined;
    const bool pass = std::abs(r2 - 1.0) <= 0.4 && std::abs(r3 - 1.0) <= 0.4 && sep > 3.0;
    return {pass, fmt("f(k=2)=%.5f (ratio %.3f), f(k=3)=%.5f (ratio %.3f), separation %.1f stderr", f2.mean, r2,
                      f3.mean, r3, sep)};
}

// 9. Three-walk event band.
Outcome three_walk_band() {
    bool decreasing = true;
    bool in_band = true;
    double prev = INFINITY;
    std::string detail;
    for (std::int64_t n : {1024, 4096, 16384}) {
        const IntersectionEstimate e = estimate_F(n, 100000, derive_seed(kSeed + 9, static_cast<std::uint64_t>(n)),
                                                  g_workers);
        const double scaled = e.mean / three_walk_prediction(n);
        decreasing = decreasing && e.mean < prev;
        in_band = in_band && scaled >= 0.5 && scaled <= 1.6;
        prev = e.mean;
        detail += fmt("%sn=%lld P=%.5f(%.5f) scaled=%.3f", detail.empty() ? "" : "; ", (long long)n, e.mean,
                      e.std_error, scaled);
    }
    return {decreasing && in_band, detail};
}

ExperimentResult experiment(std::vector<std::int64_t> grid, std::int64_t trials, std::uint64_t seed, bool halves) {
    ExperimentPlan plan;
    plan.grid = std::move(grid);
    plan.trials = trials;
    plan.master_seed = seed;
    plan.workers = g_workers;
    plan.options.resistance = false;
    plan.options.halves = halves;
    return run_experiment(plan);
}

// 10. Triangle gap against the psi route.
Outcome triangle_gap() {
    constexpr std::int64_t n = 16384;
    const ExperimentResult r = experiment({n / 2, n}, 10000, kSeed + 10, true);
    const GapReport g = gap_consistency(r.records, n);
    return {g.gaps_nonnegative && g.agree,
            fmt("gap mean %.3f(%.3f), psi route %.3f(%.3f), z=%.2f, all gaps >= 0: %s", g.gap_mean, g.gap_std_error,
                g.psi_route, g.psi_route_std_error, g.z, g.gaps_nonnegative ? "yes" : "no")};
}

// 11. psi decreasing and psi sqrt(log n) within 30% over the grid.
Outcome psi_stability() {
    std::vector<std::int64_t> grid;
    for (int m = 10; m <= 18; ++m) grid.push_back(std::int64_t{1} << m);
    const ExperimentResult r = experiment(grid, 1000, kSeed + 11, false);
    const PsiSeries psi = psi_series(r.records);
    bool decreasing = true;
    double lo = INFINITY;
    double hi = 0.0;
    std::string detail;
    for (std::size_t i = 0; i < psi.distance.size(); ++i) {
        const PsiPoint& p = psi.distance[i];
        if (i > 0 && !(p.psi < psi.distance[i - 1].psi)) decreasing = false;
        const double scaled = p.psi * std::sqrt(std::log(static_cast<double>(p.n)));
        lo = std::min(lo, scaled);
        hi = std::max(hi, scaled);
        detail += fmt("%s%.4f", detail.empty() ? "" : ",", p.psi);
    }
    const double spread = hi / lo - 1.0;
    return {decreasing && spread <= 0.30,
            fmt("psi=%s; decreasing: %s; psi sqrt(log n) in [%.4f, %.4f], spread %.3f", detail.c_str(),
                decreasing ? "yes" : "no", lo, hi, spread)};
}

// 12. Doubling relation at n = 2^16.
Outcome doubling() {
    constexpr std::int64_t n = 65536;
    const ExperimentResult r = experiment({n, 2 * n}, 10000, kSeed + 12, false);
    const auto rows = doubling_check(psi_series(r.records).distance);
    if (rows.size() != 1) return {false, "unexpected doubling table"};
    const DoublingRow& d = rows.front();
    return {std::abs(d.z) <= 4.0,
            fmt("ratio %.5f(%.5f), predicted %.5f, z=%.2f", d.ratio, d.std_error, d.predicted, d.z)};
}

// 13. Extrapolation on synthetic inputs.
Outcome extrapolation() {
    const auto records = read_records_file(fs::path(WALKTRACE_FIXTURE_DIR) / "synthetic_psi_corrected.jsonl");
    const ExtrapolationResult fixture = extrapolate_constant(psi_series(records).distance);
    std::vector<PsiPoint> model;
    for (int m = 10; m <= 20; ++m) model.push_back({std::int64_t{1} << m, 1.0 / std::sqrt(double(m)), 0.0, 1});
    const ExtrapolationResult exact = extrapolate_constant(model);
    const double fixture_err = std::abs(fixture.a_hat - 1.0);
    const double exact_err = std::abs(exact.a_hat - std::sqrt(std::numbers::ln2)) / std::sqrt(std::numbers::ln2);
    return {fixture_err <= 0.02 && exact_err <= 1e-14,
            fmt("fixture a_hat=%.6f (|err| %.4f); model a_hat relative error %.2g", fixture.a_hat, fixture_err,
                exact_err)};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

// 14. Byte-identical outputs across reruns and worker counts.
Outcome determinism() {
    const fs::path root = fs::temp_directory_path() / "walktrace_acceptance_determinism";
    fs::remove_all(root);
    const std::vector<std::string> files = {"results.jsonl", "summary.csv", "intersect.csv", "intersect.jsonl",
                                            "green.csv",     "doubling.csv", "extrapolation.csv", "gap.csv"};
    std::vector<std::map<std::string, std::string>> runs;
    for (int workers : {1, 3, 3, 8}) {
        const fs::path dir = root / std::to_string(runs.size());
        fs::create_directories(dir);
        const std::string w = std::to_string(workers);
        std::ostringstream sink;
        const std::vector<std::vector<std::string>> commands = {
            {"simulate", "--grid", "2^8..2^12", "--trials", "40", "--seed", "7", "--workers", w, "--out", dir.string(),
             "--set", "interval_L=true"},
            {"intersect", "--nk", "256:1,256:2", "--set", "fn=256,512", "--set", "f_trials=2000", "--set",
             "fn_trials=2000", "--seed", "7", "--workers", w, "--out", dir.string()},
            {"green", "--lambda", "0.5,0.9", "--set", "green_radius=8", "--set", "green_mc_trials=500", "--seed", "7",
             "--workers", w, "--out", dir.string()},
            {"fit", (dir / "results.jsonl").string(), "--out", dir.string()},
        };
        for (const auto& c : commands) {
            const int code = run_cli(c, sink, sink);
            if (code != kExitOk) return {false, fmt("'%s' exited with %d", c.front().c_str(), code)};
        }
        std::map<std::string, std::string> contents;
        for (const auto& f : files) {
            if (!fs::exists(dir / f)) return {false, "missing output " + f};
            contents[f] = slurp(dir / f);
        }
        runs.push_back(std::move(contents));
    }
    int differing = 0;
    std::string which;
    for (const auto& f : files) {
        for (std::size_t i = 1; i < runs.size(); ++i) {
            if (runs[i].at(f) != runs[0].at(f)) {
                ++differing;
                which += " " + f;
                break;
            }
        }
    }
    fs::remove_all(root);
    return {differing == 0, differing == 0 ? fmt("%zu files identical over 4 runs (workers 1,3,3,8)", files.size())
                                           : "differing:" + which};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"walktrace acceptance suite"};
    std::vector<int> only;
    app.add_option("--only", only, "criteria to run")->delimiter(',');
    app.add_option("--workers", g_workers, "worker threads")->check(CLI::Range(1, 256));
    CLI11_PARSE(app, argc, argv);

    const std::vector<std::function<Outcome()>> criteria = {
        sandwich,      resistance_oracle, cut_oracle,     bridge_additivity, green_conservation,
        local_clt,     green_slope,       long_range_band, three_walk_band,  triangle_gap,
        psi_stability, doubling,          extrapolation,  determinism};
    if (only.empty())
        for (int i = 1; i <= static_cast<int>(criteria.size()); ++i) only.push_back(i);

    int failures = 0;
    for (int k : only) {
        if (k < 1 || k > static_cast<int>(criteria.size())) {
            std::fprintf(stderr, "no criterion %d\n", k);
            return 2;
        }
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[static_cast<std::size_t>(k - 1)]();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::printf("criterion %d %s %s [%.1fs]\n", k, o.pass ? "PASS" : "FAIL", o.detail.c_str(), secs);
        std::fflush(stdout);
        if (!o.pass) ++failures;
    }
    return failures == 0 ? 0 : 1;
}
