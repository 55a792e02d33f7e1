#include "walktrace/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "walktrace/config.hpp"
#include "walktrace/error.hpp"
#include "walktrace/estimator.hpp"
#include "walktrace/greens.hpp"
#include "walktrace/intersections.hpp"
#include "walktrace/records.hpp"
#include "walktrace/trace_graph.hpp"

namespace walktrace {

namespace fs = std::filesystem;

namespace {

/// Largest radius the green command uses when none is configured.
constexpr int kCliGreenRadiusCap = 32;

struct CommonOptions {
    std::string config_path;
    std::vector<std::string> assignments;                    // --set key=value
};

void add_common(CLI::App* cmd, CommonOptions& opts, std::map<std::string, std::string>& raw) {
    cmd->add_option("--config", opts.config_path, "key=value config file; flags override it");
    cmd->add_option("--grid", raw["grid"], "horizons, e.g. 2^10..2^16 or 1024,4096");
    cmd->add_option("--trials", raw["trials"], "trials per grid point");
    cmd->add_option("--seed", raw["seed"], "master seed");
    cmd->add_option("--workers", raw["workers"], "worker threads (results do not depend on it)");
    cmd->add_option("--out", raw["out"], "output directory (must exist)");
    cmd->add_option("--tol", raw["tol"], "relative residual tolerance of the resistance solve");
    cmd->add_option("--lambda", raw["lambda"], "comma list of lambda values in (0,1)");
    cmd->add_option("--nk", raw["nk"], "comma list of n:k pairs, e.g. 4096:2,4096:3");
    cmd->add_option("--set", opts.assignments, "any other config key, as key=value (repeatable)");
}

ExperimentConfig effective_config(CLI::App* cmd, const CommonOptions& opts,
                                  const std::map<std::string, std::string>& raw) {
    ExperimentConfig config;
    if (!opts.config_path.empty()) config = load_config(opts.config_path);
    for (const auto& [key, value] : raw)
        if (cmd->count("--" + key) > 0) set_config_value(config, key, value);
    for (const std::string& a : opts.assignments) {
        const auto eq = a.find('=');
        if (eq == std::string::npos) throw InputError("--set expects key=value, got '" + a + "'");
        set_config_value(config, a.substr(0, eq), a.substr(eq + 1));
    }
    validate_config(config);
    return config;
}

fs::path output_dir(const std::string& out) {
    const fs::path dir(out);
    std::error_code ec;
    if (!fs::is_directory(dir, ec)) throw IoError("output directory '" + out + "' does not exist");
    return dir;
}

void write_file(const fs::path& path, const std::string& content, std::ios::openmode mode = std::ios::trunc) {
    std::ofstream f(path, std::ios::binary | std::ios::out | mode);
    if (!f) throw IoError("cannot open " + path.string() + " for writing");
    f << content;
    f.flush();
    if (!f) throw IoError("write to " + path.string() + " failed");
}

std::string fmt(double x) { return std::isfinite(x) ? format_double(x) : std::string(std::isnan(x) ? "nan" : "inf"); }

std::vector<std::string> expected_quantities(const ExperimentConfig& c) {
    std::vector<std::string> q{quantity::distance};
    if (c.resistance) q.emplace_back(quantity::resistance);
    q.emplace_back(quantity::cut_count);
    q.emplace_back(quantity::distance_variance);
    if (c.halves) q.emplace_back(quantity::gap);
    if (c.interval_L) q.emplace_back(quantity::interval_L);
    return q;
}

// --- simulate ----------------------------------------------------------------

int cmd_simulate(const ExperimentConfig& c, bool resume, std::ostream& out, std::ostream& err) {
    const fs::path dir = output_dir(c.out);
    const fs::path results_path = dir / "results.jsonl";
    const std::vector<std::string> wanted = expected_quantities(c);

    std::map<std::int64_t, std::vector<EstimateRecord>> done;
    if (resume && fs::exists(results_path)) {
        std::map<std::int64_t, std::map<std::string, EstimateRecord>> by_n;
        for (EstimateRecord& r : read_records_file(results_path))
            if (r.trials + r.failures == c.trials && r.seed == c.seed) by_n[r.n][r.quantity] = std::move(r);
        for (std::int64_t n : c.grid) {
            auto it = by_n.find(n);
            if (it == by_n.end()) continue;
            std::vector<EstimateRecord> rows;
            for (const std::string& q : wanted)
                if (auto f = it->second.find(q); f != it->second.end()) rows.push_back(f->second);
            if (rows.size() == wanted.size()) done[n] = std::move(rows);
        }
    }

    ExperimentPlan plan;
    plan.trials = c.trials;
    plan.master_seed = c.seed;
    plan.workers = c.workers;
    plan.options.resistance = c.resistance;
    plan.options.halves = c.halves;
    plan.options.interval_statistic = c.interval_L;
    plan.options.tol = c.tol;
    plan.max_failure_fraction = c.max_failure_fraction;
    plan.timestamp = c.timestamp;
    for (std::int64_t n : c.grid)
        if (!done.contains(n)) plan.grid.push_back(n);

    write_file(dir / "config.txt", format_config(c));

    std::map<std::int64_t, std::vector<EstimateRecord>> fresh;
    if (!plan.grid.empty()) {
        const ExperimentResult result = run_experiment(plan);
        for (const EstimateRecord& r : result.records) fresh[r.n].push_back(r);
        for (const InvariantViolation& v : result.violations) {
            nlohmann::json j{{"warning", "invariant"}, {"n", v.n}, {"seed", v.seed}, {"what", v.what}};
            err << j.dump() << '\n';
        }
    }

    std::vector<EstimateRecord> records;
    std::set<std::int64_t> seen;
    for (std::int64_t n : c.grid) {
        if (!seen.insert(n).second) continue;
        const auto& rows = done.contains(n) ? done[n] : fresh[n];
        records.insert(records.end(), rows.begin(), rows.end());
    }

    std::ostringstream jsonl;
    write_records_jsonl(jsonl, records);
    write_file(results_path, jsonl.str());
    std::ostringstream csv;
    write_summary_csv(csv, records);
    write_file(dir / "summary.csv", csv.str());

    for (std::int64_t n : c.grid) {
        for (std::int64_t t = 0; t < std::min(c.dump_graphs, c.trials); ++t) {
            const WalkPath path = generate_walk(kDefaultDimension, n, trial_seed(c.seed, n, t));
            std::ostringstream edges;
            write_edge_list(edges, build_trace(path, 0, n));
            write_file(dir / ("trace_n" + std::to_string(n) + "_t" + std::to_string(t) + ".edges"), edges.str());
        }
    }
    out << csv.str();
    return kExitOk;
}

// --- intersect ---------------------------------------------------------------

int cmd_intersect(const ExperimentConfig& c, std::ostream& out) {
    const fs::path dir = output_dir(c.out);
    write_file(dir / "config.txt", format_config(c));
    std::ostringstream csv;
    csv << "kind,n,k,trials,hits,mean,stderr,prediction,ratio\n";
    std::vector<EstimateRecord> records;
    auto emit = [&](const IntersectionEstimate& e, double prediction, const std::string& quantity) {
        csv << to_string(e.kind) << ',' << e.n << ',' << e.k << ',' << e.trials << ',' << e.hits << ','
            << fmt(e.mean) << ',' << fmt(e.std_error) << ',' << fmt(prediction) << ',' << fmt(e.mean / prediction)
            << '\n';
        EstimateRecord r;
        r.quantity = quantity;
        r.n = e.n;
        r.mean = e.mean;
        r.std_error = e.std_error;
        r.trials = e.trials;
        r.seed = c.seed;
        r.timestamp = c.timestamp;
        r.min = e.hits > 0 && e.hits == e.trials ? 1.0 : 0.0;
        r.max = e.hits > 0 ? 1.0 : 0.0;
        records.push_back(r);
    };
    for (const auto& [n, k] : c.nk) {
        const std::uint64_t seed = derive_seed(derive_seed(c.seed, static_cast<std::uint64_t>(n)),
                                               static_cast<std::uint64_t>(k));
        const std::int64_t trials = c.f_trials > 0 ? c.f_trials : default_f_trials(n, k, seed, c.workers);
        emit(estimate_f(n, k, trials, seed, c.workers), long_range_prediction(n, k), "f_k" + std::to_string(k));
    }
    for (std::int64_t n : c.fn) {
        const std::uint64_t seed = derive_seed(derive_seed(c.seed, static_cast<std::uint64_t>(n)), 0x46ULL << 32);
        const double prediction = n >= 2 ? three_walk_prediction(n) : std::numeric_limits<double>::quiet_NaN();
        emit(estimate_F(n, c.fn_trials, seed, c.workers), prediction, "F");
    }
    write_file(dir / "intersect.csv", csv.str());
    std::ostringstream jsonl;
    write_records_jsonl(jsonl, records);
    write_file(dir / "intersect.jsonl", jsonl.str());
    out << csv.str();
    return kExitOk;
}

// --- green -------------------------------------------------------------------

int cmd_green(const ExperimentConfig& c, std::ostream& out) {
    const fs::path dir = output_dir(c.out);
    write_file(dir / "config.txt", format_config(c));
    std::ostringstream csv;
    csv << "lambda,neg_log_1m_lambda,expected_G,series_tail_bound,radius,table_sum,geometric_total,"
           "truncation_bound,conserved,table_expected_G,mc_mean,mc_stderr,series_method\n";
    for (std::size_t i = 0; i < c.lambda.size(); ++i) {
        const double lambda = c.lambda[i];
        const SeriesValue series = expected_G_aggregate(lambda);
        csv << fmt(lambda) << ',' << fmt(-std::log1p(-lambda)) << ',' << fmt(series.value) << ','
            << fmt(series.truncation_bound) << ',';

        int radius = static_cast<int>(c.green_radius);
        if (radius == 0) {
            const double needed = std::ceil(std::log(kGreenTailTarget) / std::log(lambda)) - 1.0;
            radius = static_cast<int>(std::clamp(needed, 0.0, static_cast<double>(kCliGreenRadiusCap)));
        }
        std::optional<GreensTable> table;
        try {
            table = green_table(lambda, radius);
        } catch (const CapacityError&) {
        }
        if (table) {
            const double sum = table->total();
            const double geometric = 1.0 / (1.0 - lambda);
            const double slack = 64.0 * std::numeric_limits<double>::epsilon() * geometric;
            const bool conserved = sum <= geometric + slack && sum >= geometric - table->truncation_bound - slack;
            csv << table->radius << ',' << fmt(sum) << ',' << fmt(geometric) << ',' << fmt(table->truncation_bound)
                << ',' << (conserved ? "true" : "false") << ',' << fmt(expected_G_aggregate(*table)) << ',';
            if (c.export_tables) {
                std::ostringstream bin;
                write_green_table(bin, *table);
                write_file(dir / ("green_" + std::to_string(i) + ".bin"), bin.str());
            }
        } else {
            csv << ",,,,,,";
        }
        if (c.green_mc_trials > 0) {
            const AggregateMonteCarlo mc =
                estimate_G_aggregate(lambda, c.green_mc_trials, derive_seed(c.seed, static_cast<std::uint64_t>(i)));
            csv << fmt(mc.mean) << ',' << fmt(mc.std_error) << ',';
        } else {
            csv << ",,";
        }
        csv << (series.method == AggregateMethod::series ? "series" : "bessel_integral") << '\n';
    }
    write_file(dir / "green.csv", csv.str());
    out << csv.str();
    return kExitOk;
}

// --- fit ---------------------------------------------------------------------

int cmd_fit(const std::string& results, const std::string& out_dir, std::ostream& out) {
    const std::vector<EstimateRecord> records = read_records_file(results);
    const PsiSeries psi = psi_series(records);

    std::ostringstream doubling;
    doubling << "quantity,n,ratio,predicted,deviation,stderr,z,flagged\n";
    std::ostringstream extrap;
    extrap << "quantity,a_hat,b_hat,slope,b_plain\n";
    std::ostringstream resid;
    resid << "quantity,m,h,residual\n";
    auto fit_one = [&](const char* name, const std::vector<PsiPoint>& series) {
        for (const DoublingRow& row : doubling_check(series))
            doubling << name << ',' << row.n << ',' << fmt(row.ratio) << ',' << fmt(row.predicted) << ','
                     << fmt(row.deviation) << ',' << fmt(row.std_error) << ',' << fmt(row.z) << ','
                     << (row.flagged ? "true" : "false") << '\n';
        if (series.size() < 4) return;
        const ExtrapolationResult e = extrapolate_constant(series);
        extrap << name << ',' << fmt(e.a_hat) << ',' << fmt(e.b_hat) << ',' << fmt(e.slope) << ',' << fmt(e.b_plain)
               << '\n';
        for (const ExtrapolationResidual& r : e.residuals)
            resid << name << ',' << r.m << ',' << fmt(r.h) << ',' << fmt(r.residual) << '\n';
    };
    if (psi.distance.size() < 4) throw InputError("extrapolation needs at least four grid points");
    fit_one(quantity::distance, psi.distance);
    if (!psi.resistance.empty()) fit_one(quantity::resistance, psi.resistance);

    std::ostringstream gap;
    gap << "n,gap_mean,gap_stderr,psi_route,psi_route_stderr,z,agree,gaps_nonnegative\n";
    for (const PsiPoint& p : psi.distance) {
        const bool has_gap = std::any_of(records.begin(), records.end(),
                                         [&](const EstimateRecord& r) { return r.quantity == quantity::gap && r.n == p.n; });
        const bool has_half = std::any_of(records.begin(), records.end(), [&](const EstimateRecord& r) {
            return r.quantity == quantity::distance && r.n == p.n / 2;
        });
        if (!has_gap || !has_half || p.n % 2 != 0) continue;
        const GapReport g = gap_consistency(records, p.n);
        gap << g.n << ',' << fmt(g.gap_mean) << ',' << fmt(g.gap_std_error) << ',' << fmt(g.psi_route) << ','
            << fmt(g.psi_route_std_error) << ',' << fmt(g.z) << ',' << (g.agree ? "true" : "false") << ','
            << (g.gaps_nonnegative ? "true" : "false") << '\n';
    }

    if (!out_dir.empty()) {
        const fs::path dir = output_dir(out_dir);
        write_file(dir / "doubling.csv", doubling.str());
        write_file(dir / "extrapolation.csv", extrap.str());
        write_file(dir / "extrapolation_residuals.csv", resid.str());
        write_file(dir / "gap.csv", gap.str());
    }
    out << "# doubling\n" << doubling.str() << "# extrapolation\n" << extrap.str() << "# residuals\n" << resid.str()
        << "# gap\n" << gap.str();
    return kExitOk;
}

// --- report ------------------------------------------------------------------

int cmd_report(const std::string& results, const std::string& out_dir, std::ostream& out) {
    const std::vector<EstimateRecord> records = read_records_file(results);
    std::map<std::int64_t, std::map<std::string, const EstimateRecord*>> by_n;
    for (const EstimateRecord& r : records) by_n[r.n][r.quantity] = &r;
    if (by_n.empty()) throw InputError("no records in " + results);

    std::ostringstream csv;
    csv << "n,psi_D,psi_D_stderr,psi_R,psi_R_stderr,psi_D_sqrt_log_n,psi_R_sqrt_log_n,cut_density,var_ratio\n";
    for (const auto& [n, q] : by_n) {
        const double nn = static_cast<double>(n);
        const double root_log = std::sqrt(std::log(nn));
        auto get = [&](const char* name) -> const EstimateRecord* {
            auto it = q.find(name);
            return it == q.end() ? nullptr : it->second;
        };
        const EstimateRecord* d = get(quantity::distance);
        const EstimateRecord* r = get(quantity::resistance);
        const EstimateRecord* cuts = get(quantity::cut_count);
        const EstimateRecord* var = get(quantity::distance_variance);
        if (!d && !r) continue;
        csv << n << ',';
        if (d) csv << fmt(d->mean / nn) << ',' << fmt(d->std_error / nn) << ',';
        else csv << ",,";
        if (r) csv << fmt(r->mean / nn) << ',' << fmt(r->std_error / nn) << ',';
        else csv << ",,";
        csv << (d ? fmt(d->mean / nn * root_log) : "") << ',' << (r ? fmt(r->mean / nn * root_log) : "") << ',';
        csv << (cuts ? fmt(cuts->mean / (nn / root_log)) : "") << ',';
        csv << (var && d && d->mean > 0 ? fmt(var->mean / (d->mean * d->mean)) : "") << '\n';
    }
    if (!out_dir.empty()) write_file(output_dir(out_dir) / "report.csv", csv.str());
    out << csv.str();
    return kExitOk;
}

int report_error(std::ostream& err, const std::string& kind, const std::string& message, int code) {
    nlohmann::json j{{"error", {{"kind", kind}, {"message", message}}}, {"exit", code}};
    err << j.dump() << '\n';
    return code;
}

int exit_code_for(const Error& e) {
    if (e.kind() == "io") return kExitIo;
    if (e.kind() == "numerical") return kExitNumerical;
    return kExitBadInput;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Simple random walk traces on Z^4: distance, resistance, cut times, Green's functions, "
                 "intersection probabilities.\n\n"
                 "CSV schemas:\n"
                 "  summary.csv   quantity,n,mean,stderr,trials,seed\n"
                 "  intersect.csv kind,n,k,trials,hits,mean,stderr,prediction,ratio\n"
                 "  green.csv     lambda,neg_log_1m_lambda,expected_G,series_tail_bound,radius,table_sum,\n"
                 "                geometric_total,truncation_bound,conserved,table_expected_G,mc_mean,mc_stderr,\n"
                 "                series_method\n"
                 "  doubling.csv  quantity,n,ratio,predicted,deviation,stderr,z,flagged\n"
                 "  report.csv    n,psi_D,psi_D_stderr,psi_R,psi_R_stderr,psi_D_sqrt_log_n,psi_R_sqrt_log_n,\n"
                 "                cut_density,var_ratio\n"
                 "Exit codes: 0 ok, 2 I/O, 3 bad input, 4 numerical failure budget exceeded.",
                 "walktrace"};
    app.require_subcommand(1);

    CommonOptions sim_opts;
    std::map<std::string, std::string> sim_raw;
    bool resume = false;
    CLI::App* simulate = app.add_subcommand("simulate", "Monte Carlo of D_n, R_n, cut counts and gaps over a grid");
    add_common(simulate, sim_opts, sim_raw);
    simulate->add_flag("--resume", resume, "reuse complete grid points from an existing results.jsonl");

    CommonOptions int_opts;
    std::map<std::string, std::string> int_raw;
    CLI::App* intersect = app.add_subcommand("intersect", "long-range f(n;k) and three-walk F_n estimates");
    add_common(intersect, int_opts, int_raw);

    CommonOptions green_opts;
    std::map<std::string, std::string> green_raw;
    CLI::App* green = app.add_subcommand("green", "E(G^lambda) against -log(1-lambda), with table conservation");
    add_common(green, green_opts, green_raw);

    std::string fit_path;
    std::string fit_out;
    CLI::App* fit = app.add_subcommand("fit", "doubling check, constant extrapolation and gap consistency");
    fit->add_option("results", fit_path, "results.jsonl from simulate")->required();
    fit->add_option("--out", fit_out, "directory for doubling/extrapolation/gap CSV files");

    std::string report_path;
    std::string report_out;
    CLI::App* report = app.add_subcommand("report", "tidy psi(n) table for plotting");
    report->add_option("results", report_path, "results.jsonl from simulate")->required();
    report->add_option("--out", report_out, "directory for report.csv");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        return report_error(err, "usage", e.what(), kExitBadInput);
    }

    try {
        if (simulate->parsed()) return cmd_simulate(effective_config(simulate, sim_opts, sim_raw), resume, out, err);
        if (intersect->parsed()) return cmd_intersect(effective_config(intersect, int_opts, int_raw), out);
        if (green->parsed()) return cmd_green(effective_config(green, green_opts, green_raw), out);
        if (fit->parsed()) return cmd_fit(fit_path, fit_out, out);
        if (report->parsed()) return cmd_report(report_path, report_out, out);
    } catch (const Error& e) {
        return report_error(err, e.kind(), e.what(), exit_code_for(e));
    } catch (const std::bad_alloc&) {
        return report_error(err, "capacity", "out of memory", kExitBadInput);
    } catch (const std::exception& e) {
        return report_error(err, "internal", e.what(), 1);
    }
    return kExitBadInput;
}

}  // namespace walktrace
