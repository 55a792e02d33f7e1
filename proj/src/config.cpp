#include "walktrace/config.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <sstream>

#include "walktrace/error.hpp"
#include "walktrace/records.hpp"

namespace walktrace {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) parts.push_back(trim(cur));
    return parts;
}

template <typename Int>
Int parse_int(const std::string& text) {
    const std::string t = trim(text);
    Int value{};
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
    if (ec != std::errc{} || ptr != t.data() + t.size() || t.empty()) throw InputError("not an integer: '" + text + "'");
    return value;
}

double parse_double(const std::string& text) {
    const std::string t = trim(text);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
    if (ec != std::errc{} || ptr != t.data() + t.size() || t.empty()) throw InputError("not a number: '" + text + "'");
    return value;
}

bool parse_bool(const std::string& text) {
    const std::string t = trim(text);
    if (t == "true" || t == "1" || t == "yes") return true;
    if (t == "false" || t == "0" || t == "no") return false;
    throw InputError("not a boolean: '" + text + "'");
}

std::int64_t parse_grid_value(const std::string& text) {
    const std::string t = trim(text);
    if (t.starts_with("2^")) {
        const int e = parse_int<int>(t.substr(2));
        if (e < 0 || e > 40) throw InputError("grid exponent out of range: " + t);
        return std::int64_t{1} << e;
    }
    return parse_int<std::int64_t>(t);
}

template <typename T, typename F>
std::string join(const std::vector<T>& xs, F fmt) {
    std::string s;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i) s += ',';
        s += fmt(xs[i]);
    }
    return s;
}

}  // namespace

std::vector<std::int64_t> parse_grid(const std::string& text) {
    std::vector<std::int64_t> grid;
    for (const std::string& part : split(text, ',')) {
        if (part.empty()) continue;
        if (const auto dots = part.find(".."); dots != std::string::npos) {
            const std::int64_t lo = parse_grid_value(part.substr(0, dots));
            const std::int64_t hi = parse_grid_value(part.substr(dots + 2));
            if (lo < 1 || (lo & (lo - 1)) != 0 || hi < lo) throw InputError("bad grid range: " + part);
            for (std::int64_t n = lo; n <= hi; n *= 2) grid.push_back(n);
        } else {
            grid.push_back(parse_grid_value(part));
        }
    }
    if (grid.empty()) throw InputError("empty grid");
    return grid;
}

std::vector<std::pair<std::int64_t, std::int64_t>> parse_nk(const std::string& text) {
    std::vector<std::pair<std::int64_t, std::int64_t>> out;
    for (const std::string& part : split(text, ',')) {
        if (part.empty()) continue;
        const auto colon = part.find(':');
        if (colon == std::string::npos) throw InputError("expected n:k, got '" + part + "'");
        out.emplace_back(parse_grid_value(part.substr(0, colon)), parse_int<std::int64_t>(part.substr(colon + 1)));
    }
    return out;
}

std::vector<double> parse_double_list(const std::string& text) {
    std::vector<double> out;
    for (const std::string& part : split(text, ','))
        if (!part.empty()) out.push_back(parse_double(part));
    return out;
}

void set_config_value(ExperimentConfig& c, const std::string& key, const std::string& value) {
    const std::string v = trim(value);
    if (key == "grid") c.grid = parse_grid(v);
    else if (key == "trials") c.trials = parse_int<std::int64_t>(v);
    else if (key == "seed") c.seed = parse_int<std::uint64_t>(v);
    else if (key == "workers") c.workers = parse_int<int>(v);
    else if (key == "out") c.out = v;
    else if (key == "tol") c.tol = parse_double(v);
    else if (key == "lambda") c.lambda = parse_double_list(v);
    else if (key == "nk") c.nk = parse_nk(v);
    else if (key == "fn") c.fn = v.empty() ? std::vector<std::int64_t>{} : parse_grid(v);
    else if (key == "f_trials") c.f_trials = parse_int<std::int64_t>(v);
    else if (key == "fn_trials") c.fn_trials = parse_int<std::int64_t>(v);
    else if (key == "resistance") c.resistance = parse_bool(v);
    else if (key == "halves") c.halves = parse_bool(v);
    else if (key == "interval_L") c.interval_L = parse_bool(v);
    else if (key == "max_failure_fraction") c.max_failure_fraction = parse_double(v);
    else if (key == "green_radius") c.green_radius = parse_int<std::int64_t>(v);
    else if (key == "green_mc_trials") c.green_mc_trials = parse_int<std::int64_t>(v);
    else if (key == "export_tables") c.export_tables = parse_bool(v);
    else if (key == "dump_graphs") c.dump_graphs = parse_int<std::int64_t>(v);
    else if (key == "timestamp") c.timestamp = v;
    else throw InputError("unknown config key '" + key + "'");
}

ExperimentConfig parse_config(std::istream& in, ExperimentConfig base) {
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        if (trim(line).empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw InputError("config line " + std::to_string(line_no) + ": expected key=value");
        try {
            set_config_value(base, trim(line.substr(0, eq)), line.substr(eq + 1));
        } catch (const InputError& e) {
            throw InputError("config line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return base;
}

ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path.string());
    return parse_config(in, std::move(base));
}

std::string format_config(const ExperimentConfig& c) {
    auto num = [](auto x) { return std::to_string(x); };
    auto boolean = [](bool b) { return std::string(b ? "true" : "false"); };
    std::ostringstream out;
    out << "grid=" << join(c.grid, num) << '\n'
        << "trials=" << c.trials << '\n'
        << "seed=" << c.seed << '\n'
        << "workers=" << c.workers << '\n'
        << "out=" << c.out << '\n'
        << "tol=" << format_double(c.tol) << '\n'
        << "lambda=" << join(c.lambda, format_double) << '\n'
        << "nk=" << join(c.nk, [](const auto& p) { return std::to_string(p.first) + ':' + std::to_string(p.second); })
        << '\n'
        << "fn=" << join(c.fn, num) << '\n'
        << "f_trials=" << c.f_trials << '\n'
        << "fn_trials=" << c.fn_trials << '\n'
        << "resistance=" << boolean(c.resistance) << '\n'
        << "halves=" << boolean(c.halves) << '\n'
        << "interval_L=" << boolean(c.interval_L) << '\n'
        << "max_failure_fraction=" << format_double(c.max_failure_fraction) << '\n'
        << "green_radius=" << c.green_radius << '\n'
        << "green_mc_trials=" << c.green_mc_trials << '\n'
        << "export_tables=" << boolean(c.export_tables) << '\n'
        << "dump_graphs=" << c.dump_graphs << '\n'
        << "timestamp=" << c.timestamp << '\n';
    return out.str();
}

void validate_config(const ExperimentConfig& c) {
    for (std::int64_t n : c.grid)
        if (n < 2) throw ParameterError("grid values must be >= 2");
    if (c.trials < 1) throw ParameterError("trials must be positive");
    if (c.workers < 1 || c.workers > 1024) throw ParameterError("workers must be in [1, 1024]");
    if (!(c.tol > 0.0) || c.tol >= 1.0) throw ParameterError("tol must be in (0, 1)");
    for (double l : c.lambda)
        if (!(l > 0.0 && l < 1.0)) throw ParameterError("lambda values must lie in (0, 1)");
    for (const auto& [n, k] : c.nk)
        if (n < 2 || k < 1) throw ParameterError("nk pairs need n >= 2 and k >= 1");
    for (std::int64_t n : c.fn)
        if (n < 1) throw ParameterError("fn horizons must be positive");
    if (c.f_trials < 0 || c.fn_trials < 1) throw ParameterError("trial counts must be positive");
    if (!(c.max_failure_fraction >= 0.0 && c.max_failure_fraction <= 1.0))
        throw ParameterError("max_failure_fraction must be in [0, 1]");
    if (c.green_radius < 0 || c.green_mc_trials < 0 || c.dump_graphs < 0)
        throw ParameterError("green_radius, green_mc_trials and dump_graphs must be nonnegative");
    if (c.out.find('\n') != std::string::npos || c.timestamp.find('\n') != std::string::npos ||
        c.out.find('#') != std::string::npos || c.timestamp.find('#') != std::string::npos)
        throw ParameterError("out and timestamp may not contain newlines or '#'");
}

}  // namespace walktrace
