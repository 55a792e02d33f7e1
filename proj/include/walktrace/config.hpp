#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace walktrace {

/// Parameters of one CLI run. Every field has a key in the text form, so
/// parse_config(format_config(c)) == c.
struct ExperimentConfig {
    std::vector<std::int64_t> grid{std::int64_t{1} << 10};
    std::int64_t trials = 1000;
    std::uint64_t seed = 1;
    int workers = 1;
    std::string out = ".";
    double tol = 1e-8;
    std::vector<double> lambda{0.5};
    std::vector<std::pair<std::int64_t, std::int64_t>> nk{{4096, 2}};
    std::vector<std::int64_t> fn;           // horizons for the three-walk estimate
    std::int64_t f_trials = 0;              // 0: pilot-based default
    std::int64_t fn_trials = 100000;
    bool resistance = true;
    bool halves = true;
    bool interval_L = false;
    double max_failure_fraction = 0.01;
    std::int64_t green_radius = 0;          // 0: derived from the tail target
    std::int64_t green_mc_trials = 0;       // 0: no Monte Carlo column
    bool export_tables = false;
    std::int64_t dump_graphs = 0;           // edge lists of the first k trials per n
    std::string timestamp;

    friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

/// "2^10..2^16" (every power of two in range), "1024,2048,4096", or a mix
/// of "2^k" and integers separated by commas. Throws InputError.
[[nodiscard]] std::vector<std::int64_t> parse_grid(const std::string& text);
/// "4096:2,4096:3".
[[nodiscard]] std::vector<std::pair<std::int64_t, std::int64_t>> parse_nk(const std::string& text);
[[nodiscard]] std::vector<double> parse_double_list(const std::string& text);

/// Applies one key=value assignment. Throws InputError on unknown keys or
/// unparsable values.
void set_config_value(ExperimentConfig& config, const std::string& key, const std::string& value);

/// key=value lines; '#' starts a comment, blank lines are ignored.
[[nodiscard]] ExperimentConfig parse_config(std::istream& in, ExperimentConfig base = {});
[[nodiscard]] ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base = {});
[[nodiscard]] std::string format_config(const ExperimentConfig& config);

/// Range checks shared by every command. Throws ParameterError.
void validate_config(const ExperimentConfig& config);

}  // namespace walktrace
