#include "walktrace/records.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>

#include "json.hpp"

#include "walktrace/error.hpp"

namespace walktrace {

using json = nlohmann::ordered_json;

namespace {

json number_or_null(double x) {
    if (std::isfinite(x)) return x;
    return nullptr;
}

double number_from(const json& j) {
    if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
    return j.get<double>();
}

}  // namespace

std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

void write_records_jsonl(std::ostream& out, const std::vector<EstimateRecord>& records) {
    for (const EstimateRecord& r : records) {
        json j = json::object();
        j["v"] = kRecordSchemaVersion;
        j["quantity"] = r.quantity;
        j["n"] = r.n;
        j["mean"] = number_or_null(r.mean);
        j["stderr"] = number_or_null(r.std_error);
        j["trials"] = r.trials;
        j["seed"] = r.seed;
        j["timestamp"] = r.timestamp;
        j["min"] = number_or_null(r.min);
        j["max"] = number_or_null(r.max);
        j["failures"] = r.failures;
        out << j.dump() << '\n';
    }
}

std::vector<EstimateRecord> read_records_jsonl(std::istream& in) {
    std::vector<EstimateRecord> records;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const std::string where = "records line " + std::to_string(line_no) + ": ";
        try {
            const json j = json::parse(line);
            if (!j.is_object()) throw InputError(where + "not an object");
            if (!j.contains("v") || j.at("v").get<int>() != kRecordSchemaVersion)
                throw InputError(where + "unsupported or missing schema version");
            EstimateRecord r;
            r.quantity = j.at("quantity").get<std::string>();
            r.n = j.at("n").get<std::int64_t>();
            r.mean = number_from(j.at("mean"));
            r.std_error = number_from(j.at("stderr"));
            r.trials = j.at("trials").get<std::int64_t>();
            r.seed = j.at("seed").get<std::uint64_t>();
            r.timestamp = j.value("timestamp", std::string{});
            r.min = j.contains("min") ? number_from(j.at("min")) : r.mean;
            r.max = j.contains("max") ? number_from(j.at("max")) : r.mean;
            r.failures = j.value("failures", std::int64_t{0});
            if (r.trials < 1) throw InputError(where + "trials must be positive");
            records.push_back(std::move(r));
        } catch (const json::exception& e) {
            throw InputError(where + e.what());
        }
    }
    return records;
}

std::vector<EstimateRecord> read_records_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    return read_records_jsonl(in);
}

void write_summary_csv(std::ostream& out, const std::vector<EstimateRecord>& records) {
    out << "quantity,n,mean,stderr,trials,seed\n";
    for (const EstimateRecord& r : records)
        out << r.quantity << ',' << r.n << ',' << format_double(r.mean) << ',' << format_double(r.std_error) << ','
            << r.trials << ',' << r.seed << '\n';
}

}  // namespace walktrace
