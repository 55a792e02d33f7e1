#pragma once

#include <filesystem>
#include <iosfwd>
#include <vector>

#include "walktrace/estimator.hpp"

namespace walktrace {

inline constexpr int kRecordSchemaVersion = 1;

/// One JSON object per line: {"v":1,"quantity":...,"n":...,"mean":...,
/// "stderr":...,"trials":...,"seed":...,"timestamp":...,"min":...,"max":...,
/// "failures":...}. Doubles are written in shortest round-trip form.
void write_records_jsonl(std::ostream& out, const std::vector<EstimateRecord>& records);

/// Throws InputError naming the line on malformed JSON, a missing field or
/// an unsupported "v".
[[nodiscard]] std::vector<EstimateRecord> read_records_jsonl(std::istream& in);
[[nodiscard]] std::vector<EstimateRecord> read_records_file(const std::filesystem::path& path);

/// CSV with header quantity,n,mean,stderr,trials,seed; doubles as %.17g.
void write_summary_csv(std::ostream& out, const std::vector<EstimateRecord>& records);

/// Formats a double as %.17g (NaN as "nan").
[[nodiscard]] std::string format_double(double x);

}  // namespace walktrace
