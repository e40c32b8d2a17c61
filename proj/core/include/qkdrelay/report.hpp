#pragma once

#include <string>
#include <vector>

#include "qkdrelay/bench.hpp"

namespace qkdrelay {

/// Machine-readable table, one row per (model, circuit size) cell.  The
/// header is stable so downstream tooling can rely on column positions.
std::string to_csv(const BenchReport& report);

/// The full report, plan included, as a JSON document.
std::string to_json(const BenchReport& report);

/// Human-readable tables; pass a trend report to append its verdicts.
std::string to_markdown(const BenchReport& report,
                        const TrendReport* trends = nullptr);

std::string sizes_csv(const std::vector<SizeRow>& rows);
std::string sizes_markdown(const std::vector<SizeRow>& rows);

/// Mean distribution time versus circuit size, one polyline per model,
/// as a standalone SVG document.
std::string to_svg(const BenchReport& report);

/// Writes content to path, throwing IoError on failure.
void write_file(const std::string& path, const std::string& content);

}  // namespace qkdrelay
