#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "trafficgas/trafficdata.hpp"

namespace trafficgas::cli {

struct Column {
    std::string name;
    std::string unit;
};

/// Shortest round-trip decimal form; "nan"/"inf" for non-finite values.
[[nodiscard]] std::string format_number(double value);

/// FNV-1a 64 of the compact JSON dump, as 16 hex digits.
[[nodiscard]] std::string config_hash(const nlohmann::json& config);

/// Comment block: tool version, command, config hash, seed, column list.
/// Followed by the CSV header row.
void write_table_header(std::ostream& out, const std::string& command, const std::string& hash,
                        const std::vector<Column>& columns, const std::string& extra = {});

void write_row(std::ostream& out, const std::vector<std::string>& cells);

[[nodiscard]] const char* regime_label(double rho);

/// Per-bin results table for `analyze`.
void write_bin_table(std::ostream& out, const trafficdata::AnalysisResult& result, const std::string& hash);

[[nodiscard]] nlohmann::json analysis_to_json(const trafficdata::AnalysisResult& result);

/// Writes <stem>.curves.csv, <stem>.fd.csv and the gnuplot script <stem>.gp
/// next to the bin table at `table_path`.
void write_plot_bundle(const std::filesystem::path& table_path, const trafficdata::AnalysisResult& result,
                       const std::string& hash);

}  // namespace trafficgas::cli
