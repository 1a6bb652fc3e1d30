#pragma once

#include <json.hpp>

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace magspec::cli {

/// Provenance stamped on every output file.
struct OutputMeta {
    std::string version;
    std::string config_hash;
    std::string grid;

    /// "# magspec <version> config=<hash> grid=<fingerprint>"
    std::string header_line() const;
    nlohmann::ordered_json to_json() const;
};

/// 64-bit FNV-1a as 16 lowercase hex digits.
std::string fnv1a_hex(std::string_view text);

/// Shortest round-trip decimal form, always with '.' as separator.
std::string format_real(double v);

using Cell = std::variant<double, long long, std::string, bool>;

std::string format_cell(const Cell& c);

/// Named block of rows with a fixed column list.
struct Table {
    std::string name;
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;

    Table(std::string name, std::vector<std::string> columns);
    void add(std::vector<Cell> row);
};

enum class Format { Csv, Json };

Format parse_format(std::string_view text);

/// Writes the tables to out_dir/<name>.<ext>, or to `fallback` when out_dir is empty.
///
/// CSV: provenance comment, column header, rows; consecutive tables on one
/// stream are separated by an empty line. JSON: {"magspec": meta, "records": [...]},
/// where records of multi-table output carry a "table" field. LF line endings.
void emit(const std::vector<Table>& tables, Format format, const std::filesystem::path& out_dir,
          std::ostream& fallback, const OutputMeta& meta);

/// "a..b" (inclusive integers), "a,b,c" or a single integer.
std::vector<int> parse_int_range(const std::string& text);

/// "a..b:step", "a,b,c" or a single number.
std::vector<double> parse_real_range(const std::string& text);

}  // namespace magspec::cli
