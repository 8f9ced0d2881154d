#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

namespace ctlcap {

using TableCell = std::variant<std::int64_t, double, std::string>;

struct Table
{
    std::vector<std::string> columns;
    std::vector<std::vector<TableCell>> rows;

    void add_row(std::vector<TableCell> row);
};

/// Output of one CLI command.
struct Report
{
    nlohmann::ordered_json config = nlohmann::ordered_json::object();
    Table results;
    nlohmann::ordered_json diagnostics = nlohmann::ordered_json::object();
};

/// Shortest decimal that parses back to the same double; `inf`, `-inf`, `nan`
/// for non-finite values.
std::string format_number(double x);

/// Inverse of format_number. Throws ConfigError.
double parse_number(std::string_view text);

/// JSON number, or the format_number string when non-finite.
nlohmann::ordered_json json_number(double x);

/// Header row plus one comma-separated line per row.
std::string to_csv(Table const& table);

/// {"config": ..., "results": [{column: value}...], "diagnostics": ...}.
std::string to_json(Report const& report);

/// Splits CSV text (no quoting) into rows of fields.
std::vector<std::vector<std::string>> split_csv(std::string_view text);

}  // namespace ctlcap
