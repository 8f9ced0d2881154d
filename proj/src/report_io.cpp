#include "ctlcap/report_io.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "ctlcap/error.hpp"

namespace ctlcap {

void Table::add_row(std::vector<TableCell> row)
{
    if (row.size() != columns.size()) {
        throw std::logic_error("table row width does not match its header");
    }
    rows.push_back(std::move(row));
}

std::string format_number(double x)
{
    if (std::isnan(x)) {
        return "nan";
    }
    if (std::isinf(x)) {
        return x > 0 ? "inf" : "-inf";
    }
    char buf[64];
    auto const [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, end);
}

double parse_number(std::string_view text)
{
    if (text == "inf") {
        return std::numeric_limits<double>::infinity();
    }
    if (text == "-inf") {
        return -std::numeric_limits<double>::infinity();
    }
    if (text == "nan") {
        return std::numeric_limits<double>::quiet_NaN();
    }
    double v = 0.0;
    auto const* end = text.data() + text.size();
    auto const [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc{} || ptr != end) {
        throw ConfigError("not a number: '" + std::string(text) + "'");
    }
    return v;
}

nlohmann::ordered_json json_number(double x)
{
    if (std::isfinite(x)) {
        return x;
    }
    return format_number(x);
}

namespace {

std::string cell_text(TableCell const& cell)
{
    if (auto const* i = std::get_if<std::int64_t>(&cell)) {
        return std::to_string(*i);
    }
    if (auto const* d = std::get_if<double>(&cell)) {
        return format_number(*d);
    }
    return std::get<std::string>(cell);
}

nlohmann::ordered_json cell_json(TableCell const& cell)
{
    if (auto const* i = std::get_if<std::int64_t>(&cell)) {
        return *i;
    }
    if (auto const* d = std::get_if<double>(&cell)) {
        return json_number(*d);
    }
    return std::get<std::string>(cell);
}

}  // namespace

namespace {

std::string csv_field(std::string const& text)
{
    if (text.find_first_of(",\"\n") == std::string::npos) {
        return text;
    }
    std::string out = "\"";
    for (char c : text) {
        out += c;
        if (c == '"') {
            out += '"';
        }
    }
    return out + '"';
}

}  // namespace

std::string to_csv(Table const& table)
{
    std::string out;
    for (std::size_t i = 0; i < table.columns.size(); ++i) {
        out += (i ? "," : "") + csv_field(table.columns[i]);
    }
    out += '\n';
    for (auto const& row : table.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) {
                out += ',';
            }
            out += csv_field(cell_text(row[i]));
        }
        out += '\n';
    }
    return out;
}

std::string to_json(Report const& report)
{
    nlohmann::ordered_json doc;
    doc["config"] = report.config;
    auto rows = nlohmann::ordered_json::array();
    for (auto const& row : report.results.rows) {
        nlohmann::ordered_json obj = nlohmann::ordered_json::object();
        for (std::size_t i = 0; i < row.size(); ++i) {
            obj[report.results.columns[i]] = cell_json(row[i]);
        }
        rows.push_back(std::move(obj));
    }
    doc["results"] = std::move(rows);
    doc["diagnostics"] = report.diagnostics;
    return doc.dump(2) + "\n";
}

std::vector<std::vector<std::string>> split_csv(std::string_view text)
{
    std::vector<std::vector<std::string>> out;
    while (!text.empty()) {
        auto const nl = text.find('\n');
        auto line = text.substr(0, nl);
        text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
        if (line.empty()) {
            continue;
        }
        std::vector<std::string> fields(1);
        bool quoted = false;
        for (std::size_t i = 0; i < line.size(); ++i) {
            char const c = line[i];
            if (quoted) {
                if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                    fields.back() += '"';
                    ++i;
                } else if (c == '"') {
                    quoted = false;
                } else {
                    fields.back() += c;
                }
            } else if (c == '"') {
                quoted = true;
            } else if (c == ',') {
                fields.emplace_back();
            } else {
                fields.back() += c;
            }
        }
        out.push_back(std::move(fields));
    }
    return out;
}

}  // namespace ctlcap
