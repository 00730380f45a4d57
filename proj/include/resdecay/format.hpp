#pragma once

// Diff-stable text output: shortest round-trip decimals with an uppercase
// exponent, comma-separated tables with '\n' line endings.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <ostream>
#include <string>
#include <system_error>
#include <variant>
#include <vector>

namespace resdecay {

inline std::string format_real(double v) {
    if (std::isnan(v)) return "NaN";
    if (std::isinf(v)) return v > 0 ? "Inf" : "-Inf";
    char buf[64];
    const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc{}) return "NaN";
    std::string s(buf, end);
    std::replace(s.begin(), s.end(), 'e', 'E');
    return s;
}

/// One cell: a real, an integer or text (empty text for a missing value).
using Cell = std::variant<double, long long, std::string>;

inline std::string format_cell(const Cell& c) {
    if (const auto* d = std::get_if<double>(&c)) return format_real(*d);
    if (const auto* i = std::get_if<long long>(&c)) return std::to_string(*i);
    return std::get<std::string>(c);
}

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;

    void add(std::vector<Cell> row) { rows.push_back(std::move(row)); }
};

inline void write_csv(std::ostream& os, const Table& t) {
    for (std::size_t j = 0; j < t.columns.size(); ++j) os << (j ? "," : "") << t.columns[j];
    os << '\n';
    for (const auto& row : t.rows) {
        for (std::size_t j = 0; j < row.size(); ++j) os << (j ? "," : "") << format_cell(row[j]);
        os << '\n';
    }
}

}  // namespace resdecay
